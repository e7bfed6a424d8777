use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wagesearch::equilibrium::*;
use wagesearch::error::Error;
use wagesearch::estimation::*;
use wagesearch::quad::GridPos;
use wagesearch::simulator::{flow_sample_from, SampleDesign};
use wagesearch::spell::{Destination, Origin, Spell};

fn true_density(eq: &EquilibriumSolution) -> WageDensityEstimate {
    WageDensityEstimate::from_tabulated(eq.curve.wage.clone(), eq.accepted.density.clone()).unwrap()
}

fn sample(params: &SegmentParams, n: usize, seed: u64) -> (EquilibriumSolution, Vec<Spell>) {
    let eq = EquilibriumSolution::solve(params, &SolverSettings::default()).unwrap();
    let spells = flow_sample_from(&eq, "s", SampleDesign::Stock { total: n }, None, seed, 0);
    (eq, spells)
}

/// Stratified Monte Carlo version of the unemployment-spell likelihood:
/// `λ f(w) [H(w_min) e^{-λt}/(1+k) + ∫ h(b) e^{-λF̄(b)t}/(1+kF̄(b)) db]` with
/// the integral over `[w_min, w]` (or the whole support when censored).
fn lu_monte_carlo(spell: &Spell, model: &ThetaModel, d: &WageDensityEstimate, draws: usize, rng: &mut ChaCha8Rng) -> f64 {
    let Theta { lambda, .. } = model.theta;
    let k = model.frictions.k();
    let h = model.reservation;
    let t = spell.duration;
    let lo = d.w_min();
    let hi = match (spell.destination, spell.wage) {
        (Destination::Censored, _) | (_, None) => d.w_max(),
        (_, Some(w)) => w,
    };
    let surv = |b: f64| GridPos::locate(&d.grid, b).eval(&model.implied.offer_survival);
    let width = (hi - lo) / draws as f64;
    let mut integral = 0.0;
    for i in 0..draws {
        let b = lo + width * (i as f64 + rng.random::<f64>());
        let s = surv(b);
        integral += h.pdf(b) * (-lambda * s * t).exp() / (1.0 + k * s);
    }
    let mut total = h.cdf(lo) * (-lambda * t).exp() / (1.0 + k) + integral * width;
    if !spell.censored() {
        let w = spell.wage.unwrap();
        total *= lambda * GridPos::locate(&d.grid, w).eval(&model.implied.offer_density);
    }
    total
}

#[test]
fn unemployment_contribution_matches_monte_carlo() {
    let params = SegmentParams::natives_dgp();
    let (eq, spells) = sample(&params, 4000, 11);
    let d = true_density(&eq);
    let theta = Theta::from(&params);
    let model = ThetaModel::new(&theta, &d).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for s in spells.iter().filter(|s| s.origin == Origin::U).take(100) {
        let got = loglik_unemployed(s, &theta, &d).unwrap();
        let oracle = lu_monte_carlo(s, &model, &d, 200_000, &mut rng).ln();
        assert!((got.exp() / oracle.exp() - 1.0).abs() < 1e-3, "t = {}: {got} vs {oracle}", s.duration);
        checked += 1;
    }
    assert!(checked >= 100);

    // censored spells integrate over the whole support
    for t in [1.0, 30.0, 400.0] {
        let s = Spell::new("s", Origin::U, t, None, Destination::Censored).unwrap();
        let got = loglik_unemployed(&s, &theta, &d).unwrap();
        let oracle = lu_monte_carlo(&s, &model, &d, 200_000, &mut rng).ln();
        assert!((got - oracle).abs() < 1e-3, "censored t = {t}: {got} vs {oracle}");
    }
}

#[test]
fn employment_contribution_has_closed_form() {
    let params = SegmentParams::migrants_dgp();
    let (eq, _) = sample(&params, 10, 1);
    let d = true_density(&eq);
    let theta = Theta::from(&params);
    let model = ThetaModel::new(&theta, &d).unwrap();
    let (lam, del) = (theta.lambda, theta.delta);
    for &q in &[0.1, 0.5, 0.9] {
        let w = d.w_min() + q * (d.w_max() - d.w_min());
        let g = d.density_at(w);
        let s = GridPos::locate(&d.grid, w).eval(&model.implied.offer_survival);
        let t = 120.0;
        let base = (model.implied.employment * g).ln() - (del + lam * s) * t;
        for (dest, extra) in [(Destination::U, del.ln()), (Destination::E, (lam * s).ln()), (Destination::Censored, 0.0)] {
            let spell = Spell::new("s", Origin::E, t, Some(w), dest).unwrap();
            let got = loglik_employed(&spell, &theta, &d).unwrap();
            assert!((got - (base + extra)).abs() < 1e-10, "{dest:?} at {w}: {got} vs {}", base + extra);
        }
    }
}

#[test]
fn sample_total_agrees_with_spell_contributions() {
    let params = SegmentParams::natives_dgp();
    let (eq, spells) = sample(&params, 300, 12);
    let d = true_density(&eq);
    let theta = Theta::from(&params);
    let by_spell: f64 = spells
        .iter()
        .map(|s| match s.origin {
            Origin::U => loglik_unemployed(s, &theta, &d).unwrap(),
            Origin::E => loglik_employed(s, &theta, &d).unwrap(),
        })
        .sum();
    let total = SampleLikelihood::new(&spells, &d).unwrap().total(&theta);
    assert!((total - by_spell).abs() < 1e-8 * by_spell.abs(), "{total} vs {by_spell}");
}

#[test]
fn truth_beats_distorted_parameters() {
    for params in [SegmentParams::natives_dgp(), SegmentParams::migrants_dgp()] {
        let (eq, spells) = sample(&params, 5000, 13);
        let d = true_density(&eq);
        let lik = SampleLikelihood::new(&spells, &d).unwrap();
        let truth = Theta::from(&params);
        let at_truth = lik.total(&truth);
        for bad in [
            Theta { lambda: 2.0 * truth.lambda, ..truth },
            Theta { delta: 2.0 * truth.delta, ..truth },
            Theta { delta: 0.5 * truth.delta, ..truth },
            Theta { mu: truth.mu - 10.0, ..truth },
        ] {
            let v = lik.total(&bad);
            assert!(v < at_truth, "{bad:?}: {v} >= {at_truth}");
        }
    }
}

#[test]
fn profile_in_delta_peaks_near_truth() {
    let params = SegmentParams::migrants_dgp();
    let (eq, spells) = sample(&params, 10_000, 14);
    let d = true_density(&eq);
    let lik = SampleLikelihood::new(&spells, &d).unwrap();
    let truth = Theta::from(&params);
    let best = (0..=60)
        .map(|i| truth.delta * (0.6 + 0.8 * i as f64 / 60.0))
        .map(|delta| (lik.total(&Theta { delta, ..truth }), delta))
        .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    assert!((best.1 / truth.delta - 1.0).abs() < 0.10, "profile peak at {}", best.1);
}

#[test]
fn fitted_likelihood_dominates_truth() {
    let params = SegmentParams::migrants_dgp();
    let (_, spells) = sample(&params, 2000, 15);
    let opts = FitOptions { truncation_q: 0.0, ..FitOptions::default() };
    let fit = mle_fit(&spells, &opts).unwrap();
    assert!(fit.converged());
    let prepared = prepare_sample(&spells, &opts).unwrap();
    let lik = SampleLikelihood::new(&prepared.spells, &prepared.density).unwrap();
    let at_truth = lik.total(&Theta::from(&params));
    assert!(fit.loglik >= at_truth - 1e-6, "{} < {at_truth}", fit.loglik);
    assert_eq!(fit.n_used + fit.n_dropped, spells.len());
}

#[test]
fn separation_rate_matches_occurrence_exposure() {
    let params = SegmentParams::migrants_dgp();
    let (_, spells) = sample(&params, 10_000, 16);
    let opts = FitOptions { truncation_q: 0.0, starts: 2, ..FitOptions::default() };
    let fit = mle_fit(&spells, &opts).unwrap();
    let e: Vec<&Spell> = spells.iter().filter(|s| s.origin == Origin::E).collect();
    let exits = e.iter().filter(|s| s.destination == Destination::U).count() as f64;
    let exposure: f64 = e.iter().map(|s| s.duration).sum();
    let rate = exits / exposure;
    assert!((fit.theta.delta / rate - 1.0).abs() < 0.05, "δ̂ {} vs exits/exposure {rate}", fit.theta.delta);
    assert!((fit.theta.delta / params.frictions.delta - 1.0).abs() < 0.15);
}

#[test]
fn bootstrap_is_reproducible() {
    let params = SegmentParams::migrants_dgp();
    let (_, spells) = sample(&params, 800, 17);
    let opts = FitOptions { truncation_q: 0.0, starts: 1, ..FitOptions::default() };
    let fit = mle_fit(&spells, &opts).unwrap();
    let a = bootstrap_ci(&spells, &fit, 4, 99, &opts).unwrap();
    let b = bootstrap_ci(&spells, &fit, 4, 99, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.replicates, 4);
    assert!(a.lambda.lo <= a.lambda.hi && a.mu.lo <= a.mu.hi);
}

#[test]
fn sample_without_unemployment_is_not_identified() {
    let params = SegmentParams::natives_dgp();
    let (_, spells) = sample(&params, 2000, 18);
    let employed: Vec<Spell> = spells.into_iter().filter(|s| s.origin == Origin::E).collect();
    match mle_fit(&employed, &FitOptions::default()) {
        Err(Error::Identification(msg)) => assert!(msg.contains("unemployment"), "{msg}"),
        other => panic!("expected an identification error, got {other:?}"),
    }
}

#[test]
fn censored_unemployment_spell_with_wage_is_rejected() {
    let params = SegmentParams::natives_dgp();
    let (eq, _) = sample(&params, 10, 1);
    let d = true_density(&eq);
    let s = Spell::new("s", Origin::U, 10.0, Some(60.0), Destination::Censored).unwrap();
    assert!(matches!(loglik_unemployed(&s, &Theta::from(&params), &d), Err(Error::Schema(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn unemployment_survival_decreases_in_duration(
        lambda in 0.02f64..0.3,
        delta in 0.002f64..0.03,
        mu in 40.0f64..70.0,
        sigma in 4.0f64..15.0,
        t in 1.0f64..500.0,
    ) {
        let eq = EquilibriumSolution::solve(&SegmentParams::natives_dgp(), &SolverSettings { grid_points: 400, root_tol: 1e-10 }).unwrap();
        let d = true_density(&eq);
        let theta = Theta { lambda, delta, mu, sigma };
        prop_assume!(ThetaModel::new(&theta, &d).is_ok());
        let at = |t: f64| {
            let s = Spell::new("s", Origin::U, t, None, Destination::Censored).unwrap();
            loglik_unemployed(&s, &theta, &d).unwrap()
        };
        let (a, b) = (at(t), at(1.5 * t));
        prop_assert!(a.is_finite() && b.is_finite());
        prop_assert!(b < a);
        prop_assert!(a <= 0.0);
    }
}
