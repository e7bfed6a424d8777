use wagesearch::dist::ParetoProductivity;
use wagesearch::equilibrium::*;
use wagesearch::quad::GaussLegendre;
use wagesearch::simulator::*;
use wagesearch::spell::{Destination, Origin, Spell};

fn solve(p: &SegmentParams) -> EquilibriumSolution {
    EquilibriumSolution::solve(p, &SolverSettings::default()).unwrap()
}

fn ks_distance(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Expectation over the accepted-wage distribution by quadrature on the G grid.
fn expect_over_g(eq: &EquilibriumSolution, f: impl Fn(f64) -> f64) -> f64 {
    let w = &eq.curve.wage;
    let g = &eq.accepted.density;
    let mut acc = 0.0;
    for i in 1..w.len() {
        acc += 0.5 * (w[i] - w[i - 1]) * (f(w[i]) * g[i] + f(w[i - 1]) * g[i - 1]);
    }
    acc
}

#[test]
fn homogeneous_workers_leave_unemployment_at_rate_lambda() {
    let prod = Some(ParetoProductivity::new(50.0, 2.1).unwrap());
    let eq = solve(&SegmentParams::new(0.07, 0.005, 30.0, 1e-9, prod).unwrap());
    let spells = flow_sample_from(&eq, "h", SampleDesign::Counts { unemployed: 20_000, employed: 0 }, None, 5, 0);
    let mut t: Vec<f64> = spells.iter().map(|s| s.duration).collect();
    let mean = t.iter().sum::<f64>() / t.len() as f64;
    assert!((mean * 0.07 - 1.0).abs() < 0.03, "mean duration {mean}");
    let d = ks_distance(&mut t, |x| 1.0 - (-0.07 * x).exp());
    assert!(d < 1.63 / (20_000f64).sqrt(), "KS {d}");
}

#[test]
fn unemployment_durations_follow_the_pool_mixture() {
    let params = SegmentParams::natives_dgp();
    let eq = solve(&params);
    let lam = params.frictions.lambda;
    let k = params.frictions.k();
    let h = params.reservation;
    let gl = GaussLegendre::new(64);
    let mass = eq.pool.employable_mass();
    // survival of the mixture split into pieces of the offer support
    let cuts: Vec<f64> = (0..=40).map(|i| eq.w_min() + (eq.w_max() - eq.w_min()) * i as f64 / 40.0).collect();
    let survival = |t: f64| {
        let mut s = eq.pool.point_mass * (-lam * t).exp();
        for c in cuts.windows(2) {
            s += gl.integrate(c[0], c[1], |b| {
                let f = eq.curve.survival_at(b);
                (-lam * f * t).exp() * h.pdf(b) / (1.0 + k * f)
            });
        }
        s / mass
    };
    let n = 20_000;
    let spells = flow_sample_from(&eq, "n", SampleDesign::Counts { unemployed: n, employed: 0 }, None, 6, 0);
    let mut t: Vec<f64> = spells.iter().map(|s| s.duration).collect();
    let d = ks_distance(&mut t, |x| 1.0 - survival(x));
    assert!(d < 1.63 / (n as f64).sqrt(), "KS {d}");
    for s in &spells {
        assert!(s.wage.unwrap() >= eq.w_min() && s.wage.unwrap() <= eq.w_max());
    }
}

#[test]
fn employment_spells_match_competing_risks() {
    let params = SegmentParams::migrants_dgp();
    let eq = solve(&params);
    let (lam, del) = (params.frictions.lambda, params.frictions.delta);
    let n = 40_000;
    let spells = flow_sample_from(&eq, "f", SampleDesign::Counts { unemployed: 0, employed: n }, None, 7, 0);
    let share_u = spells.iter().filter(|s| s.destination == Destination::U).count() as f64 / n as f64;
    let p_u = expect_over_g(&eq, |w| del / (del + lam * eq.curve.survival_at(w)));
    let se = (p_u * (1.0 - p_u) / n as f64).sqrt();
    assert!((share_u - p_u).abs() < 4.0 * se, "E->U share {share_u} vs {p_u}");

    let mean_t = spells.iter().map(|s| s.duration).sum::<f64>() / n as f64;
    let m1 = expect_over_g(&eq, |w| 1.0 / (del + lam * eq.curve.survival_at(w)));
    let m2 = expect_over_g(&eq, |w| 2.0 / (del + lam * eq.curve.survival_at(w)).powi(2));
    let se = ((m2 - m1 * m1) / n as f64).sqrt();
    assert!((mean_t - m1).abs() < 4.0 * se, "mean duration {mean_t} vs {m1}");

    let mut w: Vec<f64> = spells.iter().map(|s| s.wage.unwrap()).collect();
    let d = ks_distance(&mut w, |x| eq.accepted_cdf_at(x));
    assert!(d < 1.63 / (n as f64).sqrt(), "wage KS {d}");
}

#[test]
fn stock_design_samples_unemployed_at_model_share() {
    let eq = solve(&SegmentParams::natives_dgp());
    let n = 50_000;
    let spells = flow_sample_from(&eq, "n", SampleDesign::Stock { total: n }, None, 8, 0);
    let share = unemployed_sampling_share(&eq);
    let got = spells.iter().filter(|s| s.origin == Origin::U).count() as f64 / n as f64;
    let se = (share * (1.0 - share) / n as f64).sqrt();
    assert!((got - share).abs() < 4.0 * se, "{got} vs {share}");
}

#[test]
fn long_run_panel_reaches_steady_state() {
    let eq = solve(&SegmentParams::natives_dgp());
    let snap = simulate_panel(&eq, 100_000, 5_000.0, 9);
    assert!((snap.unemployment_rate() - eq.unemployment).abs() < 0.005, "{} vs {}", snap.unemployment_rate(), eq.unemployment);
    assert_eq!(snap.wage_cuts, 0);
    assert!(snap.job_to_job_moves > 0);
    let mut w = snap.employed_wages.clone();
    let d = ks_distance(&mut w, |x| eq.accepted_cdf_at(x));
    assert!(d < 0.01, "cross-section wage KS {d}");
}

#[test]
fn samples_are_reproducible_and_thread_independent() {
    let eq = solve(&SegmentParams::natives_dgp());
    let run = |threads: usize| -> Vec<Spell> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| flow_sample_from(&eq, "n", SampleDesign::Stock { total: 3000 }, Some(400.0), 42, 3))
    };
    let a = run(1);
    assert_eq!(a, run(3));
    assert_eq!(a, run(1));
    let other = flow_sample_from(&eq, "n", SampleDesign::Stock { total: 3000 }, Some(400.0), 42, 4);
    assert_ne!(a, other);
}

#[test]
fn generate_flow_sample_solves_and_samples() {
    let mut cfg = SimConfig::new("N", SegmentParams::natives_dgp(), SampleDesign::Stock { total: 2000 }, 1);
    cfg.replicate = 2;
    let spells = generate_flow_sample(&cfg).unwrap();
    assert_eq!(spells.len(), 2000);
    assert!(spells.iter().all(|s| s.segment_id == "N" && s.duration > 0.0));
    let eq = solve(&cfg.segment);
    assert_eq!(spells, flow_sample_from(&eq, "N", cfg.design, None, 1, 2));
}
