//! Exit criteria. Each test writes one `CRITERION n PASS|FAIL` line to stderr
//! (bypassing the test harness capture) and then asserts.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use wagesearch::decomposition::*;
use wagesearch::equilibrium::*;
use wagesearch::estimation::*;
use wagesearch::montecarlo::{validate_segment, ValidationOptions};
use wagesearch::quad::{cumulative_trapezoid, GridPos};
use wagesearch::simulator::{flow_sample_from, simulate_panel, SampleDesign};
use wagesearch::spell::{Destination, Origin, Spell};

fn report(n: usize, checks: &[(String, bool)]) -> bool {
    let ok = checks.iter().all(|c| c.1);
    let mut err = std::io::stderr().lock();
    writeln!(err, "CRITERION {n} {}", if ok { "PASS" } else { "FAIL" }).unwrap();
    for (what, pass) in checks {
        writeln!(err, "    [{}] {what}", if *pass { "ok" } else { "FAIL" }).unwrap();
    }
    ok
}

fn within_rel(got: f64, want: f64, tol: f64) -> bool {
    ((got - want) / want).abs() <= tol
}

#[test]
fn criterion_1_forward_equilibrium() {
    let mut checks = Vec::new();
    for (name, params, target) in [
        ("natives", SegmentParams::natives_dgp(), 0.1214),
        ("migrants", SegmentParams::migrants_dgp(), 0.1838),
    ] {
        let t = Instant::now();
        let eq = EquilibriumSolution::solve(&params, &SolverSettings::default()).unwrap();
        let el = t.elapsed();
        checks.push((format!("{name}: u = {:.5}, target {target} ± .001", eq.unemployment), (eq.unemployment - target).abs() <= 0.001));
        checks.push((format!("{name}: solve took {el:?} (< 10 s)"), el < Duration::from_secs(10)));
    }
    assert!(report(1, &checks));
}

#[test]
fn criterion_2_actual_decomposition() {
    let t = Instant::now();
    let d = decompose_pair(&SegmentPair::dgp(), &SolverSettings::default()).unwrap();
    let el = t.elapsed();
    let checks = vec![
        (format!("wage differential {:.3}, target 32.022 ± 1%", d.wage_differential), within_rel(d.wage_differential, 32.022, 0.01)),
        (format!("migrant effect {:.3}, target 6.825 ± 2%", d.migrant_effect), within_rel(d.migrant_effect, 6.825, 0.02)),
        (format!("runtime {el:?} (< 30 s)"), el < Duration::from_secs(30)),
    ];
    assert!(report(2, &checks));
}

#[test]
fn criterion_3_counterfactual_grid() {
    // (differential, effect) per row; rows 9+ share the productivity law
    let table: [(Option<f64>, f64); 15] = [
        (Some(32.022), 6.825),
        (Some(30.096), 3.747),
        (Some(28.973), 1.954),
        (Some(34.029), 10.032),
        (Some(27.423), -0.524),
        (Some(31.694), 6.300),
        (Some(30.459), 4.328),
        (Some(28.758), 1.610),
        (None, 4.904),
        (None, 1.932),
        (None, 0.750),
        (None, 7.814),
        (None, -1.842),
        (None, 4.400),
        (None, 2.741),
    ];
    let t = Instant::now();
    let grid = counterfactual_grid(&SegmentPair::dgp(), &SolverSettings::default()).unwrap();
    let el = t.elapsed();
    let mut checks = Vec::new();
    for id in [3usize, 8, 13] {
        let row = grid.row(id).unwrap();
        let (want_d, want_e) = table[id - 1];
        if let Some(want_d) = want_d {
            let got = row.reported_differential().unwrap();
            checks.push((format!("row {id} differential {got:.3}, target {want_d} ± 5%"), within_rel(got, want_d, 0.05)));
        }
        checks.push((format!("row {id} effect {:.3}, target {want_e} ± 5%", row.migrant_effect), within_rel(row.migrant_effect, want_e, 0.05)));
    }
    let mut signs_ok = true;
    for (i, (want_d, want_e)) in table.iter().enumerate() {
        let row = grid.row(i + 1).unwrap();
        signs_ok &= row.migrant_effect.signum() == want_e.signum();
        signs_ok &= match (want_d, row.reported_differential()) {
            (Some(w), Some(g)) => g.signum() == w.signum(),
            (None, None) => true,
            _ => false,
        };
    }
    checks.push(("signs of all 15 rows".to_string(), signs_ok));
    checks.push((format!("runtime {el:?} (< 5 min)"), el < Duration::from_secs(300)));
    assert!(report(3, &checks));
}

#[test]
fn criterion_4_estimation_validation() {
    // reported replicate means: (mu, sigma, lambda, delta, u)
    let reported = [
        ("natives", SegmentParams::natives_dgp(), [56.23, 8.61, 0.0887, 0.0050, 0.1145]),
        ("migrants", SegmentParams::migrants_dgp(), [40.88, 10.18, 0.1181, 0.0173, 0.1822]),
    ];
    let opts = ValidationOptions::default();
    let t = Instant::now();
    let mut checks = Vec::new();
    let mut covered = 0;
    let mut total = 0;
    for (j, (name, params, means)) in reported.iter().enumerate() {
        let v = validate_segment(name, j as u64, params, &opts).unwrap();
        checks.push((
            format!("{name}: {} of {} replicates converged", v.estimates.len(), opts.replicates),
            v.failures.is_empty(),
        ));
        for (k, pname) in ["mu", "sigma", "lambda", "delta", "u"].iter().enumerate() {
            let s = v.param(pname).unwrap();
            if *pname != "u" {
                total += 1;
                covered += s.covers_truth() as usize;
            }
            checks.push((
                format!(
                    "{name} {pname}: true {} in [{:.4}, {:.4}] {}; mean {:.4} vs reported {} ± 15%",
                    s.truth,
                    s.p2_5,
                    s.p97_5,
                    if s.covers_truth() { "yes" } else { "no" },
                    s.mean,
                    means[k]
                ),
                within_rel(s.mean, means[k], 0.15),
            ));
        }
        if j == 0 {
            let u = v.param("u").unwrap().mean;
            checks.push((format!("natives: mean implied u {u:.4} within .01 of .1214"), (u - 0.1214).abs() <= 0.01));
        }
    }
    let el = t.elapsed();
    checks.push((format!("{covered} of {total} true values inside replicate bands (need >= 7)"), covered >= 7));
    checks.push((format!("runtime {el:?} (< 30 min)"), el < Duration::from_secs(1800)));
    assert!(report(4, &checks));
}

#[test]
fn criterion_5_likelihood_battery() {
    let params = SegmentParams::natives_dgp();
    let eq = EquilibriumSolution::solve(&params, &SolverSettings::default()).unwrap();
    let d = WageDensityEstimate::from_tabulated(eq.curve.wage.clone(), eq.accepted.density.clone()).unwrap();
    let theta = Theta::from(&params);
    let model = ThetaModel::new(&theta, &d).unwrap();
    let spells = flow_sample_from(&eq, "N", SampleDesign::Stock { total: 4000 }, Some(300.0), 5, 0);
    let battery: Vec<&Spell> = spells.iter().filter(|s| s.origin == Origin::U).take(100).collect();
    assert_eq!(battery.len(), 100);

    // stratified Monte Carlo over b on [w_min, top]: 10^6 draws per spell, one
    // uniform draw in each of 10^6 equal strata
    let draws = 1_000_000;
    let k = model.frictions.k();
    let h = model.reservation;
    let worst = battery
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
            let top = if s.censored() { d.w_max() } else { s.wage.unwrap() };
            let (lo, t) = (d.w_min(), s.duration);
            let mut acc = 0.0;
            let width = (top - lo) / draws as f64;
            for j in 0..draws {
                let b = lo + width * (j as f64 + rng.random::<f64>());
                let f = GridPos::locate(&d.grid, b).eval(&model.implied.offer_survival);
                acc += h.pdf(b) * (-theta.lambda * f * t).exp() / (1.0 + k * f);
            }
            let mut mc = h.cdf(lo) * (-theta.lambda * t).exp() / (1.0 + k) + acc / draws as f64 * (top - lo);
            if !s.censored() {
                mc *= theta.lambda * GridPos::locate(&d.grid, top).eval(&model.implied.offer_density);
            }
            let got = loglik_unemployed(s, &theta, &d).unwrap().exp();
            (got / mc - 1.0).abs()
        })
        .reduce(|| 0.0, f64::max);

    // employment spells at the support ends, where F̄ = 1 and F̄ = 0
    let (lam, del) = (theta.lambda, theta.delta);
    let emp = model.implied.employment;
    let t = 90.0;
    let mut le_err: f64 = 0.0;
    for (w, s) in [(d.w_min(), 1.0), (d.w_max(), 0.0)] {
        let g = d.density_at(w);
        for (dest, want) in [
            (Destination::U, emp * g * del * (-(del + lam * s) * t).exp()),
            (Destination::Censored, emp * g * (-(del + lam * s) * t).exp()),
        ] {
            let spell = Spell::new("N", Origin::E, t, Some(w), dest).unwrap();
            let got = loglik_employed(&spell, &theta, &d).unwrap();
            le_err = le_err.max((got - want.ln()).abs());
        }
    }
    let w = d.w_min();
    let spell = Spell::new("N", Origin::E, t, Some(w), Destination::E).unwrap();
    let want = (emp * d.density_at(w) * lam * (-(del + lam) * t).exp()).ln();
    le_err = le_err.max((loglik_employed(&spell, &theta, &d).unwrap() - want).abs());

    let checks = vec![
        (format!("Lu quadrature vs Monte Carlo (10^6 draws, 100 spells): max rel err {worst:.2e} (< 1e-3)"), worst < 1e-3),
        (format!("Le limit cases: max abs log err {le_err:.2e} (< 1e-10)"), le_err < 1e-10),
    ];
    assert!(report(5, &checks));
}

#[test]
fn criterion_6_equilibrium_identities() {
    let mut checks = Vec::new();
    for (name, params) in [("natives", SegmentParams::natives_dgp()), ("migrants", SegmentParams::migrants_dgp())] {
        let eq = EquilibriumSolution::solve(&params, &SolverSettings::default()).unwrap();
        let c = &eq.curve;
        // F at K(p) from integrating the offer density over wages
        let f = cumulative_trapezoid(&c.wage, &c.offer_density);
        let sup = c
            .productivity
            .iter()
            .zip(&f)
            .map(|(&p, &fk)| (fk - c.law.cdf(p)).abs())
            .fold(0.0, f64::max);
        checks.push((format!("{name}: sup |F(K(p)) - Γ(p)| = {sup:.2e} (< 1e-4)"), sup < 1e-4));
        let below = c.wage.iter().zip(&c.productivity).all(|(w, p)| w <= p);
        checks.push((format!("{name}: K(p) <= p at all {} nodes", c.wage.len()), below));
        let snap = simulate_panel(&eq, 100_000, 5_000.0, 77);
        let u = snap.unemployment_rate();
        checks.push((format!("{name}: simulated cross-section u {u:.4} vs {:.4} (± .005)", eq.unemployment), (u - eq.unemployment).abs() <= 0.005));
    }
    let s = SolverSettings::default();
    let pair = SegmentPair::dgp();
    let r = solve_wage_offer_curve(&pair.reference, &s).unwrap();
    let c = solve_wage_offer_curve(&pair.comparison, &s).unwrap();
    let dec = decompose_curves(&r, &c).unwrap();
    let direct = direct_differential(&r, &c).unwrap();
    let resid = ((dec.migrant_effect + dec.productivity_term) - direct).abs() / direct.abs();
    checks.push((format!("decomposition identity relative residual {resid:.2e} (< 1e-3)"), resid < 1e-3));
    assert!(report(6, &checks));
}

#[test]
fn criterion_7_pareto_calibration() {
    let params = SegmentParams::natives_dgp();
    let eq = EquilibriumSolution::solve(&params, &SolverSettings::default()).unwrap();
    // target curve recovered from the wage density, with no use of the productivity law
    let (p, w) = estimated_offer_curve(&params.frictions, &params.reservation, &eq.curve.wage, &eq.accepted.density).unwrap();
    let cal = calibrate_pareto(&p, &w, params.frictions, params.reservation, &CalibrationOptions::default()).unwrap();
    let (pr, _, cdf) = recovered_productivity(&eq).unwrap();
    let alpha_ols = ols_pareto_alpha(&pr, &cdf, 0.01).unwrap();
    let checks = vec![
        (format!("calibrated p_min {:.4} (50 ± 0.5)", cal.p_min), (cal.p_min - 50.0).abs() <= 0.5),
        (format!("calibrated alpha {:.4} (2.1 ± 0.05)", cal.alpha), (cal.alpha - 2.1).abs() <= 0.05),
        (format!("OLS log-density alpha {alpha_ols:.4} (2.1 ± 0.15)"), (alpha_ols - 2.1).abs() <= 0.15),
    ];
    assert!(report(7, &checks));
}

#[test]
fn criterion_8_excluded_targets() {
    // confidential-data results have no reproducible target; the property
    // suites stand in for them
    let checks = vec![("no data-dependent targets; covered by the oracle and property suites".to_string(), true)];
    assert!(report(8, &checks));
}
