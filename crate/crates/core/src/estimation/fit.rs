use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::spell::{Destination, Origin, Spell};

use super::bootstrap::Intervals;
use super::kde::{kernel_wage_density_on, sample_quantile, KernelScale, WageDensityEstimate, DEFAULT_KDE_GRID};
use super::likelihood::{SampleLikelihood, ThetaModel};
use super::Theta;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Lower quantile of employment-spell wages cut before smoothing.
    pub truncation_q: f64,
    /// Multi-start count (seed, seed × 1.3, seed × 0.7, ...).
    pub starts: usize,
    pub max_iter: usize,
    /// Simplex diameter tolerance in `(log λ, log δ, μ, log σ)`.
    pub diameter_tol: f64,
    pub kde_grid: usize,
    pub kernel_scale: KernelScale,
    /// Relative perturbation of the moment seeds across starts.
    pub perturbation: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            truncation_q: 0.05,
            starts: 3,
            max_iter: 2000,
            diameter_tol: 1e-6,
            kde_grid: DEFAULT_KDE_GRID,
            kernel_scale: KernelScale::Log,
            perturbation: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub start: Theta,
    pub theta: Theta,
    pub loglik: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta: Theta,
    pub loglik: f64,
    /// Unemployment rate implied by `θ̂` and the wage density.
    pub unemployment: f64,
    pub n_used: usize,
    /// Spells whose wage falls outside the estimated wage support.
    pub n_dropped: usize,
    pub w_min: f64,
    pub w_max: f64,
    pub bandwidth: f64,
    pub truncation_q: f64,
    pub starts: Vec<StartRecord>,
    /// Coordinates along which the log likelihood has no detectable curvature.
    pub flat_directions: Vec<String>,
    pub intervals: Option<Intervals>,
}

impl FitResult {
    pub fn converged(&self) -> bool {
        self.starts.iter().any(|s| s.converged)
    }

    /// Fails when some direction of the likelihood is flat at the optimum.
    pub fn check_identified(&self) -> Result<()> {
        if self.flat_directions.is_empty() {
            Ok(())
        } else {
            Err(Error::Identification(format!(
                "log likelihood is flat in {}",
                self.flat_directions.join(", ")
            )))
        }
    }
}

/// Spells restricted to the wage support plus the density estimated from the
/// employment-spell wages.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub density: WageDensityEstimate,
    pub spells: Vec<Spell>,
    pub dropped: usize,
}

fn check_identifiable(spells: &[Spell]) -> Result<()> {
    if spells.is_empty() {
        return Err(Error::Identification("empty sample".into()));
    }
    if spells.iter().all(|s| s.censored()) {
        return Err(Error::Identification(
            "every spell is right-censored; no transition is observed".into(),
        ));
    }
    let count = |o: Origin, d: Destination| spells.iter().filter(|s| s.origin == o && s.destination == d).count();
    if !spells.iter().any(|s| s.origin == Origin::U) {
        return Err(Error::Identification(
            "no unemployment spells: the reservation-wage law (mu, sigma) and lambda are not identified".into(),
        ));
    }
    if !spells.iter().any(|s| s.origin == Origin::E) {
        return Err(Error::Identification(
            "no employment spells: the accepted-wage density and delta are not identified".into(),
        ));
    }
    for (o, d, what) in [
        (Origin::E, Destination::U, "job-to-unemployment"),
        (Origin::E, Destination::E, "job-to-job"),
        (Origin::U, Destination::E, "unemployment-to-job"),
    ] {
        if count(o, d) == 0 {
            return Err(Error::Identification(format!("no uncensored {what} transition in the sample")));
        }
    }
    Ok(())
}

pub fn prepare_sample(spells: &[Spell], options: &FitOptions) -> Result<PreparedSample> {
    check_identifiable(spells)?;
    let wages: Vec<f64> = spells
        .iter()
        .filter(|s| s.origin == Origin::E)
        .filter_map(|s| s.wage)
        .collect();
    let density = kernel_wage_density_on(&wages, options.truncation_q, options.kde_grid, options.kernel_scale)?;
    let kept: Vec<Spell> = spells
        .iter()
        .filter(|s| match (s.origin, s.wage) {
            (Origin::U, None) => true,
            (_, Some(w)) => density.contains(w),
            (Origin::E, None) => false,
        })
        .cloned()
        .collect();
    let dropped = spells.len() - kept.len();
    check_identifiable(&kept)?;
    Ok(PreparedSample { density, spells: kept, dropped })
}

/// Method-of-moments starting values: δ from job-to-unemployment exits, λ from
/// unemployment exits as if every offer were acceptable, and `(μ, σ)` placed
/// between the lowest wage and the median job wage.
pub fn moment_seeds(sample: &PreparedSample) -> Theta {
    let spells = &sample.spells;
    let sum_t = |o: Origin| spells.iter().filter(|s| s.origin == o).map(|s| s.duration).sum::<f64>();
    let exits = |o: Origin, d: Destination| {
        spells.iter().filter(|s| s.origin == o && s.destination == d).count() as f64
    };
    let delta = exits(Origin::E, Destination::U) / sum_t(Origin::E);
    let lambda = exits(Origin::U, Destination::E) / sum_t(Origin::U);
    let mut wages: Vec<f64> = spells
        .iter()
        .filter(|s| s.origin == Origin::E)
        .filter_map(|s| s.wage)
        .collect();
    wages.sort_by(f64::total_cmp);
    let median = sample_quantile(&wages, 0.5);
    let w_min = sample.density.w_min();
    let mu = w_min + 0.5 * (median - w_min);
    let sigma = ((median - w_min) / 3.0).max(1e-3 * median.abs().max(1.0));
    Theta { lambda, delta, mu, sigma }
}

fn start_points(seed: &Theta, starts: usize, perturbation: f64) -> Vec<Theta> {
    (0..starts.max(1))
        .map(|i| {
            let factor = match i {
                0 => 1.0,
                i if i % 2 == 1 => 1.0 + perturbation * i.div_ceil(2) as f64,
                i => (1.0 - perturbation * (i / 2) as f64).max(0.05),
            };
            Theta {
                lambda: seed.lambda * factor,
                delta: seed.delta * factor,
                mu: seed.mu * factor,
                sigma: seed.sigma * factor,
            }
        })
        .collect()
}

/// Maximum likelihood fit with `options.starts` Nelder–Mead runs from
/// perturbed moment seeds; the best converged run wins.
pub fn mle_fit(spells: &[Spell], options: &FitOptions) -> Result<FitResult> {
    let sample = prepare_sample(spells, options)?;
    let seed = moment_seeds(&sample);
    let starts = start_points(&seed, options.starts, options.perturbation);
    fit_prepared(&sample, options, &starts)
}

/// Fit from explicit starting points.
pub fn mle_fit_from(spells: &[Spell], options: &FitOptions, starts: &[Theta]) -> Result<FitResult> {
    let sample = prepare_sample(spells, options)?;
    fit_prepared(&sample, options, starts)
}

pub fn fit_prepared(sample: &PreparedSample, options: &FitOptions, starts: &[Theta]) -> Result<FitResult> {
    let lik = SampleLikelihood::new(&sample.spells, &sample.density)?;
    let objective = |x: &[f64]| -lik.total(&Theta::from_free(x));

    let mut records = Vec::with_capacity(starts.len());
    for start in starts {
        let x0 = start.to_free();
        let nm = NelderMeadOptions {
            step: vec![0.25, 0.25, 0.25 * start.sigma.max(1e-3), 0.25],
            diameter_tol: options.diameter_tol,
            max_iter: options.max_iter,
        };
        let r = nelder_mead(objective, &x0, &nm);
        records.push(StartRecord {
            start: *start,
            theta: Theta::from_free(&r.x),
            loglik: -r.value,
            iterations: r.iterations,
            evaluations: r.evaluations,
            converged: r.converged && r.value.is_finite(),
        });
    }
    let best = records
        .iter()
        .filter(|r| r.converged)
        .max_by(|a, b| a.loglik.total_cmp(&b.loglik))
        .ok_or(Error::NoConvergence { starts: records.len() })?;
    let theta = best.theta;
    let loglik = best.loglik;
    let model = ThetaModel::new(&theta, &sample.density)?;

    let x = theta.to_free();
    let f0 = objective(&x);
    let mut flat = Vec::new();
    for (i, name) in Theta::NAMES.iter().enumerate() {
        let step = if i == 2 { 1e-3 * theta.sigma } else { 1e-3 };
        let mut up = x;
        up[i] += step;
        let mut down = x;
        down[i] -= step;
        let curvature = (objective(&up) - 2.0 * f0 + objective(&down)) / (step * step);
        let scale = if i == 2 { theta.sigma * theta.sigma } else { 1.0 };
        if !(curvature * scale > 1e-6) {
            flat.push((*name).to_string());
        }
    }

    Ok(FitResult {
        theta,
        loglik,
        unemployment: model.unemployment(),
        n_used: sample.spells.len(),
        n_dropped: sample.dropped,
        w_min: sample.density.w_min(),
        w_max: sample.density.w_max(),
        bandwidth: sample.density.bandwidth,
        truncation_q: options.truncation_q,
        starts: records,
        flat_directions: flat,
        intervals: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spell(o: Origin, t: f64, w: Option<f64>, d: Destination) -> Spell {
        Spell::new("x", o, t, w, d).unwrap()
    }

    #[test]
    fn identification_errors_are_explicit() {
        let only_e: Vec<Spell> = (0..100)
            .map(|i| spell(Origin::E, 10.0 + i as f64, Some(50.0 + i as f64), Destination::U))
            .collect();
        let err = mle_fit(&only_e, &FitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Identification(ref m) if m.contains("no unemployment spells")), "{err}");

        let censored: Vec<Spell> = (0..100)
            .map(|i| spell(Origin::E, 10.0, Some(50.0 + i as f64), Destination::Censored))
            .collect();
        assert!(matches!(mle_fit(&censored, &FitOptions::default()), Err(Error::Identification(_))));
        assert!(matches!(mle_fit(&[], &FitOptions::default()), Err(Error::Identification(_))));
    }

    #[test]
    fn start_points_perturb_symmetrically() {
        let seed = Theta { lambda: 0.1, delta: 0.01, mu: 50.0, sigma: 10.0 };
        let s = start_points(&seed, 3, 0.3);
        assert_eq!(s[0], seed);
        assert!((s[1].mu - 65.0).abs() < 1e-12);
        assert!((s[2].mu - 35.0).abs() < 1e-12);
    }
}
