use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::spell::Spell;

use super::fit::{fit_prepared, prepare_sample, FitOptions, FitResult};
use super::kde::sample_quantile;
use super::Theta;

/// Replicate failure share above which intervals are flagged.
pub const MAX_FAILURE_SHARE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// 2.5% and 97.5% points of a set of draws.
pub fn percentile_interval(draws: &[f64]) -> Interval {
    let mut v: Vec<f64> = draws.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return Interval { lo: f64::NAN, hi: f64::NAN };
    }
    Interval {
        lo: sample_quantile(&v, 0.025),
        hi: sample_quantile(&v, 0.975),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intervals {
    pub lambda: Interval,
    pub delta: Interval,
    pub mu: Interval,
    pub sigma: Interval,
    pub unemployment: Interval,
    pub replicates: usize,
    pub failures: usize,
    /// Set when more than [`MAX_FAILURE_SHARE`] of the replicates failed.
    pub flagged: bool,
}

impl Intervals {
    pub fn get(&self, name: &str) -> Option<Interval> {
        match name {
            "lambda" => Some(self.lambda),
            "delta" => Some(self.delta),
            "mu" => Some(self.mu),
            "sigma" => Some(self.sigma),
            "u" | "unemployment" => Some(self.unemployment),
            _ => None,
        }
    }
}

/// Resample `data` with replacement `replicates` times and evaluate `stat` on
/// each resample. Replicate `r` draws its indices from stream `(seed, r, 0)`.
pub fn percentile_bootstrap<T, S, F>(data: &[T], replicates: usize, seed: u64, stat: F) -> Vec<Result<S>>
where
    T: Clone + Sync,
    S: Send,
    F: Fn(&[T]) -> Result<S> + Sync,
{
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r as u64, 0);
            let n = data.len();
            let resample: Vec<T> = (0..n).map(|_| data[rng.random_range(0..n)].clone()).collect();
            stat(&resample)
        })
        .collect()
}

/// Nonparametric bootstrap over spells. Each replicate re-estimates the wage
/// density and refits from the full-sample estimate.
pub fn bootstrap_ci(
    spells: &[Spell],
    fit: &FitResult,
    replicates: usize,
    seed: u64,
    options: &FitOptions,
) -> Result<Intervals> {
    if !fit.converged() {
        return Err(Error::NoConvergence { starts: fit.starts.len() });
    }
    let start = [fit.theta];
    let results = percentile_bootstrap(spells, replicates, seed, |resample| {
        let sample = prepare_sample(resample, options)?;
        fit_prepared(&sample, options, &start)
    });
    let fits: Vec<FitResult> = results.into_iter().filter_map(|r| r.ok()).collect();
    let failures = replicates - fits.len();
    let column = |f: &dyn Fn(&Theta) -> f64| percentile_interval(&fits.iter().map(|r| f(&r.theta)).collect::<Vec<_>>());
    Ok(Intervals {
        lambda: column(&|t| t.lambda),
        delta: column(&|t| t.delta),
        mu: column(&|t| t.mu),
        sigma: column(&|t| t.sigma),
        unemployment: percentile_interval(&fits.iter().map(|r| r.unemployment).collect::<Vec<_>>()),
        replicates,
        failures,
        flagged: replicates > 0 && failures as f64 > MAX_FAILURE_SHARE * replicates as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_data_give_zero_width() {
        let data = vec![4.2_f64; 50];
        let means: Vec<f64> = percentile_bootstrap(&data, 100, 3, |x| Ok(x.iter().sum::<f64>() / x.len() as f64))
            .into_iter()
            .map(|r| r.unwrap())
            .collect();
        let iv = percentile_interval(&means);
        assert_eq!(iv.width(), 0.0);
        assert!((iv.lo - 4.2).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_is_seed_deterministic() {
        let data: Vec<f64> = (0..200).map(|i| (i as f64).sin()).collect();
        let stat = |x: &[f64]| Ok(x.iter().sum::<f64>());
        let a: Vec<f64> = percentile_bootstrap(&data, 50, 9, stat).into_iter().map(|r| r.unwrap()).collect();
        let b: Vec<f64> = percentile_bootstrap(&data, 50, 9, stat).into_iter().map(|r| r.unwrap()).collect();
        assert_eq!(a, b);
        let c: Vec<f64> = percentile_bootstrap(&data, 50, 10, stat).into_iter().map(|r| r.unwrap()).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn percentile_interval_is_ordered() {
        let draws: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64).collect();
        let iv = percentile_interval(&draws);
        assert!(iv.lo < iv.hi);
        assert!((iv.lo - 24.975).abs() < 1e-9 && (iv.hi - 974.025).abs() < 1e-9);
    }
}
