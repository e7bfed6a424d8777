//! Replicate-and-refit validation: draw samples from a known segment, estimate
//! each one and summarise the sampling distribution of the estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{EquilibriumSolution, SegmentParams, SolverSettings};
use crate::error::Result;
use crate::estimation::kde::sample_quantile;
use crate::estimation::{mle_fit, FitOptions, Theta};
use crate::rng::derive_seed;
use crate::simulator::{flow_sample_from, SampleDesign};
use crate::spell::Spell;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub replicates: usize,
    pub sample_size: usize,
    pub seed: u64,
    pub censor_horizon: Option<f64>,
    pub fit: FitOptions,
    pub solver: SolverSettings,
}

impl Default for ValidationOptions {
    /// Simulated wages have no contaminated lower tail, so the fits keep the
    /// whole wage sample.
    fn default() -> Self {
        Self {
            replicates: 50,
            sample_size: 2000,
            seed: 20_240_601,
            censor_horizon: None,
            fit: FitOptions { truncation_q: 0.0, ..FitOptions::default() },
            solver: SolverSettings::default(),
        }
    }
}

/// Seed of replicate `r`; the segment index selects the stream within it.
pub fn replicate_seed(seed: u64, replicate: usize) -> u64 {
    derive_seed(seed, replicate as u64)
}

/// Sample `replicate` of segment number `segment_index`.
pub fn replicate_sample(
    eq: &EquilibriumSolution,
    segment_id: &str,
    segment_index: u64,
    replicate: usize,
    options: &ValidationOptions,
) -> Vec<Spell> {
    flow_sample_from(
        eq,
        segment_id,
        SampleDesign::Stock { total: options.sample_size },
        options.censor_horizon,
        replicate_seed(options.seed, replicate),
        segment_index,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateEstimate {
    pub replicate: usize,
    pub theta: Theta,
    pub unemployment: f64,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub median: f64,
    pub p2_5: f64,
    pub p97_5: f64,
}

impl ParamSummary {
    fn from_draws(name: &str, truth: f64, draws: &[f64]) -> Self {
        let mut v: Vec<f64> = draws.iter().copied().filter(|x| x.is_finite()).collect();
        v.sort_by(f64::total_cmp);
        let (mean, median, p2_5, p97_5) = if v.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        } else {
            (
                v.iter().sum::<f64>() / v.len() as f64,
                sample_quantile(&v, 0.5),
                sample_quantile(&v, 0.025),
                sample_quantile(&v, 0.975),
            )
        };
        Self { name: name.to_string(), truth, mean, median, p2_5, p97_5 }
    }

    pub fn covers_truth(&self) -> bool {
        self.truth >= self.p2_5 && self.truth <= self.p97_5
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentValidation {
    pub segment_id: String,
    pub truth: Theta,
    pub true_unemployment: f64,
    pub estimates: Vec<ReplicateEstimate>,
    /// `(replicate, error message)` for replicates whose fit failed.
    pub failures: Vec<(usize, String)>,
}

impl SegmentValidation {
    /// Rows for λ, δ, μ, σ and u.
    pub fn summary(&self) -> Vec<ParamSummary> {
        let col = |f: &dyn Fn(&ReplicateEstimate) -> f64| self.estimates.iter().map(f).collect::<Vec<_>>();
        let mut rows: Vec<ParamSummary> = Theta::NAMES
            .iter()
            .map(|&n| ParamSummary::from_draws(n, self.truth.get(n).unwrap(), &col(&|e| e.theta.get(n).unwrap())))
            .collect();
        rows.push(ParamSummary::from_draws("u", self.true_unemployment, &col(&|e| e.unemployment)));
        rows
    }

    pub fn param(&self, name: &str) -> Option<ParamSummary> {
        self.summary().into_iter().find(|r| r.name == name)
    }

    /// Structural parameters whose true value lies inside the replicate band.
    pub fn covered(&self) -> usize {
        self.summary()
            .iter()
            .filter(|r| r.name != "u" && r.covers_truth())
            .count()
    }
}

/// Draw `options.replicates` samples of segment `segment_index` and fit each.
pub fn validate_segment(
    segment_id: &str,
    segment_index: u64,
    params: &SegmentParams,
    options: &ValidationOptions,
) -> Result<SegmentValidation> {
    let eq = EquilibriumSolution::solve(params, &options.solver)?;
    let outcomes: Vec<(usize, Result<ReplicateEstimate>)> = (0..options.replicates)
        .into_par_iter()
        .map(|r| {
            let spells = replicate_sample(&eq, segment_id, segment_index, r, options);
            let fit = mle_fit(&spells, &options.fit).map(|f| ReplicateEstimate {
                replicate: r,
                theta: f.theta,
                unemployment: f.unemployment,
                loglik: f.loglik,
            });
            (r, fit)
        })
        .collect();
    let mut estimates = Vec::new();
    let mut failures = Vec::new();
    for (r, o) in outcomes {
        match o {
            Ok(e) => estimates.push(e),
            Err(e) => failures.push((r, e.to_string())),
        }
    }
    Ok(SegmentValidation {
        segment_id: segment_id.to_string(),
        truth: Theta::from(params),
        true_unemployment: eq.unemployment,
        estimates,
        failures,
    })
}

/// Validate several segments with a shared seed; segment `j` uses stream `j`.
pub fn run_validation(segments: &[(String, SegmentParams)], options: &ValidationOptions) -> Result<Vec<SegmentValidation>> {
    segments
        .iter()
        .enumerate()
        .map(|(j, (id, p))| validate_segment(id, j as u64, p, options))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        let draws: Vec<f64> = (1..=101).map(|i| i as f64).collect();
        let s = ParamSummary::from_draws("mu", 50.0, &draws);
        assert_eq!(s.mean, 51.0);
        assert_eq!(s.median, 51.0);
        assert!((s.p2_5 - 3.5).abs() < 1e-12 && (s.p97_5 - 98.5).abs() < 1e-12);
        assert!(s.covers_truth());
        assert!(!ParamSummary::from_draws("mu", 0.0, &draws).covers_truth());
    }

    #[test]
    fn zero_replicates_give_empty_report() {
        let opts = ValidationOptions { replicates: 0, ..Default::default() };
        let v = validate_segment("N", 0, &SegmentParams::natives_dgp(), &opts).unwrap();
        assert!(v.estimates.is_empty() && v.failures.is_empty());
        assert!((v.true_unemployment - 0.1214).abs() < 1e-3);
    }
}
