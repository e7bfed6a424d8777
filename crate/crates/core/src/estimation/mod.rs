//! Maximum likelihood estimation of `(λ, δ, μ, σ)` from a spell sample, with the
//! accepted-wage density estimated by kernel smoothing and held fixed as a
//! nuisance parameter, plus nonparametric bootstrap percentile intervals.

pub mod bootstrap;
pub mod fit;
pub mod kde;
pub mod likelihood;
pub mod report;

use serde::{Deserialize, Serialize};

pub use bootstrap::{bootstrap_ci, percentile_bootstrap, Interval, Intervals};
pub use fit::{mle_fit, prepare_sample, FitOptions, FitResult, PreparedSample, StartRecord};
pub use kde::{kernel_wage_density, KernelScale, WageDensityEstimate};
pub use likelihood::{loglik_employed, loglik_unemployed, SampleLikelihood, ThetaModel};

/// Structural parameters estimated from spell data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub lambda: f64,
    pub delta: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl Theta {
    pub const NAMES: [&'static str; 4] = ["lambda", "delta", "mu", "sigma"];

    /// Unconstrained coordinates `(log λ, log δ, μ, log σ)`.
    pub fn to_free(&self) -> [f64; 4] {
        [self.lambda.ln(), self.delta.ln(), self.mu, self.sigma.ln()]
    }

    pub fn from_free(x: &[f64]) -> Self {
        Self {
            lambda: x[0].exp(),
            delta: x[1].exp(),
            mu: x[2],
            sigma: x[3].exp(),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "lambda" => Some(self.lambda),
            "delta" => Some(self.delta),
            "mu" => Some(self.mu),
            "sigma" => Some(self.sigma),
            _ => None,
        }
    }

    pub fn values(&self) -> [f64; 4] {
        [self.lambda, self.delta, self.mu, self.sigma]
    }

    pub fn is_admissible(&self) -> bool {
        self.lambda > 0.0
            && self.delta > 0.0
            && self.sigma > 0.0
            && self.values().iter().all(|v| v.is_finite())
    }
}

impl From<&crate::equilibrium::SegmentParams> for Theta {
    fn from(p: &crate::equilibrium::SegmentParams) -> Self {
        Self {
            lambda: p.frictions.lambda,
            delta: p.frictions.delta,
            mu: p.reservation.mu,
            sigma: p.reservation.sigma,
        }
    }
}
