//! Reservation-wage and productivity laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard deviations below this are treated as a point mass at the mean.
pub const DEGENERATE_SIGMA: f64 = 1e-6;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

pub fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal quantile: Acklam's rational approximation polished by one
/// Halley step against the erfc-based CDF.
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = std_normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Normal distribution of reservation wages `b` across workers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservationWageDist {
    pub mu: f64,
    pub sigma: f64,
}

impl ReservationWageDist {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "reservation wage law needs finite mu and sigma > 0 (got mu = {mu}, sigma = {sigma})"
            )));
        }
        Ok(Self { mu, sigma })
    }

    /// True when `sigma` is below [`DEGENERATE_SIGMA`]; `H` is then a step at `mu`.
    pub fn is_degenerate(&self) -> bool {
        self.sigma < DEGENERATE_SIGMA
    }

    pub fn cdf(&self, b: f64) -> f64 {
        if self.is_degenerate() {
            return if b >= self.mu { 1.0 } else { 0.0 };
        }
        std_normal_cdf((b - self.mu) / self.sigma)
    }

    /// Density of the continuous part; zero for a point mass.
    pub fn pdf(&self, b: f64) -> f64 {
        if self.is_degenerate() {
            return 0.0;
        }
        std_normal_pdf((b - self.mu) / self.sigma) / self.sigma
    }

    pub fn quantile(&self, q: f64) -> f64 {
        if self.is_degenerate() {
            return self.mu;
        }
        self.mu + self.sigma * std_normal_quantile(q)
    }
}

/// Pareto productivity law `Γ(p) = 1 - (p_min/p)^alpha`, truncated at the
/// `q_max` quantile and renormalised so that all integrals have bounded support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoProductivity {
    pub p_min: f64,
    pub alpha: f64,
    pub q_max: f64,
}

pub const DEFAULT_Q_MAX: f64 = 1.0 - 1e-4;

impl ParetoProductivity {
    pub fn new(p_min: f64, alpha: f64) -> Result<Self> {
        Self::with_truncation(p_min, alpha, DEFAULT_Q_MAX)
    }

    pub fn with_truncation(p_min: f64, alpha: f64, q_max: f64) -> Result<Self> {
        if !(p_min > 0.0 && p_min.is_finite()) {
            return Err(Error::InvalidParameter(format!("p_min must be > 0 (got {p_min})")));
        }
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Pareto shape must exceed 1 for a finite mean (got {alpha})"
            )));
        }
        if !(q_max > 0.0 && q_max < 1.0) {
            return Err(Error::InvalidParameter(format!("q_max must lie in (0, 1) (got {q_max})")));
        }
        Ok(Self { p_min, alpha, q_max })
    }

    /// Upper end of the truncated support.
    pub fn p_max(&self) -> f64 {
        self.p_min * (1.0 - self.q_max).powf(-1.0 / self.alpha)
    }

    /// Untruncated `Γ(p)`.
    pub fn cdf_untruncated(&self, p: f64) -> f64 {
        if p <= self.p_min {
            0.0
        } else {
            1.0 - (self.p_min / p).powf(self.alpha)
        }
    }

    /// CDF of the truncated, renormalised law.
    pub fn cdf(&self, p: f64) -> f64 {
        if p >= self.p_max() {
            1.0
        } else {
            self.cdf_untruncated(p) / self.q_max
        }
    }

    pub fn survival(&self, p: f64) -> f64 {
        if p <= self.p_min {
            1.0
        } else if p >= self.p_max() {
            0.0
        } else {
            ((self.p_min / p).powf(self.alpha) - (1.0 - self.q_max)) / self.q_max
        }
    }

    pub fn pdf(&self, p: f64) -> f64 {
        if p < self.p_min || p > self.p_max() {
            0.0
        } else {
            self.alpha * self.p_min.powf(self.alpha) / p.powf(self.alpha + 1.0) / self.q_max
        }
    }

    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0) * self.q_max;
        self.p_min * (1.0 - q).powf(-1.0 / self.alpha)
    }
}
