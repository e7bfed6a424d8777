use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{cumulative_trapezoid, trapezoid, GridPos};

pub const MIN_KDE_OBS: usize = 50;
pub const DEFAULT_KDE_GRID: usize = 512;

/// Scale on which the Gaussian kernel smooths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelScale {
    /// Kernel on wages.
    Linear,
    /// Kernel on log wages, mapped back with the `1/w` Jacobian. Narrower in
    /// wage units at the steep lower end of right-skewed wage densities.
    #[default]
    Log,
}

impl std::str::FromStr for KernelScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "log" => Ok(Self::Log),
            _ => Err(Error::InvalidParameter(format!("kernel scale must be `linear` or `log` (got `{s}`)"))),
        }
    }
}

/// Gaussian-kernel estimate of the accepted-wage density on the support of
/// the (lower-truncated) wage sample, renormalised to integrate to one there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WageDensityEstimate {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub cdf: Vec<f64>,
    /// In the units of `scale`.
    pub bandwidth: f64,
    pub scale: KernelScale,
    /// Lower truncation quantile applied before smoothing.
    pub truncation_q: f64,
    /// Observations kept after truncation.
    pub n_obs: usize,
}

impl WageDensityEstimate {
    pub fn w_min(&self) -> f64 {
        self.grid[0]
    }

    pub fn w_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn density_at(&self, w: f64) -> f64 {
        if w < self.w_min() || w > self.w_max() {
            return 0.0;
        }
        GridPos::locate(&self.grid, w).eval(&self.density)
    }

    pub fn contains(&self, w: f64) -> bool {
        w >= self.w_min() && w <= self.w_max()
    }

    /// Build from an already tabulated density (e.g. a model-implied `g`).
    pub fn from_tabulated(grid: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != density.len() {
            return Err(Error::InvalidParameter("tabulated density needs >= 2 matching points".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("density grid must be strictly increasing".into()));
        }
        if density.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::InvalidParameter("density must be non-negative".into()));
        }
        let cdf = cumulative_trapezoid(&grid, &density);
        Ok(Self {
            n_obs: 0,
            bandwidth: 0.0,
            scale: KernelScale::Linear,
            truncation_q: 0.0,
            grid,
            density,
            cdf,
        })
    }
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn sample_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule of thumb `0.9 min(sd, IQR/1.34) n^{-1/5}`.
pub fn silverman_bandwidth(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    let iqr = sample_quantile(sorted, 0.75) - sample_quantile(sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

/// Drop wages below the `truncation_q` sample quantile and smooth the rest
/// with a Gaussian kernel on the wage scale.
pub fn kernel_wage_density(wages: &[f64], truncation_q: f64) -> Result<WageDensityEstimate> {
    kernel_wage_density_on(wages, truncation_q, DEFAULT_KDE_GRID, KernelScale::Linear)
}

/// Same, on a grid of `grid_points` equally spaced wages and with the kernel
/// applied on `scale`. The bandwidth is Silverman's rule on that scale.
pub fn kernel_wage_density_on(
    wages: &[f64],
    truncation_q: f64,
    grid_points: usize,
    scale: KernelScale,
) -> Result<WageDensityEstimate> {
    if !(0.0..1.0).contains(&truncation_q) {
        return Err(Error::InvalidParameter(format!(
            "truncation quantile must lie in [0, 1) (got {truncation_q})"
        )));
    }
    let mut sorted: Vec<f64> = wages.iter().copied().filter(|w| w.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.len() < MIN_KDE_OBS {
        return Err(Error::TooFewObservations { got: sorted.len(), need: MIN_KDE_OBS });
    }
    let cut = if truncation_q > 0.0 {
        sample_quantile(&sorted, truncation_q)
    } else {
        sorted[0]
    };
    let kept: Vec<f64> = sorted.into_iter().filter(|&w| w >= cut).collect();
    if kept.len() < MIN_KDE_OBS {
        return Err(Error::TooFewObservations { got: kept.len(), need: MIN_KDE_OBS });
    }
    let (lo, hi) = (kept[0], *kept.last().unwrap());
    if !(hi > lo) {
        return Err(Error::ZeroVariance);
    }
    if scale == KernelScale::Log && !(lo > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "log-scale kernel needs positive wages (minimum is {lo})"
        )));
    }
    let to_scale = |w: f64| match scale {
        KernelScale::Linear => w,
        KernelScale::Log => w.ln(),
    };
    let points: Vec<f64> = kept.iter().map(|&w| to_scale(w)).collect();
    let bw = silverman_bandwidth(&points);
    if !(bw > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let m = grid_points.max(16);
    let grid: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
    // kernel mass beyond 8 bandwidths is below 1e-14
    let reach = 8.0 * bw;
    let mut density = vec![0.0; m];
    let mut start = 0;
    for (gi, &w) in grid.iter().enumerate() {
        let x = to_scale(w);
        while start < points.len() && points[start] < x - reach {
            start += 1;
        }
        let mut acc = 0.0;
        for &v in points[start..].iter().take_while(|&&v| v <= x + reach) {
            let z = (x - v) / bw;
            acc += (-0.5 * z * z).exp();
        }
        density[gi] = match scale {
            KernelScale::Linear => acc,
            KernelScale::Log => acc / w,
        };
    }
    let mass = trapezoid(&grid, &density);
    for d in density.iter_mut() {
        *d /= mass;
    }
    let mut cdf = cumulative_trapezoid(&grid, &density);
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    Ok(WageDensityEstimate {
        grid,
        density,
        cdf,
        bandwidth: bw,
        scale,
        truncation_q,
        n_obs: kept.len(),
    })
}
