//! Run configuration: one TOML document, every table optional. Unknown keys
//! are rejected and all values are checked before any computation starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wagesearch::decomposition::CalibrationOptions;
use wagesearch::dist::DEFAULT_Q_MAX;
use wagesearch::estimation::KernelScale;
use wagesearch::montecarlo::ValidationOptions;
use wagesearch::{FitOptions, ParetoProductivity, SampleDesign, SegmentParams, SolverSettings};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Absent: the two validation segments `N` and `F`.
    #[serde(default = "default_segments", rename = "segment")]
    pub segments: Vec<SegmentConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub estimate: EstimateConfig,
    #[serde(default)]
    pub decompose: DecomposeConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
}

fn default_seed() -> u64 {
    20_240_601
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_segments() -> Vec<SegmentConfig> {
    vec![
        SegmentConfig::from_params("N", &SegmentParams::natives_dgp()),
        SegmentConfig::from_params("F", &SegmentParams::migrants_dgp()),
    ]
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            out: default_out(),
            segments: default_segments(),
            solver: SolverConfig::default(),
            simulate: SimulateConfig::default(),
            estimate: EstimateConfig::default(),
            decompose: DecomposeConfig::default(),
            validate: ValidateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub id: String,
    pub lambda: f64,
    pub delta: f64,
    pub mu: f64,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_max: Option<f64>,
}

impl SegmentConfig {
    pub fn from_params(id: &str, p: &SegmentParams) -> Self {
        Self {
            id: id.to_string(),
            lambda: p.frictions.lambda,
            delta: p.frictions.delta,
            mu: p.reservation.mu,
            sigma: p.reservation.sigma,
            p_min: p.productivity.map(|l| l.p_min),
            alpha: p.productivity.map(|l| l.alpha),
            q_max: None,
        }
    }

    pub fn params(&self) -> Result<SegmentParams, CliError> {
        let productivity = match (self.p_min, self.alpha) {
            (Some(p), Some(a)) => Some(
                ParetoProductivity::with_truncation(p, a, self.q_max.unwrap_or(DEFAULT_Q_MAX))
                    .map_err(|e| self.invalid(e))?,
            ),
            (None, None) => None,
            _ => return Err(CliError::Config(format!("segment {}: p_min and alpha go together", self.id))),
        };
        SegmentParams::new(self.lambda, self.delta, self.mu, self.sigma, productivity).map_err(|e| self.invalid(e))
    }

    fn invalid(&self, e: wagesearch::Error) -> CliError {
        CliError::Config(format!("segment {}: {e}", self.id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub grid_points: usize,
    pub root_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self { grid_points: s.grid_points, root_tol: s.root_tol }
    }
}

impl SolverConfig {
    pub fn settings(&self) -> SolverSettings {
        SolverSettings { grid_points: self.grid_points, root_tol: self.root_tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignKind {
    Stock,
    Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub replicates: usize,
    pub design: DesignKind,
    /// Workers per sample under the stock design.
    pub sample_size: usize,
    /// Spell counts under the counts design.
    pub unemployed: usize,
    pub employed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub censor_horizon: Option<f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            replicates: 1,
            design: DesignKind::Stock,
            sample_size: 2000,
            unemployed: 0,
            employed: 0,
            censor_horizon: None,
        }
    }
}

impl SimulateConfig {
    pub fn design(&self) -> SampleDesign {
        match self.design {
            DesignKind::Stock => SampleDesign::Stock { total: self.sample_size },
            DesignKind::Counts => SampleDesign::Counts { unemployed: self.unemployed, employed: self.employed },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    /// Lower wage quantile dropped before smoothing.
    pub truncation: f64,
    pub bootstrap: usize,
    pub starts: usize,
    pub max_iter: usize,
    pub diameter_tol: f64,
    pub kde_grid: usize,
    pub kernel: KernelScale,
    pub perturbation: f64,
    /// Fit `(p_min, alpha)` to each estimated wage-offer curve.
    pub calibrate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        let f = FitOptions::default();
        Self {
            truncation: f.truncation_q,
            bootstrap: 200,
            starts: f.starts,
            max_iter: f.max_iter,
            diameter_tol: f.diameter_tol,
            kde_grid: f.kde_grid,
            kernel: f.kernel_scale,
            perturbation: f.perturbation,
            calibrate: true,
            filter: None,
        }
    }
}

impl EstimateConfig {
    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            truncation_q: self.truncation,
            starts: self.starts,
            max_iter: self.max_iter,
            diameter_tol: self.diameter_tol,
            kde_grid: self.kde_grid,
            kernel_scale: self.kernel,
            perturbation: self.perturbation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    /// Segment ids; default the first and second segment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<String>,
    /// Two fit records to decompose instead of configured segments.
    pub fits: Vec<PathBuf>,
    pub curve_points: usize,
    pub calibration_grid: usize,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            reference: None,
            comparison: None,
            fits: Vec::new(),
            curve_points: 200,
            calibration_grid: CalibrationOptions::default().grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub replicates: usize,
    pub sample_size: usize,
    pub truncation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub censor_horizon: Option<f64>,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        let v = ValidationOptions::default();
        Self {
            replicates: v.replicates,
            sample_size: v.sample_size,
            truncation: v.fit.truncation_q,
            censor_horizon: v.censor_horizon,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Schema checks beyond what deserialization enforces.
    pub fn check(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let mut ids: Vec<&str> = Vec::new();
        for s in &self.segments {
            if s.id.is_empty() || s.id.contains(|c: char| c == ',' || c.is_whitespace()) {
                return bad(format!("segment id {:?} must be non-empty without commas or spaces", s.id));
            }
            if ids.contains(&s.id.as_str()) {
                return bad(format!("duplicate segment id {:?}", s.id));
            }
            ids.push(&s.id);
            s.params()?;
        }
        if self.solver.grid_points < 3 || !(self.solver.root_tol > 0.0) {
            return bad("solver needs grid_points >= 3 and root_tol > 0".into());
        }
        for (name, q) in [("estimate.truncation", self.estimate.truncation), ("validate.truncation", self.validate.truncation)] {
            if !(0.0..1.0).contains(&q) {
                return bad(format!("{name} must lie in [0, 1) (got {q})"));
            }
        }
        if self.estimate.starts == 0 || self.estimate.max_iter == 0 || self.estimate.kde_grid < 2 {
            return bad("estimate needs starts >= 1, max_iter >= 1 and kde_grid >= 2".into());
        }
        let sim = &self.simulate;
        if sim.design().is_empty() {
            return bad("simulate design produces empty samples".into());
        }
        for h in [sim.censor_horizon, self.validate.censor_horizon].into_iter().flatten() {
            if !(h > 0.0) {
                return bad(format!("censor_horizon must be positive (got {h})"));
            }
        }
        if self.validate.sample_size == 0 {
            return bad("validate.sample_size must be positive".into());
        }
        if self.decompose.curve_points < 2 {
            return bad("decompose.curve_points must be >= 2".into());
        }
        if !self.decompose.fits.is_empty() && self.decompose.fits.len() != 2 {
            return bad("decompose.fits takes exactly two fit records".into());
        }
        for id in [&self.decompose.reference, &self.decompose.comparison].into_iter().flatten() {
            if !ids.contains(&id.as_str()) {
                return bad(format!("decompose refers to unknown segment {id:?}"));
            }
        }
        Ok(())
    }

    pub fn segment_params(&self) -> Result<Vec<(String, SegmentParams)>, CliError> {
        self.segments.iter().map(|s| Ok((s.id.clone(), s.params()?))).collect()
    }

    pub fn validation_options(&self) -> ValidationOptions {
        ValidationOptions {
            replicates: self.validate.replicates,
            sample_size: self.validate.sample_size,
            seed: self.seed,
            censor_horizon: self.validate.censor_horizon,
            fit: FitOptions { truncation_q: self.validate.truncation, ..self.estimate.fit_options() },
            solver: self.solver.settings(),
        }
    }

    pub fn calibration_options(&self) -> CalibrationOptions {
        CalibrationOptions { grid: self.decompose.calibration_grid, ..CalibrationOptions::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.estimate.truncation, 0.05);
        assert_eq!(cfg.estimate.bootstrap, 200);
        assert_eq!(cfg.segments.len(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml("sed = 1"), Err(CliError::Config(_))));
        assert!(RunConfig::from_toml("[estimate]\ntruncate = 0.1").is_err());
        let seg = "[[segment]]\nid = 'A'\nlambda = 0.1\ndelta = 0.01\nmu = 50\nsigma = 5\nrho = 1";
        assert!(RunConfig::from_toml(seg).is_err());
    }

    #[test]
    fn values_are_checked() {
        assert!(RunConfig::from_toml("[estimate]\ntruncation = 1.5").is_err());
        let seg = "[[segment]]\nid = 'A'\nlambda = -0.1\ndelta = 0.01\nmu = 50\nsigma = 5";
        assert!(RunConfig::from_toml(seg).is_err());
        let half = "[[segment]]\nid = 'A'\nlambda = 0.1\ndelta = 0.01\nmu = 50\nsigma = 5\np_min = 40";
        assert!(RunConfig::from_toml(half).is_err());
        assert!(RunConfig::from_toml("[decompose]\nreference = 'Z'").is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.estimate.filter = Some("wage > 10".into());
        cfg.simulate.censor_horizon = Some(365.0);
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
