//! Wage differential and migrant effect between two segments, the
//! counterfactual experiment grid, and Pareto calibration of a wage-offer curve.
//!
//! With `w_i(p)` the offer curve and `Γ_i` the productivity law of segment `i`,
//! and `A` the intersection of the productivity supports:
//!
//! ```text
//! differential = ∫_A w_N dΓ_N - ∫_A w_F dΓ_F
//!              = ∫_A (w_N - w_F) dΓ_N  +  ∫_A w_F d(Γ_N - Γ_F)
//!                 (migrant effect)        (productivity term)
//! ```

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{ParetoProductivity, ReservationWageDist};
use crate::equilibrium::{solve_wage_offer_curve, EquilibriumSolution, FrictionParams, OfferCurve, SegmentParams, SolverSettings};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::quad::{interp, trapezoid};

/// Nodes of the log-spaced productivity grid used for the integrals over `A`.
pub const DOMAIN_NODES: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Param {
    PMin,
    Alpha,
    Mu,
    Sigma,
    Lambda,
    Delta,
}

impl Param {
    pub const ALL: [Param; 6] = [Param::PMin, Param::Alpha, Param::Mu, Param::Sigma, Param::Lambda, Param::Delta];

    pub fn name(self) -> &'static str {
        match self {
            Param::PMin => "p_min",
            Param::Alpha => "alpha",
            Param::Mu => "mu",
            Param::Sigma => "sigma",
            Param::Lambda => "lambda",
            Param::Delta => "delta",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown parameter `{s}`")))
    }
}

fn join_params(ps: &[Param]) -> String {
    ps.iter().map(|p| p.name()).collect::<Vec<_>>().join(" ")
}

fn parse_params(s: &str) -> Result<Vec<Param>> {
    s.split_whitespace().map(Param::from_str).collect()
}

/// Parameters of the comparison segment replaced by the reference's values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: usize,
    pub equalized: Vec<Param>,
}

impl ExperimentSpec {
    pub fn new(id: usize, equalized: &[Param]) -> Self {
        let mut eq = equalized.to_vec();
        eq.sort();
        eq.dedup();
        Self { id, equalized: eq }
    }

    pub fn remaining(&self) -> Vec<Param> {
        Param::ALL.into_iter().filter(|p| !self.equalized.contains(p)).collect()
    }

    /// Both productivity parameters equalized: the differential reduces to the effect.
    pub fn same_productivity(&self) -> bool {
        self.equalized.contains(&Param::PMin) && self.equalized.contains(&Param::Alpha)
    }

    /// The comparison segment with the equalized parameters taken from the reference.
    pub fn apply(&self, reference: &SegmentParams, comparison: &SegmentParams) -> Result<SegmentParams> {
        let r = productivity_of(reference)?;
        let c = productivity_of(comparison)?;
        let pick = |p: Param, a: f64, b: f64| if self.equalized.contains(&p) { a } else { b };
        let prod = ParetoProductivity::with_truncation(
            pick(Param::PMin, r.p_min, c.p_min),
            pick(Param::Alpha, r.alpha, c.alpha),
            c.q_max,
        )?;
        SegmentParams::new(
            pick(Param::Lambda, reference.frictions.lambda, comparison.frictions.lambda),
            pick(Param::Delta, reference.frictions.delta, comparison.frictions.delta),
            pick(Param::Mu, reference.reservation.mu, comparison.reservation.mu),
            pick(Param::Sigma, reference.reservation.sigma, comparison.reservation.sigma),
            Some(prod),
        )
    }
}

fn productivity_of(s: &SegmentParams) -> Result<ParetoProductivity> {
    s.productivity
        .ok_or_else(|| Error::InvalidParameter("decomposition needs a productivity law for both segments".into()))
}

/// The fifteen experiments: no equalization, then every combination of the
/// blocks `(μ, σ)`, `λ`, `δ`, each with and without `(p_min, α)`.
pub fn standard_experiments() -> Vec<ExperimentSpec> {
    use Param::*;
    let rows: [&[Param]; 15] = [
        &[],
        &[Mu, Sigma],
        &[Delta],
        &[Lambda],
        &[Mu, Sigma, Delta],
        &[Mu, Sigma, Lambda],
        &[Lambda, Delta],
        &[Mu, Sigma, Lambda, Delta],
        &[PMin, Alpha],
        &[PMin, Alpha, Mu, Sigma],
        &[PMin, Alpha, Delta],
        &[PMin, Alpha, Lambda],
        &[PMin, Alpha, Mu, Sigma, Delta],
        &[PMin, Alpha, Mu, Sigma, Lambda],
        &[PMin, Alpha, Lambda, Delta],
    ];
    rows.iter().enumerate().map(|(i, r)| ExperimentSpec::new(i + 1, r)).collect()
}

/// Reference (natives) and comparison (migrants) segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentPair {
    pub reference: SegmentParams,
    pub comparison: SegmentParams,
}

impl SegmentPair {
    pub fn new(reference: SegmentParams, comparison: SegmentParams) -> Result<Self> {
        productivity_of(&reference)?;
        productivity_of(&comparison)?;
        let pair = Self { reference, comparison };
        pair.domain()?;
        Ok(pair)
    }

    pub fn dgp() -> Self {
        Self::new(SegmentParams::natives_dgp(), SegmentParams::migrants_dgp()).unwrap()
    }

    /// Common productivity domain `[max p_min, min p_max]`.
    pub fn domain(&self) -> Result<(f64, f64)> {
        let r = productivity_of(&self.reference)?;
        let c = productivity_of(&self.comparison)?;
        common_domain(&r, &c)
    }
}

fn common_domain(a: &ParetoProductivity, b: &ParetoProductivity) -> Result<(f64, f64)> {
    let lo = a.p_min.max(b.p_min);
    let hi = a.p_max().min(b.p_max());
    if hi > lo {
        Ok((lo, hi))
    } else {
        Err(Error::EmptySupport)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub wage_differential: f64,
    pub migrant_effect: f64,
    /// `∫_A w_F d(Γ_N - Γ_F)`.
    pub productivity_term: f64,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

/// Decompose the gap between two solved offer curves.
pub fn decompose_curves(reference: &OfferCurve, comparison: &OfferCurve) -> Result<Decomposition> {
    let (lo, hi) = common_domain(&reference.law, &comparison.law)?;
    let p = log_grid(lo, hi, DOMAIN_NODES);
    let w_n: Vec<f64> = p.iter().map(|&x| reference.wage_at(x)).collect();
    let w_f: Vec<f64> = p.iter().map(|&x| comparison.wage_at(x)).collect();
    let d_n: Vec<f64> = p.iter().map(|&x| reference.law.pdf(x)).collect();
    let d_f: Vec<f64> = p.iter().map(|&x| comparison.law.pdf(x)).collect();
    let effect: Vec<f64> = (0..p.len()).map(|i| (w_n[i] - w_f[i]) * d_n[i]).collect();
    let term: Vec<f64> = (0..p.len()).map(|i| w_f[i] * (d_n[i] - d_f[i])).collect();
    let migrant_effect = trapezoid(&p, &effect);
    let productivity_term = trapezoid(&p, &term);
    Ok(Decomposition {
        wage_differential: migrant_effect + productivity_term,
        migrant_effect,
        productivity_term,
    })
}

/// Aggregate wage differential computed directly as `∫_A w_N dΓ_N - ∫_A w_F dΓ_F`.
pub fn direct_differential(reference: &OfferCurve, comparison: &OfferCurve) -> Result<f64> {
    let (lo, hi) = common_domain(&reference.law, &comparison.law)?;
    let p = log_grid(lo, hi, DOMAIN_NODES);
    let a: Vec<f64> = p.iter().map(|&x| reference.wage_at(x) * reference.law.pdf(x)).collect();
    let b: Vec<f64> = p.iter().map(|&x| comparison.wage_at(x) * comparison.law.pdf(x)).collect();
    Ok(trapezoid(&p, &a) - trapezoid(&p, &b))
}

pub fn migrant_effect(pair: &SegmentPair, settings: &SolverSettings) -> Result<f64> {
    Ok(decompose_pair(pair, settings)?.migrant_effect)
}

pub fn wage_differential(pair: &SegmentPair, settings: &SolverSettings) -> Result<f64> {
    Ok(decompose_pair(pair, settings)?.wage_differential)
}

pub fn decompose_pair(pair: &SegmentPair, settings: &SolverSettings) -> Result<Decomposition> {
    let r = solve_wage_offer_curve(&pair.reference, settings)?;
    let c = solve_wage_offer_curve(&pair.comparison, settings)?;
    decompose_curves(&r, &c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub spec: ExperimentSpec,
    pub wage_differential: f64,
    pub migrant_effect: f64,
    pub productivity_term: f64,
}

impl ExperimentRow {
    /// The grid leaves the differential blank when it coincides with the effect.
    pub fn reported_differential(&self) -> Option<f64> {
        if self.spec.same_productivity() {
            None
        } else {
            Some(self.wage_differential)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub rows: Vec<ExperimentRow>,
}

pub const GRID_HEADER: [&str; 5] = ["experiment_id", "equalized", "remaining", "wage_differential", "migrant_effect"];

impl DecompositionReport {
    pub fn row(&self, id: usize) -> Option<&ExperimentRow> {
        self.rows.iter().find(|r| r.spec.id == id)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(GRID_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.spec.id.to_string(),
                join_params(&r.spec.equalized),
                join_params(&r.spec.remaining()),
                r.reported_differential().map(|d| d.to_string()).unwrap_or_default(),
                r.migrant_effect.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Inverse of [`write_csv`](Self::write_csv). Blank differentials are
    /// restored from the effect and the productivity term is not stored.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.iter().ne(GRID_HEADER.iter().copied()) {
            return Err(Error::Schema(format!("expected header {}", GRID_HEADER.join(","))));
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec?;
            let bad = |what: &str| Error::Row { row: line, reason: what.to_string() };
            let id: usize = rec[0].parse().map_err(|_| bad("experiment_id is not an integer"))?;
            let spec = ExperimentSpec::new(id, &parse_params(&rec[1]).map_err(|e| bad(&e.to_string()))?);
            let effect: f64 = rec[4].parse().map_err(|_| bad("migrant_effect is not a number"))?;
            let differential = if rec[3].is_empty() {
                effect
            } else {
                rec[3].parse().map_err(|_| bad("wage_differential is not a number"))?
            };
            rows.push(ExperimentRow {
                spec,
                wage_differential: differential,
                migrant_effect: effect,
                productivity_term: differential - effect,
            });
        }
        Ok(Self { rows })
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Run `specs` against the pair. Every experiment re-solves the comparison
/// segment's equilibrium with the equalized parameters.
pub fn run_experiments(pair: &SegmentPair, specs: &[ExperimentSpec], settings: &SolverSettings) -> Result<DecompositionReport> {
    let reference = solve_wage_offer_curve(&pair.reference, settings)?;
    let rows: Vec<Result<ExperimentRow>> = specs
        .par_iter()
        .map(|spec| {
            let run = || -> Result<ExperimentRow> {
                let params = spec.apply(&pair.reference, &pair.comparison)?;
                let curve = solve_wage_offer_curve(&params, settings)?;
                let d = decompose_curves(&reference, &curve)?;
                Ok(ExperimentRow {
                    spec: spec.clone(),
                    wage_differential: d.wage_differential,
                    migrant_effect: d.migrant_effect,
                    productivity_term: d.productivity_term,
                })
            };
            run().map_err(|e| Error::Experiment { id: spec.id, source: Box::new(e) })
        })
        .collect();
    Ok(DecompositionReport { rows: rows.into_iter().collect::<Result<_>>()? })
}

pub fn counterfactual_grid(pair: &SegmentPair, settings: &SolverSettings) -> Result<DecompositionReport> {
    run_experiments(pair, &standard_experiments(), settings)
}

/// One row of the plot-ready curve file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub p: f64,
    pub w_n: f64,
    pub w_f: f64,
    pub effect: f64,
}

pub const CURVE_HEADER: [&str; 4] = ["p", "w_N", "w_F", "effect"];

/// Both offer curves and their gap on `n` log-spaced points of `A`.
pub fn wage_curves(reference: &OfferCurve, comparison: &OfferCurve, n: usize) -> Result<Vec<CurvePoint>> {
    let (lo, hi) = common_domain(&reference.law, &comparison.law)?;
    Ok(log_grid(lo, hi, n.max(2))
        .into_iter()
        .map(|p| {
            let (w_n, w_f) = (reference.wage_at(p), comparison.wage_at(p));
            CurvePoint { p, w_n, w_f, effect: w_n - w_f }
        })
        .collect())
}

pub fn write_curve_csv<W: Write>(points: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for c in points {
        w.write_record([c.p.to_string(), c.w_n.to_string(), c.w_f.to_string(), c.effect.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve_csv<R: Read>(input: R) -> Result<Vec<CurvePoint>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(CURVE_HEADER.iter().copied()) {
        return Err(Error::Schema(format!("expected header {}", CURVE_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut v = [0.0; 4];
        for (j, x) in v.iter_mut().enumerate() {
            *x = rec[j].parse().map_err(|_| Error::Row {
                row: i + 2,
                reason: format!("{} is not a number", CURVE_HEADER[j]),
            })?;
        }
        out.push(CurvePoint { p: v[0], w_n: v[1], w_f: v[2], effect: v[3] });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    /// Search box for `p_min` as multiples of the lowest target productivity.
    pub p_min_range: (f64, f64),
    pub alpha_range: (f64, f64),
    /// Coarse grid size per dimension.
    pub grid: usize,
    /// Solver settings used for every trial curve.
    pub solver: SolverSettings,
    /// Target points used in the objective.
    pub eval_points: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            p_min_range: (0.8, 1.2),
            alpha_range: (1.05, 5.0),
            grid: 50,
            solver: SolverSettings { grid_points: 800, root_tol: 1e-10 },
            eval_points: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub p_min: f64,
    pub alpha: f64,
    /// Mean absolute wage deviation over the overlap of the two curves.
    pub objective: f64,
    /// Best coarse-grid cell before simplex refinement.
    pub grid_p_min: f64,
    pub grid_alpha: f64,
}

/// Mean absolute deviation between a target curve and the Pareto-implied
/// curve, over the overlap of their productivity ranges. Overlaps shorter than
/// half the target range score `+inf`.
fn calibration_objective(
    target_p: &[f64],
    target_w: &[f64],
    frictions: FrictionParams,
    reservation: ReservationWageDist,
    p_min: f64,
    alpha: f64,
    solver: &SolverSettings,
) -> f64 {
    let Ok(prod) = ParetoProductivity::new(p_min, alpha) else {
        return f64::INFINITY;
    };
    let params = SegmentParams { frictions, reservation, productivity: Some(prod) };
    let Ok(curve) = solve_wage_offer_curve(&params, solver) else {
        return f64::INFINITY;
    };
    let lo = target_p[0].max(p_min);
    let hi = target_p[target_p.len() - 1].min(prod.p_max());
    if !(hi - lo >= 0.5 * (target_p[target_p.len() - 1] - target_p[0])) {
        return f64::INFINITY;
    }
    let n = target_p.len().max(200);
    let ps = log_grid(lo, hi, n);
    let dev: Vec<f64> = ps.iter().map(|&p| (interp(target_p, target_w, p) - curve.wage_at(p)).abs()).collect();
    trapezoid(&ps, &dev) / (hi - lo)
}

/// Fit `(p_min, α)` so the Pareto-implied wage-offer curve matches `(target_p,
/// target_w)`: coarse grid search, then simplex refinement from the best cell.
pub fn calibrate_pareto(
    target_p: &[f64],
    target_w: &[f64],
    frictions: FrictionParams,
    reservation: ReservationWageDist,
    options: &CalibrationOptions,
) -> Result<Calibration> {
    if target_p.len() < 2 || target_p.len() != target_w.len() {
        return Err(Error::InvalidParameter("target curve needs >= 2 matching points".into()));
    }
    if target_p.windows(2).any(|w| !(w[1] > w[0])) || !(target_p[0] > 0.0) {
        return Err(Error::InvalidParameter("target productivities must be positive and increasing".into()));
    }
    // thin the target to keep the objective cheap
    let stride = (target_p.len() / options.eval_points.max(2)).max(1);
    let mut tp: Vec<f64> = target_p.iter().step_by(stride).copied().collect();
    let mut tw: Vec<f64> = target_w.iter().step_by(stride).copied().collect();
    if *tp.last().unwrap() != *target_p.last().unwrap() {
        tp.push(*target_p.last().unwrap());
        tw.push(*target_w.last().unwrap());
    }

    let n = options.grid.max(2);
    let (plo, phi) = (options.p_min_range.0 * tp[0], options.p_min_range.1 * tp[0]);
    let (alo, ahi) = options.alpha_range;
    let at = |i: usize, lo: f64, hi: f64| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let objective = |p_min: f64, alpha: f64| {
        calibration_objective(&tp, &tw, frictions, reservation, p_min, alpha, &options.solver)
    };
    let cells: Vec<(usize, usize, f64)> = (0..n * n)
        .into_par_iter()
        .map(|c| {
            let (i, j) = (c / n, c % n);
            (i, j, objective(at(i, plo, phi), at(j, alo, ahi)))
        })
        .collect();
    let &(bi, bj, best) = cells
        .iter()
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .expect("non-empty grid");
    if !best.is_finite() {
        return Err(Error::CalibrationBoundary { p_min: at(bi, plo, phi), alpha: at(bj, alo, ahi) });
    }
    let (gp, ga) = (at(bi, plo, phi), at(bj, alo, ahi));
    let dp = (phi - plo) / (n - 1) as f64;
    let da = (ahi - alo) / (n - 1) as f64;
    let nm = nelder_mead(
        |x: &[f64]| objective(x[0], x[1]),
        &[gp, ga],
        &NelderMeadOptions { step: vec![dp, da], diameter_tol: 1e-6, max_iter: 400 },
    );
    let (p_min, alpha, value) = if nm.value <= best { (nm.x[0], nm.x[1], nm.value) } else { (gp, ga, best) };
    let tol_p = 1e-3 * (phi - plo);
    let tol_a = 1e-3 * (ahi - alo);
    if p_min <= plo + tol_p || p_min >= phi - tol_p || alpha <= alo + tol_a || alpha >= ahi - tol_a {
        return Err(Error::CalibrationBoundary { p_min, alpha });
    }
    Ok(Calibration { p_min, alpha, objective: value, grid_p_min: gp, grid_alpha: ga })
}

/// Shape parameter from the regression of log productivity density on log
/// productivity: `ln γ = c - (α + 1) ln p`, so `α = -slope - 1`.
///
/// `p` and `offer_cdf` describe the productivity CDF at increasing points;
/// the density is differenced from it. The outer `trim` share of probability
/// mass on either side is left out.
pub fn ols_pareto_alpha(p: &[f64], offer_cdf: &[f64], trim: f64) -> Result<f64> {
    if p.len() != offer_cdf.len() || p.len() < 5 {
        return Err(Error::InvalidParameter("need >= 5 matching productivity points".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 1..p.len() - 1 {
        let (q0, q1) = (offer_cdf[i - 1], offer_cdf[i + 1]);
        let mid = offer_cdf[i];
        if mid < trim || mid > 1.0 - trim {
            continue;
        }
        let dens = (q1 - q0) / (p[i + 1] - p[i - 1]);
        if dens > 0.0 && p[i] > 0.0 && dens.is_finite() {
            xs.push(p[i].ln());
            ys.push(dens.ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::TooFewObservations { got: xs.len(), need: 3 });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(-(sxy / sxx) - 1.0)
}

/// Wage-offer curve `(p, w)` implied by `θ` and a wage density, keeping only
/// points where the recovered productivity strictly increases.
pub fn estimated_offer_curve(
    frictions: &FrictionParams,
    reservation: &ReservationWageDist,
    grid: &[f64],
    density: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    use crate::equilibrium::{offer_cdf_from_wage_density, productivity_curve};
    let implied = offer_cdf_from_wage_density(grid, density, frictions, reservation)?;
    let p = productivity_curve(&implied, density, frictions, reservation)?;
    let mut ps = Vec::with_capacity(p.len());
    let mut ws = Vec::with_capacity(p.len());
    for (&pi, &wi) in p.iter().zip(grid) {
        if ps.last().is_none_or(|&last| pi > last) {
            ps.push(pi);
            ws.push(wi);
        }
    }
    Ok((ps, ws))
}

/// Productivity behind each wage of a solved segment, recovered from its
/// accepted-wage density alone (no use of the productivity law).
pub fn recovered_productivity(eq: &EquilibriumSolution) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    use crate::equilibrium::{offer_cdf_from_wage_density, productivity_curve};
    let fr = eq.params.frictions;
    let h = eq.params.reservation;
    let implied = offer_cdf_from_wage_density(&eq.curve.wage, &eq.accepted.density, &fr, &h)?;
    let p = productivity_curve(&implied, &eq.accepted.density, &fr, &h)?;
    Ok((p, implied.grid.clone(), implied.offer_cdf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiments_partition_parameters() {
        let specs = standard_experiments();
        assert_eq!(specs.len(), 15);
        for s in &specs {
            let mut all = s.equalized.clone();
            all.extend(s.remaining());
            all.sort();
            assert_eq!(all, Param::ALL.to_vec());
        }
        assert_eq!(specs.iter().filter(|s| s.same_productivity()).count(), 7);
    }

    #[test]
    fn apply_copies_only_equalized() {
        let pair = SegmentPair::dgp();
        let s = ExperimentSpec::new(0, &[Param::Delta, Param::Alpha]);
        let c = s.apply(&pair.reference, &pair.comparison).unwrap();
        assert_eq!(c.frictions.delta, 0.005);
        assert_eq!(c.frictions.lambda, 0.13);
        assert_eq!(c.productivity.unwrap().p_min, 40.0);
        assert_eq!(c.reservation.mu, 45.0);
    }

    #[test]
    fn identical_segments_decompose_to_zero() {
        let s = SegmentParams::natives_dgp();
        let pair = SegmentPair::new(s, s).unwrap();
        let d = decompose_pair(&pair, &SolverSettings::default()).unwrap();
        assert_eq!(d.migrant_effect, 0.0);
        assert_eq!(d.wage_differential, 0.0);
    }

    #[test]
    fn disjoint_supports_are_rejected() {
        let a = ParetoProductivity::with_truncation(10.0, 2.0, 0.5).unwrap();
        let b = ParetoProductivity::new(100.0, 2.0).unwrap();
        assert!(matches!(common_domain(&a, &b), Err(Error::EmptySupport)));
    }

    #[test]
    fn param_names_round_trip() {
        for p in Param::ALL {
            assert_eq!(p.name().parse::<Param>().unwrap(), p);
        }
        assert!("beta".parse::<Param>().is_err());
    }
}
