//! Segment-level equilibrium of the wage-posting model with on-the-job search,
//! heterogeneous firm productivity and heterogeneous reservation wages.
//!
//! The forward direction maps a productivity law into the wage-offer curve
//! `K(p)`, the offer CDF `F`, the unemployment rate `u` and the accepted-wage
//! distribution `G`. The inverse direction starts from an observed accepted-wage
//! density `g` and recovers `F`, `u` and the productivity behind each wage.
//!
//! Notation used in the comments: `k = λ/δ`, `F̄ = 1 - F`, `A(w) = 1 + k F̄(w)`.

use serde::{Deserialize, Serialize};

use crate::dist::{ParetoProductivity, ReservationWageDist};
use crate::error::{Error, Result};
use crate::optim::brent_root;
use crate::quad::{cumulative_trapezoid, GridPos};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrictionParams {
    /// Job-offer arrival rate, per day.
    pub lambda: f64,
    /// Job-separation rate, per day.
    pub delta: f64,
}

impl FrictionParams {
    pub fn new(lambda: f64, delta: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite() && delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda and delta must be positive and finite (got {lambda}, {delta})"
            )));
        }
        let k = lambda / delta;
        if !k.is_finite() {
            return Err(Error::InvalidParameter(format!("k = lambda/delta is not finite ({k})")));
        }
        Ok(Self { lambda, delta })
    }

    /// Friction index `k = λ/δ`.
    pub fn k(&self) -> f64 {
        self.lambda / self.delta
    }
}

/// Structural parameters of one labour-market segment. The productivity law
/// is absent when the segment is recovered from wage data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentParams {
    pub frictions: FrictionParams,
    pub reservation: ReservationWageDist,
    pub productivity: Option<ParetoProductivity>,
}

impl SegmentParams {
    pub fn new(
        lambda: f64,
        delta: f64,
        mu: f64,
        sigma: f64,
        productivity: Option<ParetoProductivity>,
    ) -> Result<Self> {
        Ok(Self {
            frictions: FrictionParams::new(lambda, delta)?,
            reservation: ReservationWageDist::new(mu, sigma)?,
            productivity,
        })
    }

    /// Natives segment of the validation design.
    pub fn natives_dgp() -> Self {
        Self::new(0.07, 0.005, 60.0, 10.0, Some(ParetoProductivity::new(50.0, 2.1).unwrap())).unwrap()
    }

    /// Migrants segment of the validation design.
    pub fn migrants_dgp() -> Self {
        Self::new(0.13, 0.016, 45.0, 10.0, Some(ParetoProductivity::new(40.0, 2.1).unwrap())).unwrap()
    }

    fn require_productivity(&self) -> Result<ParetoProductivity> {
        self.productivity
            .ok_or_else(|| Error::InvalidParameter("segment has no productivity law".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Number of log-spaced productivity nodes from `p_min` to the truncation quantile.
    pub grid_points: usize,
    /// Absolute tolerance of each scalar root solve.
    pub root_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            grid_points: 2000,
            root_tol: 1e-12,
        }
    }
}

/// Lowest posted wage: the least productive firm's monopsony choice
/// `argmax_{w <= p_min} (p_min - w) H(w)`.
pub fn lowest_wage(p_min: f64, h: &ReservationWageDist) -> Result<f64> {
    if !(p_min > 0.0 && p_min.is_finite()) {
        return Err(Error::InvalidParameter(format!("p_min must be > 0 (got {p_min})")));
    }
    if h.cdf(p_min) < 1e-12 {
        return Err(Error::NoAcceptableWage { p_min });
    }
    if h.is_degenerate() {
        // (p - w)·1{w >= mu} peaks at w = mu
        return Ok(h.mu);
    }
    // First-order condition (p - w) h(w) = H(w); the left side dominates far
    // enough below the mean, and the right side at w = p_min.
    let foc = |w: f64| (p_min - w) * h.pdf(w) - h.cdf(w);
    let mut lo = p_min.min(h.mu) - h.sigma;
    let mut span = h.sigma;
    let mut tries = 0;
    while foc(lo) <= 0.0 {
        span *= 2.0;
        lo -= span;
        tries += 1;
        if tries > 200 {
            return Err(Error::NoAcceptableWage { p_min });
        }
    }
    let scale = p_min.abs().max(h.sigma);
    brent_root(foc, lo, p_min, 1e-13 * scale, 500).ok_or(Error::NoAcceptableWage { p_min })
}

/// Tabulated wage-offer curve `w = K(p)` with `F(K(p)) = Γ(p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferCurve {
    /// Productivity nodes (log-spaced).
    pub productivity: Vec<f64>,
    /// `K(p)` at each node.
    pub wage: Vec<f64>,
    /// `F` at each node.
    pub offer_cdf: Vec<f64>,
    /// `F̄` at each node.
    pub offer_survival: Vec<f64>,
    /// Offer density `f` at each node.
    pub offer_density: Vec<f64>,
    pub law: ParetoProductivity,
    log_productivity: Vec<f64>,
}

impl OfferCurve {
    pub fn w_min(&self) -> f64 {
        self.wage[0]
    }

    pub fn w_max(&self) -> f64 {
        *self.wage.last().unwrap()
    }

    /// `K(p)`, interpolated linearly in `log p`; flat outside the grid.
    pub fn wage_at(&self, p: f64) -> f64 {
        GridPos::locate(&self.log_productivity, p.ln()).eval(&self.wage)
    }

    /// `K^{-1}(w)`.
    pub fn productivity_at(&self, w: f64) -> f64 {
        GridPos::locate(&self.wage, w).eval(&self.productivity)
    }

    /// `F̄(w)`; 1 below `w_min`, 0 above `w_max`.
    pub fn survival_at(&self, w: f64) -> f64 {
        if w <= self.w_min() {
            1.0
        } else if w >= self.w_max() {
            0.0
        } else {
            self.law.survival(self.productivity_at(w))
        }
    }

    pub fn cdf_at(&self, w: f64) -> f64 {
        1.0 - self.survival_at(w)
    }

    /// Offer-distribution quantile `F^{-1}(q) = K(Γ^{-1}(q))`.
    pub fn offer_quantile(&self, q: f64) -> f64 {
        self.wage_at(self.law.quantile(q))
    }
}

/// Marching solution of the implicit wage-offer equation
///
/// `K(p) = p - [ (p_min - w_min) H(w_min)/(1+k)^2 + ∫ H(K(x))/(1+kΓ̄(x))^2 dx ]
///         · (1+kΓ̄(p))^2 / H(K(p))`
///
/// Each step extends the trapezoid integral by one node and solves the scalar
/// equation for the new `K` inside `(K_prev, p]`.
pub fn solve_wage_offer_curve(params: &SegmentParams, settings: &SolverSettings) -> Result<OfferCurve> {
    let law = params.require_productivity()?;
    let h = &params.reservation;
    let k = params.frictions.k();
    let n = settings.grid_points.max(3);

    let w_min = lowest_wage(law.p_min, h)?;
    let (lp0, lp1) = (law.p_min.ln(), law.p_max().ln());
    let log_p: Vec<f64> = (0..n)
        .map(|i| lp0 + (lp1 - lp0) * i as f64 / (n - 1) as f64)
        .collect();
    let p: Vec<f64> = log_p.iter().map(|x| x.exp()).collect();
    let survival: Vec<f64> = p
        .iter()
        .enumerate()
        .map(|(i, &x)| if i == 0 { 1.0 } else if i == n - 1 { 0.0 } else { law.survival(x) })
        .collect();
    let weight: Vec<f64> = survival.iter().map(|s| (1.0 + k * s).powi(2)).collect();

    let mut wage = Vec::with_capacity(n);
    wage.push(w_min);
    let mut profit = (law.p_min - w_min) * h.cdf(w_min) / weight[0];
    let mut labour_prev = h.cdf(w_min) / weight[0];

    for i in 1..n {
        let eps = p[i] - p[i - 1];
        let prev = wage[i - 1];
        let carry = (profit + 0.5 * eps * labour_prev) * weight[i];
        let residual = |kv: f64| {
            let hk = h.cdf(kv);
            kv - p[i] + carry / hk + 0.5 * eps
        };
        let kv = brent_root(residual, prev, p[i], settings.root_tol * p[i].max(1.0), 300).ok_or_else(|| {
            Error::SolverStep {
                step: i,
                p: p[i],
                reason: format!(
                    "no root in ({prev}, {}]; residual at ends: {}, {}",
                    p[i],
                    residual(prev),
                    residual(p[i])
                ),
            }
        })?;
        if !(kv > prev) {
            return Err(Error::NonMonotoneCurve { step: i });
        }
        let r = residual(kv);
        if !r.is_finite() || r.abs() > 1e-6 * p[i] {
            return Err(Error::SolverStep {
                step: i,
                p: p[i],
                reason: format!("residual {r} after root solve"),
            });
        }
        let labour = h.cdf(kv) / weight[i];
        profit += 0.5 * eps * (labour_prev + labour);
        labour_prev = labour;
        wage.push(kv);
    }

    // Offer density from each firm's first-order condition:
    // f = A (H/(p - w) - h) / (2 k H).
    let offer_density: Vec<f64> = (0..n)
        .map(|i| {
            let a = 1.0 + k * survival[i];
            let hw = h.cdf(wage[i]);
            let markdown = p[i] - wage[i];
            if hw <= 0.0 || markdown <= 0.0 {
                return 0.0;
            }
            (a * (hw / markdown - h.pdf(wage[i])) / (2.0 * k * hw)).max(0.0)
        })
        .collect();

    Ok(OfferCurve {
        offer_cdf: survival.iter().map(|s| 1.0 - s).collect(),
        offer_survival: survival,
        offer_density,
        productivity: p,
        wage,
        law,
        log_productivity: log_p,
    })
}

/// Running `H(w_min)/(1+k) + ∫_{w_min}^{w} dH(x)/(1+kF̄(x))` on the curve nodes.
fn inflow_mass(frictions: &FrictionParams, h: &ReservationWageDist, curve: &OfferCurve) -> Vec<f64> {
    let k = frictions.k();
    let base = h.cdf(curve.w_min()) / (1.0 + k);
    if h.is_degenerate() {
        // point mass at mu
        return curve
            .wage
            .iter()
            .map(|&w| {
                let jump = if h.mu > curve.w_min() && h.mu <= w {
                    1.0 / (1.0 + k * curve.survival_at(h.mu))
                } else {
                    0.0
                };
                base + jump
            })
            .collect();
    }
    let integrand: Vec<f64> = curve
        .wage
        .iter()
        .zip(&curve.offer_survival)
        .map(|(&w, &s)| h.pdf(w) / (1.0 + k * s))
        .collect();
    cumulative_trapezoid(&curve.wage, &integrand)
        .into_iter()
        .map(|c| base + c)
        .collect()
}

/// Steady-state unemployment rate
/// `u = H(w_min)/(1+k) + ∫ dH/(1+kF̄) + (1 - H(w_max))`.
pub fn equilibrium_unemployment(
    frictions: &FrictionParams,
    h: &ReservationWageDist,
    curve: &OfferCurve,
) -> Result<f64> {
    let inflow = inflow_mass(frictions, h, curve);
    let last = *inflow.last().unwrap();
    if !last.is_finite() {
        return Err(Error::Quadrature(format!("unemployment integral is {last}")));
    }
    let u = last + (1.0 - h.cdf(curve.w_max()));
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::UnemploymentOutOfRange(u));
    }
    Ok(u)
}

/// Accepted (cross-sectional) wage distribution on the curve nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptedWages {
    pub cdf: Vec<f64>,
    pub density: Vec<f64>,
}

/// `G(w) = [H(w) - A(w)·I(w)] / [A(w)(1-u)]` with `I` the inflow mass, and
/// `g = k H f / ((1-u) A^2)`.
pub fn actual_wage_cdf(
    frictions: &FrictionParams,
    h: &ReservationWageDist,
    curve: &OfferCurve,
    u: f64,
) -> Result<AcceptedWages> {
    let k = frictions.k();
    let inflow = inflow_mass(frictions, h, curve);
    let n = curve.wage.len();
    let mut cdf = Vec::with_capacity(n);
    let mut density = Vec::with_capacity(n);
    for i in 0..n {
        let w = curve.wage[i];
        let a = 1.0 + k * curve.offer_survival[i];
        let hw = h.cdf(w);
        let g_cdf = (hw - a * inflow[i]) / (a * (1.0 - u));
        let g_pdf = k * hw * curve.offer_density[i] / ((1.0 - u) * a * a);
        if g_pdf < 0.0 || !g_pdf.is_finite() {
            return Err(Error::NegativeDensity { w });
        }
        cdf.push(g_cdf);
        density.push(g_pdf);
    }
    // tolerate rounding noise at the ends, reject genuine decreases
    for i in 1..n {
        if cdf[i] < cdf[i - 1] - 1e-9 {
            return Err(Error::NegativeDensity { w: curve.wage[i] });
        }
    }
    let mut running = 0.0_f64;
    for c in cdf.iter_mut() {
        running = running.max(c.clamp(0.0, 1.0));
        *c = running;
    }
    Ok(AcceptedWages { cdf, density })
}

/// Reservation-wage composition of the unemployment pool: a point mass for
/// workers with `b <= w_min` plus a density on the `b` grid,
/// `u H_u(b) = ∫_{-inf}^{b} dH(x)/(1+kF̄(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnemployedPool {
    /// Mass `H(w_min)/(1+k)` of workers who accept every offer.
    pub point_mass: f64,
    pub b_grid: Vec<f64>,
    /// `h(b)/(1+kF̄(b))` on the grid.
    pub density: Vec<f64>,
    /// Point mass plus cumulative integral of `density`.
    pub cumulative: Vec<f64>,
    /// `1 - H(w_max)`: workers who never accept any offer.
    pub never_employed: f64,
}

impl UnemployedPool {
    /// Employable unemployed mass (excludes the never-employed).
    pub fn employable_mass(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&self.point_mass)
    }

    pub fn total_mass(&self) -> f64 {
        self.employable_mass() + self.never_employed
    }
}

pub fn unemployed_mixture(
    frictions: &FrictionParams,
    h: &ReservationWageDist,
    curve: &OfferCurve,
    b_grid: &[f64],
) -> Result<UnemployedPool> {
    let k = frictions.k();
    let point_mass = h.cdf(curve.w_min()) / (1.0 + k);
    let density: Vec<f64> = b_grid
        .iter()
        .map(|&b| {
            if b < curve.w_min() || b > curve.w_max() {
                0.0
            } else {
                h.pdf(b) / (1.0 + k * curve.survival_at(b))
            }
        })
        .collect();
    if let Some(bad) = density.iter().position(|d| !(*d >= 0.0)) {
        return Err(Error::Quadrature(format!("negative pool weight at b = {}", b_grid[bad])));
    }
    let cumulative = if b_grid.len() >= 2 {
        cumulative_trapezoid(b_grid, &density)
            .into_iter()
            .map(|c| point_mass + c)
            .collect()
    } else {
        vec![point_mass; b_grid.len()]
    };
    Ok(UnemployedPool {
        point_mass,
        b_grid: b_grid.to_vec(),
        density,
        cumulative,
        never_employed: 1.0 - h.cdf(curve.w_max()),
    })
}

/// Full forward equilibrium of one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub params: SegmentParams,
    pub curve: OfferCurve,
    pub accepted: AcceptedWages,
    pub unemployment: f64,
    pub pool: UnemployedPool,
}

impl EquilibriumSolution {
    pub fn solve(params: &SegmentParams, settings: &SolverSettings) -> Result<Self> {
        let curve = solve_wage_offer_curve(params, settings)?;
        let u = equilibrium_unemployment(&params.frictions, &params.reservation, &curve)?;
        let accepted = actual_wage_cdf(&params.frictions, &params.reservation, &curve, u)?;
        let pool = unemployed_mixture(&params.frictions, &params.reservation, &curve, &curve.wage)?;
        Ok(Self {
            params: *params,
            curve,
            accepted,
            unemployment: u,
            pool,
        })
    }

    pub fn w_min(&self) -> f64 {
        self.curve.w_min()
    }

    pub fn w_max(&self) -> f64 {
        self.curve.w_max()
    }

    /// Accepted-wage quantile by monotone interpolation of the tabulated `G`.
    pub fn accepted_quantile(&self, q: f64) -> f64 {
        GridPos::locate(&self.accepted.cdf, q).eval(&self.curve.wage)
    }

    pub fn accepted_cdf_at(&self, w: f64) -> f64 {
        GridPos::locate(&self.curve.wage, w).eval(&self.accepted.cdf)
    }
}

/// Offer distribution recovered from an accepted-wage density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpliedOffers {
    pub grid: Vec<f64>,
    pub offer_cdf: Vec<f64>,
    pub offer_survival: Vec<f64>,
    pub offer_density: Vec<f64>,
    /// Employment rate `1 - u`.
    pub employment: f64,
}

impl ImpliedOffers {
    pub fn unemployment(&self) -> f64 {
        1.0 - self.employment
    }
}

/// Inverse route. With `J(w) = ∫_{w_min}^{w} g/H`:
/// `1 - u = k / ((1+k) J(w_max))` and `1/(1+kF̄(w)) = (1-u) J(w) + 1/(1+k)`.
/// The offer density follows as `f = (1-u) g A^2 / (k H)`.
pub fn offer_cdf_from_wage_density(
    grid: &[f64],
    density: &[f64],
    frictions: &FrictionParams,
    h: &ReservationWageDist,
) -> Result<ImpliedOffers> {
    let k = frictions.k();
    let n = grid.len();
    if n < 2 || density.len() != n {
        return Err(Error::InvalidParameter("wage density needs matching grid of >= 2 points".into()));
    }
    let mut h_cdf = Vec::with_capacity(n);
    let mut ratio = Vec::with_capacity(n);
    for (&t, &g) in grid.iter().zip(density) {
        let ht = h.cdf(t);
        if ht <= 0.0 || !ht.is_finite() {
            if g > 0.0 {
                return Err(Error::ReservationUnderflow { w: t });
            }
            ratio.push(0.0);
        } else {
            ratio.push(g / ht);
        }
        h_cdf.push(ht);
    }
    let j = cumulative_trapezoid(grid, &ratio);
    let j_end = j[n - 1];
    if !(j_end > 0.0 && j_end.is_finite()) {
        return Err(Error::ReservationUnderflow { w: grid[0] });
    }
    let employment = k / ((1.0 + k) * j_end);
    if !(employment > 0.0 && employment < 1.0) {
        return Err(Error::UnemploymentOutOfRange(1.0 - employment));
    }
    let base = 1.0 / (1.0 + k);
    let mut offer_survival = Vec::with_capacity(n);
    let mut offer_density = Vec::with_capacity(n);
    for i in 0..n {
        let r = employment * j[i] + base;
        let a = 1.0 / r;
        offer_survival.push(((a - 1.0) / k).clamp(0.0, 1.0));
        let f = if h_cdf[i] > 0.0 {
            employment * density[i] * a * a / (k * h_cdf[i])
        } else {
            0.0
        };
        offer_density.push(f);
    }
    offer_survival[0] = 1.0;
    offer_survival[n - 1] = 0.0;
    Ok(ImpliedOffers {
        grid: grid.to_vec(),
        offer_cdf: offer_survival.iter().map(|s| 1.0 - s).collect(),
        offer_survival,
        offer_density,
        employment,
    })
}

/// Productivity of the firm posting wage `w`:
/// `p = w + H(w) / (2(1-u) g(w) [1 + kF̄(w)] + h(w))`.
pub fn productivity_from_wage(
    w: f64,
    wage_density: f64,
    h_cdf: f64,
    h_pdf: f64,
    offer_survival: f64,
    employment: f64,
    k: f64,
) -> Result<f64> {
    let denom = 2.0 * employment * wage_density * (1.0 + k * offer_survival) + h_pdf;
    if !(denom > 0.0) {
        return Err(Error::ZeroDensity { w, index: 0 });
    }
    let p = w + h_cdf / denom;
    if !p.is_finite() {
        return Err(Error::ZeroDensity { w, index: 0 });
    }
    Ok(p)
}

/// Productivity at every node of an implied-offer grid.
pub fn productivity_curve(
    implied: &ImpliedOffers,
    density: &[f64],
    frictions: &FrictionParams,
    h: &ReservationWageDist,
) -> Result<Vec<f64>> {
    let k = frictions.k();
    implied
        .grid
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            productivity_from_wage(
                w,
                density[i],
                h.cdf(w),
                h.pdf(w),
                implied.offer_survival[i],
                implied.employment,
                k,
            )
            .map_err(|_| Error::ZeroDensity { w, index: i })
        })
        .collect()
}
