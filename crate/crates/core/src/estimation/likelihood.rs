//! Spell likelihood contributions given the kernel wage density as a nuisance
//! parameter. `F` is never parameterised directly: for each trial `θ` it is
//! recovered from `g` through the steady-state flow equations.

use crate::dist::ReservationWageDist;
use crate::equilibrium::{offer_cdf_from_wage_density, FrictionParams, ImpliedOffers};
use crate::error::{Error, Result};
use crate::quad::{GaussLegendre, GridPos};
use crate::spell::{Destination, Origin, Spell};

use super::{Theta, WageDensityEstimate};

pub const GL_NODES: usize = 64;

/// `F̄` floor inside `log(λF̄)` for job-to-job exits observed at the very top of
/// the wage support, where the estimated `F̄` is exactly zero.
pub const SURVIVAL_FLOOR: f64 = 1e-10;

/// Offer distribution implied by `θ` and `g`, with the reservation law.
#[derive(Debug, Clone)]
pub struct ThetaModel {
    pub theta: Theta,
    pub frictions: FrictionParams,
    pub reservation: ReservationWageDist,
    pub implied: ImpliedOffers,
    h_at_w_min: f64,
}

impl ThetaModel {
    pub fn new(theta: &Theta, density: &WageDensityEstimate) -> Result<Self> {
        let frictions = FrictionParams::new(theta.lambda, theta.delta)?;
        let reservation = ReservationWageDist::new(theta.mu, theta.sigma)?;
        let implied = offer_cdf_from_wage_density(&density.grid, &density.density, &frictions, &reservation)?;
        Ok(Self {
            theta: *theta,
            frictions,
            reservation,
            h_at_w_min: reservation.cdf(density.w_min()),
            implied,
        })
    }

    pub fn unemployment(&self) -> f64 {
        self.implied.unemployment()
    }
}

/// Gauss–Legendre nodes for one `b`-integral, located on the density grid.
#[derive(Debug, Clone)]
pub struct BNodes {
    pub nodes: Vec<(f64, f64, GridPos)>,
}

impl BNodes {
    pub fn new(gl: &GaussLegendre, grid: &[f64], lo: f64, hi: f64) -> Self {
        let nodes = if hi > lo {
            gl.mapped(lo, hi).map(|(b, w)| (b, w, GridPos::locate(grid, b))).collect()
        } else {
            Vec::new()
        };
        Self { nodes }
    }
}

/// `log Lu` from precomputed positions. `wage_pos` is `None` for censored spells,
/// whose `b`-integral then runs over the whole support.
fn log_lu(
    model: &ThetaModel,
    density: &WageDensityEstimate,
    t: f64,
    wage: Option<(f64, GridPos)>,
    nodes: &BNodes,
) -> Result<f64> {
    let lambda = model.theta.lambda;
    let k = model.frictions.k();
    let survival = &model.implied.offer_survival;
    let h = &model.reservation;

    // exponents -λF̄(b)t are maximal where F̄ is smallest, i.e. at the top end
    let top = wage.map(|(w, _)| w).unwrap_or(density.w_max());
    let shift = -lambda * model_survival_at(model, density, top) * t;

    let mut sum = model.h_at_w_min / (1.0 + k) * (-lambda * t - shift).exp();
    if h.is_degenerate() {
        if h.mu > density.w_min() && h.mu <= top {
            let s = model_survival_at(model, density, h.mu);
            sum += (-lambda * s * t - shift).exp() / (1.0 + k * s);
        }
    } else {
        for &(b, weight, pos) in &nodes.nodes {
            let s = pos.eval(survival);
            let term = weight * h.pdf(b) * (-lambda * s * t - shift).exp() / (1.0 + k * s);
            if !term.is_finite() {
                return Err(Error::NonFiniteIntegrand { b });
            }
            sum += term;
        }
    }
    if !(sum > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let mut value = sum.ln() + shift;
    if let Some((w, pos)) = wage {
        let f = pos.eval(&model.implied.offer_density);
        if !(f > 0.0) {
            return Err(Error::ZeroWageDensity { w });
        }
        value += lambda.ln() + f.ln();
    }
    Ok(value)
}

fn model_survival_at(model: &ThetaModel, density: &WageDensityEstimate, w: f64) -> f64 {
    if w <= density.w_min() {
        1.0
    } else if w >= density.w_max() {
        0.0
    } else {
        GridPos::locate(&density.grid, w).eval(&model.implied.offer_survival)
    }
}

fn log_le(model: &ThetaModel, t: f64, w: f64, g: f64, s: f64, destination: Destination) -> Result<f64> {
    if !(g > 0.0) {
        return Err(Error::ZeroWageDensity { w });
    }
    let Theta { lambda, delta, .. } = model.theta;
    let mut value = (model.implied.employment * g).ln() - (delta + lambda * s) * t;
    match destination {
        Destination::U => value += delta.ln(),
        Destination::E => value += (lambda * s.max(SURVIVAL_FLOOR)).ln(),
        Destination::Censored => {}
    }
    Ok(value)
}

fn check_unemployed(spell: &Spell) -> Result<()> {
    if spell.origin != Origin::U {
        return Err(Error::Schema("unemployment likelihood needs a spell with origin U".into()));
    }
    if spell.censored() && spell.wage.is_some() {
        return Err(Error::Schema("censored unemployment spell carries a wage".into()));
    }
    Ok(())
}

/// Log likelihood contribution of one unemployment spell.
pub fn loglik_unemployed(spell: &Spell, theta: &Theta, density: &WageDensityEstimate) -> Result<f64> {
    check_unemployed(spell)?;
    let model = ThetaModel::new(theta, density)?;
    let gl = GaussLegendre::new(GL_NODES);
    unemployed_with_model(spell, &model, density, &gl)
}

pub(crate) fn unemployed_with_model(
    spell: &Spell,
    model: &ThetaModel,
    density: &WageDensityEstimate,
    gl: &GaussLegendre,
) -> Result<f64> {
    let wage = match spell.wage {
        Some(w) if !spell.censored() => Some((w, GridPos::locate(&density.grid, w))),
        _ => None,
    };
    let top = wage.map(|(w, _)| w).unwrap_or(density.w_max());
    let nodes = BNodes::new(gl, &density.grid, density.w_min(), top);
    log_lu(model, density, spell.duration, wage, &nodes)
}

/// Log likelihood contribution of one employment spell.
pub fn loglik_employed(spell: &Spell, theta: &Theta, density: &WageDensityEstimate) -> Result<f64> {
    let model = ThetaModel::new(theta, density)?;
    employed_with_model(spell, &model, density)
}

pub(crate) fn employed_with_model(spell: &Spell, model: &ThetaModel, density: &WageDensityEstimate) -> Result<f64> {
    if spell.origin != Origin::E {
        return Err(Error::Schema("employment likelihood needs a spell with origin E".into()));
    }
    let w = spell
        .wage
        .ok_or_else(|| Error::Schema("employment spell without a wage".into()))?;
    let g = density.density_at(w);
    let s = model_survival_at(model, density, w);
    log_le(model, spell.duration, w, g, s, spell.destination)
}

#[derive(Debug, Clone)]
enum Prepared {
    Unemployed {
        t: f64,
        wage: Option<(f64, GridPos)>,
        nodes: BNodes,
    },
    Employed {
        t: f64,
        w: f64,
        pos: GridPos,
        g: f64,
        destination: Destination,
    },
}

/// A spell sample with every `θ`-independent quantity precomputed: grid
/// positions of observed wages and of the quadrature nodes.
#[derive(Debug, Clone)]
pub struct SampleLikelihood<'a> {
    density: &'a WageDensityEstimate,
    spells: Vec<Prepared>,
}

impl<'a> SampleLikelihood<'a> {
    /// Spells must already lie inside the density support.
    pub fn new(spells: &[Spell], density: &'a WageDensityEstimate) -> Result<Self> {
        let gl = GaussLegendre::new(GL_NODES);
        let mut out = Vec::with_capacity(spells.len());
        for s in spells {
            match s.origin {
                Origin::U => {
                    check_unemployed(s)?;
                    let wage = match s.wage {
                        Some(w) => Some((w, GridPos::locate(&density.grid, w))),
                        None => None,
                    };
                    let top = wage.map(|(w, _)| w).unwrap_or(density.w_max());
                    out.push(Prepared::Unemployed {
                        t: s.duration,
                        nodes: BNodes::new(&gl, &density.grid, density.w_min(), top),
                        wage,
                    });
                }
                Origin::E => {
                    let w = s
                        .wage
                        .ok_or_else(|| Error::Schema("employment spell without a wage".into()))?;
                    let g = density.density_at(w);
                    if !(g > 0.0) {
                        return Err(Error::ZeroWageDensity { w });
                    }
                    out.push(Prepared::Employed {
                        t: s.duration,
                        w,
                        pos: GridPos::locate(&density.grid, w),
                        g,
                        destination: s.destination,
                    });
                }
            }
        }
        Ok(Self { density, spells: out })
    }

    pub fn len(&self) -> usize {
        self.spells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spells.is_empty()
    }

    /// Total log likelihood at `θ`; `-inf` when `θ` is incompatible with the
    /// wage density (e.g. `H` underflows on the support).
    pub fn total(&self, theta: &Theta) -> f64 {
        match ThetaModel::new(theta, self.density) {
            Ok(model) => self.total_with(&model).unwrap_or(f64::NEG_INFINITY),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    pub fn total_with(&self, model: &ThetaModel) -> Result<f64> {
        let d = self.density;
        let mut acc = 0.0;
        for s in &self.spells {
            acc += match s {
                Prepared::Unemployed { t, wage, nodes } => log_lu(model, d, *t, *wage, nodes)?,
                Prepared::Employed { t, w, pos, g, destination } => {
                    let surv = if *w >= d.w_max() {
                        0.0
                    } else {
                        pos.eval(&model.implied.offer_survival)
                    };
                    log_le(model, *t, *w, *g, surv, *destination)?
                }
            };
        }
        Ok(acc)
    }
}
