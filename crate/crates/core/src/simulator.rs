//! Flow samples of unemployment and employment spells drawn from a solved
//! equilibrium, plus a long-run worker panel used for steady-state checks.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{EquilibriumSolution, SegmentParams, SolverSettings};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};
use crate::spell::{Destination, Origin, Spell};

/// How many spells of each origin a sample contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleDesign {
    /// Fixed numbers of unemployment and employment spells.
    Counts { unemployed: usize, employed: usize },
    /// `total` workers drawn from the employable population; each is
    /// unemployed with the model's steady-state probability.
    Stock { total: usize },
}

impl SampleDesign {
    pub fn len(&self) -> usize {
        match *self {
            SampleDesign::Counts { unemployed, employed } => unemployed + employed,
            SampleDesign::Stock { total } => total,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub segment_id: String,
    pub segment: SegmentParams,
    pub design: SampleDesign,
    /// Administrative horizon in days; spells longer than this are right-censored.
    pub censor_horizon: Option<f64>,
    pub seed: u64,
    pub replicate: u64,
    pub solver: SolverSettings,
}

impl SimConfig {
    pub fn new(segment_id: impl Into<String>, segment: SegmentParams, design: SampleDesign, seed: u64) -> Self {
        Self {
            segment_id: segment_id.into(),
            segment,
            design,
            censor_horizon: None,
            seed,
            replicate: 0,
            solver: SolverSettings::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(h) = self.censor_horizon {
            if !(h > 0.0) {
                return Err(Error::InvalidParameter(format!("censor horizon must be > 0 (got {h})")));
            }
        }
        Ok(())
    }
}

fn exp_draw(rng: &mut StreamRng, rate: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    e / rate
}

fn open_unit(rng: &mut StreamRng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Probability that a sampled employable worker is unemployed:
/// `(u - (1 - H(w_max))) / (1 - (1 - H(w_max)))`.
pub fn unemployed_sampling_share(eq: &EquilibriumSolution) -> f64 {
    let u_employable = eq.pool.employable_mass();
    u_employable / (u_employable + 1.0 - eq.unemployment)
}

/// Draw `b` from the unemployed pool restricted to `b <= w_max`.
/// Candidates from `H` are kept with probability `1/(1 + k F̄(b))`.
fn draw_pool_reservation(eq: &EquilibriumSolution, rng: &mut StreamRng) -> (f64, f64) {
    let h = &eq.params.reservation;
    let k = eq.params.frictions.k();
    loop {
        let b = h.quantile(open_unit(rng));
        if b >= eq.w_max() {
            continue;
        }
        let s = eq.curve.survival_at(b);
        let accept: f64 = rng.random();
        if accept * (1.0 + k * s) < 1.0 && s > 0.0 {
            return (b, s);
        }
    }
}

/// Draw from `F` truncated below at `floor`.
fn draw_offer_above(eq: &EquilibriumSolution, floor: f64, rng: &mut StreamRng) -> f64 {
    let lo = eq.curve.cdf_at(floor);
    let q = lo + open_unit(rng) * (1.0 - lo);
    eq.curve.offer_quantile(q).max(floor)
}

pub fn draw_unemployed_spell(
    eq: &EquilibriumSolution,
    segment_id: &str,
    censor_horizon: Option<f64>,
    rng: &mut StreamRng,
) -> Spell {
    let (b, s) = draw_pool_reservation(eq, rng);
    let duration = exp_draw(rng, eq.params.frictions.lambda * s);
    let wage = draw_offer_above(eq, b.max(eq.w_min()), rng);
    match censor_horizon {
        Some(h) if duration > h => Spell {
            segment_id: segment_id.to_string(),
            origin: Origin::U,
            duration: h,
            wage: None,
            destination: Destination::Censored,
        },
        _ => Spell {
            segment_id: segment_id.to_string(),
            origin: Origin::U,
            duration,
            wage: Some(wage),
            destination: Destination::E,
        },
    }
}

pub fn draw_employed_spell(
    eq: &EquilibriumSolution,
    segment_id: &str,
    censor_horizon: Option<f64>,
    rng: &mut StreamRng,
) -> Spell {
    let wage = eq.accepted_quantile(open_unit(rng));
    employed_spell_at(eq, segment_id, wage, censor_horizon, rng)
}

/// Employment spell at a given wage: exponential with rate `δ + λF̄(w)`, ending
/// in unemployment with probability `δ / (δ + λF̄(w))`.
pub fn employed_spell_at(
    eq: &EquilibriumSolution,
    segment_id: &str,
    wage: f64,
    censor_horizon: Option<f64>,
    rng: &mut StreamRng,
) -> Spell {
    let fr = eq.params.frictions;
    let poach = fr.lambda * eq.curve.survival_at(wage);
    let rate = fr.delta + poach;
    let duration = exp_draw(rng, rate);
    let to_u = rng.random::<f64>() * rate < fr.delta;
    let (duration, destination) = match censor_horizon {
        Some(h) if duration > h => (h, Destination::Censored),
        _ if to_u => (duration, Destination::U),
        _ => (duration, Destination::E),
    };
    Spell {
        segment_id: segment_id.to_string(),
        origin: Origin::E,
        duration,
        wage: Some(wage),
        destination,
    }
}

/// Sample from an already solved equilibrium. Spell `i` draws from stream
/// `(seed, replicate, i)`.
pub fn flow_sample_from(
    eq: &EquilibriumSolution,
    segment_id: &str,
    design: SampleDesign,
    censor_horizon: Option<f64>,
    seed: u64,
    replicate: u64,
) -> Vec<Spell> {
    match design {
        SampleDesign::Counts { unemployed, employed } => (0..unemployed + employed)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, replicate, i as u64);
                if i < unemployed {
                    draw_unemployed_spell(eq, segment_id, censor_horizon, &mut rng)
                } else {
                    draw_employed_spell(eq, segment_id, censor_horizon, &mut rng)
                }
            })
            .collect(),
        SampleDesign::Stock { total } => {
            let share = unemployed_sampling_share(eq);
            (0..total)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream(seed, replicate, i as u64);
                    if rng.random::<f64>() < share {
                        draw_unemployed_spell(eq, segment_id, censor_horizon, &mut rng)
                    } else {
                        draw_employed_spell(eq, segment_id, censor_horizon, &mut rng)
                    }
                })
                .collect()
        }
    }
}

/// Solve the configured segment and draw its flow sample.
pub fn generate_flow_sample(cfg: &SimConfig) -> Result<Vec<Spell>> {
    cfg.validate()?;
    let eq = EquilibriumSolution::solve(&cfg.segment, &cfg.solver)?;
    Ok(flow_sample_from(
        &eq,
        &cfg.segment_id,
        cfg.design,
        cfg.censor_horizon,
        cfg.seed,
        cfg.replicate,
    ))
}

/// Cross-section of a simulated worker panel at the end of the horizon.
#[derive(Debug, Clone)]
pub struct PanelSnapshot {
    pub workers: usize,
    pub unemployed: usize,
    /// Wages of workers employed at the snapshot.
    pub employed_wages: Vec<f64>,
    pub job_to_job_moves: usize,
    /// Job-to-job moves to a lower wage; zero in this model.
    pub wage_cuts: usize,
}

impl PanelSnapshot {
    pub fn unemployment_rate(&self) -> f64 {
        self.unemployed as f64 / self.workers as f64
    }
}

enum WorkerEnd {
    Unemployed,
    Employed(f64),
}

/// Simulate `workers` workers, all unemployed at time zero, for `horizon` days
/// and report their states at the end. Workers with `b >= w_max` never leave
/// unemployment.
pub fn simulate_panel(eq: &EquilibriumSolution, workers: usize, horizon: f64, seed: u64) -> PanelSnapshot {
    let fr = eq.params.frictions;
    let h = &eq.params.reservation;
    let results: Vec<(WorkerEnd, usize, usize)> = (0..workers)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream(seed, u64::MAX, j as u64);
            let b = h.quantile(open_unit(&mut rng));
            if b >= eq.w_max() {
                return (WorkerEnd::Unemployed, 0, 0);
            }
            let floor = b.max(eq.w_min());
            let exit_u = fr.lambda * eq.curve.survival_at(floor);
            let mut now = 0.0;
            let mut wage: Option<f64> = None;
            let (mut moves, mut cuts) = (0, 0);
            loop {
                match wage {
                    None => {
                        now += exp_draw(&mut rng, exit_u);
                        if now >= horizon {
                            return (WorkerEnd::Unemployed, moves, cuts);
                        }
                        wage = Some(draw_offer_above(eq, floor, &mut rng));
                    }
                    Some(w) => {
                        let poach = fr.lambda * eq.curve.survival_at(w);
                        let rate = fr.delta + poach;
                        now += exp_draw(&mut rng, rate);
                        if now >= horizon {
                            return (WorkerEnd::Employed(w), moves, cuts);
                        }
                        if rng.random::<f64>() * rate < fr.delta {
                            wage = None;
                        } else {
                            let next = draw_offer_above(eq, w, &mut rng);
                            moves += 1;
                            if next < w {
                                cuts += 1;
                            }
                            wage = Some(next);
                        }
                    }
                }
            }
        })
        .collect();

    let mut snap = PanelSnapshot {
        workers,
        unemployed: 0,
        employed_wages: Vec::new(),
        job_to_job_moves: 0,
        wage_cuts: 0,
    };
    for (end, moves, cuts) in results {
        snap.job_to_job_moves += moves;
        snap.wage_cuts += cuts;
        match end {
            WorkerEnd::Unemployed => snap.unemployed += 1,
            WorkerEnd::Employed(w) => snap.employed_wages.push(w),
        }
    }
    snap
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ParetoProductivity;

    #[test]
    fn zero_counts_give_empty_sample() {
        let cfg = SimConfig::new(
            "n",
            SegmentParams::natives_dgp(),
            SampleDesign::Counts { unemployed: 0, employed: 0 },
            1,
        );
        assert!(generate_flow_sample(&cfg).unwrap().is_empty());
    }

    #[test]
    fn censoring_drops_unemployment_wage() {
        let eq = EquilibriumSolution::solve(&SegmentParams::natives_dgp(), &SolverSettings::default()).unwrap();
        let spells = flow_sample_from(&eq, "n", SampleDesign::Counts { unemployed: 300, employed: 300 }, Some(20.0), 3, 0);
        let mut censored = 0;
        for s in &spells {
            assert!(s.duration <= 20.0);
            if s.censored() {
                censored += 1;
                if s.origin == Origin::U {
                    assert!(s.wage.is_none());
                } else {
                    assert!(s.wage.is_some());
                }
            }
        }
        assert!(censored > 100);
    }

    #[test]
    fn top_wage_spells_always_end_in_unemployment() {
        let eq = EquilibriumSolution::solve(&SegmentParams::migrants_dgp(), &SolverSettings::default()).unwrap();
        let n = 20_000;
        let mut total = 0.0;
        for i in 0..n {
            let mut rng = stream(11, 0, i);
            let s = employed_spell_at(&eq, "f", eq.w_max(), None, &mut rng);
            assert_eq!(s.destination, Destination::U);
            total += s.duration;
        }
        let mean = total / n as f64;
        assert!((mean * 0.016 - 1.0).abs() < 0.03, "mean {mean}");
    }

    #[test]
    fn invalid_horizon_rejected() {
        let mut cfg = SimConfig::new(
            "n",
            SegmentParams::new(0.1, 0.01, 40.0, 5.0, Some(ParetoProductivity::new(50.0, 2.5).unwrap())).unwrap(),
            SampleDesign::Stock { total: 5 },
            1,
        );
        cfg.censor_horizon = Some(0.0);
        assert!(generate_flow_sample(&cfg).is_err());
    }
}
