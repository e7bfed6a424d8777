//! Equilibrium job search with wage posting, on-the-job search, heterogeneous
//! firm productivity and heterogeneous reservation wages.
//!
//! The crate covers the whole pipeline for one or two labour-market segments:
//!
//! * [`equilibrium`]: forward solve (productivity law to wage offers, accepted
//!   wages and unemployment) and the inverse route from an observed wage density.
//! * [`simulator`]: flow samples of unemployment and employment spells.
//! * [`estimation`]: kernel wage density, spell likelihoods, maximum likelihood
//!   and bootstrap percentile intervals.
//! * [`decomposition`]: wage differential, migrant effect, the counterfactual
//!   experiment grid and Pareto calibration.
//! * [`montecarlo`]: the replicate-and-refit validation loop.

pub mod decomposition;
pub mod dist;
pub mod equilibrium;
pub mod error;
pub mod estimation;
pub mod montecarlo;
pub mod optim;
pub mod quad;
pub mod rng;
pub mod simulator;
pub mod spell;

pub use decomposition::{DecompositionReport, ExperimentRow, ExperimentSpec, Param, SegmentPair};
pub use dist::{ParetoProductivity, ReservationWageDist};
pub use equilibrium::{EquilibriumSolution, FrictionParams, SegmentParams, SolverSettings};
pub use error::{Error, Result};
pub use estimation::{FitOptions, FitResult, Theta, WageDensityEstimate};
pub use simulator::{SampleDesign, SimConfig};
pub use spell::{Destination, Origin, Spell};
