//! Vertical-plane climb trajectory prediction.
//!
//! The climb is modelled as a hybrid system: a discrete mode (speed regime,
//! atmospheric layer, speed trend) selects the energy share factor and target
//! speed, while altitude and true airspeed follow the total-energy equations.
//! Five time-invariant parameters (mass, temperature offset and the three
//! climb speeds) are tuned against observed altitude tracks with CMA-ES,
//! either on a whole trajectory or online with a regularized, cross-validated
//! objective.
//!
//! Internal units are SI (m, m/s, kg, K). Aviation units only appear at the
//! file and CLI boundary, see [`units`].

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atmosphere;
pub mod cmaes;
pub mod dataio;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod evaluation;
pub mod integrator;
pub mod performance;
pub mod units;

pub use crate::dynamics::{
    DynamicsConfig, HybridSystem, Layer, Mode, Slopes, SpeedRegime, SpeedTrend, State, TuningParams,
};
pub use crate::error::{Error, Result};
pub use crate::estimation::{ClimbContext, FitResult, OnlineConfig, ParamBounds};
pub use crate::evaluation::{EvaluationReport, Flight, MeteringSpec, ReportRow};
pub use crate::integrator::{SimulationOutcome, Termination, Trajectory, TrajectorySample};
pub use crate::performance::AircraftPerfModel;
