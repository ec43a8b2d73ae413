//! Successive convex approximation of the beamforming and RIS phase
//! sub-problems, closed-form rate adaption and the alternating loop.

mod adaption;
mod alternating;
mod programs;
mod settings;

pub use adaption::{certify, cold_start, merit, rate_adaption};
pub use alternating::{
    alternating_optimize, AlternatingOutcome, Clock, CostKind, IterateEvent, PassRecord,
    SolveSummary, StopReason, SyntheticClock, SyntheticCosts, WallClock,
};
pub use programs::{
    beamformer_var, build_beamforming_program, build_phase_program, penalty_value,
    scalarized_channels, ScaProgram, STARVED_SINR,
};
pub use settings::{ScaSettings, Subproblem};
