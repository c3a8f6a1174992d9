//! First-order iterative algorithms with step-size schedules and full trace
//! recording: gradient descent, projected gradient descent, exponentiated
//! gradient descent, generic mirror descent over a pluggable geometry, ISTA,
//! and NoLips.

mod objective;
mod runners;
mod schedule;
mod trace;

pub use objective::{FnObjective, GlmLoss, LeastSquares, LinearObjective, Objective, PlipObjective};
pub use runners::{
    egd_run, gd_run, ista_run, mirror_descent_run, nolips_run, projected_gd_run, soft_threshold,
};
pub use schedule::StepSchedule;
pub use trace::{AlgorithmTag, IterateTrace, TraceRecord};
