//! Link scheduling and power control in the SINR physical interference model.
//!
//! The crate is organised around a greedy selection rule that admits a link into a
//! channel only if its accumulated weight from shorter links stays below a threshold
//! `tau`, followed by a recursive power assignment that provably satisfies the SINR
//! constraint on every produced channel.
//!
//! * [`model`]: metrics, instances, SINR evaluation and admissibility.
//! * [`weights`]: the interference-weight graph and the greedy acceptance test.
//! * [`capacity`]: k-channel capacity maximization.
//! * [`scheduling`]: single-hop schedules and multi-hop schedules with random delays.
//! * [`routing`]: LP-based path selection with flow decomposition and rounding.
//! * [`oracle`]: exhaustive and iterative ground-truth engines for small instances.

pub mod capacity;
pub mod error;
pub mod model;
pub mod oracle;
pub mod routing;
pub mod scheduling;
pub mod spectral;
pub mod weights;

pub use capacity::{assign_powers, greedy_select, maximize_capacity, ChannelAssignment};
pub use error::{Error, Result};
pub use model::{
    admissible, check_feasible, evaluate_sinr, Admissibility, FeasibilityReport, Instance,
    InstanceParams, Link, MetricSpace, NodeId, PowerAssignment, SinrTerms, FEASIBILITY_RTOL,
};
pub use routing::{solve_clm, LinearProgram, LpSolution, Relation, RoutingProblem};
pub use scheduling::{schedule_multi_hop, schedule_single_hop, MultiHopRequest, MultiHopSchedule, Schedule, Slot};
pub use weights::{tau, WeightGraph};
