//! Exact simulator and verification workbench for Look-Compute-Move mobile
//! robots under the OBLOT, FSTA, FCOM and LUMI light models and the FSYNC,
//! SSYNC and ASYNC schedulers.

pub mod algorithms;
pub mod engine;
pub mod geometry;
pub mod impossibility;
pub mod problems;
pub mod relations;
pub mod schedulers;

pub use engine::{Color, Model, Program, Snapshot, Trace, WorldState};
pub use geometry::{Multiplier, Point, Scalar, Transform};
pub use problems::{Config, Verdict};
pub use schedulers::{AdversaryParams, Schedule, SchedulerKind};
