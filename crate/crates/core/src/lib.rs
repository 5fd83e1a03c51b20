//! Online approximate planning for multi-agent firefighting on graph worlds.
//!
//! The crate provides a seeded fire simulator on a graph of buildings and
//! roads, an exact joint value-iteration solver for small instances, and an
//! online planner built from task clustering, a single-agent presence-mass
//! approximation, static tasks, shortest-path pruning and a dynamic planning
//! horizon, together with baseline planners and a benchmark harness.

pub mod approx;
pub mod bench;
pub mod error;
pub mod exact;
pub mod planner;
pub mod presence;
pub mod simulator;
pub mod world;

pub use error::{Error, Result};
