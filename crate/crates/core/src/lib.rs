//! Deterministic 2D swarm simulator and neuroevolution workbench for the
//! collective perception task.
//!
//! A swarm of differential-drive robots must decide which of two tile
//! colors covers more of the arena. Robots random-walk, estimate the
//! quality of their current opinion from ground samples, broadcast
//! opinions locally with quality-modulated dissemination, and update
//! opinions through a pluggable decision mechanism: the voter model, the
//! majority rule, or an evolved network pair. The evolution and benchmark
//! harnesses reproduce the speed/accuracy protocol around those mechanisms
//! with full seed determinism.

pub mod arena;
pub mod comms;
pub mod config;
pub mod decision;
pub mod error;
pub mod evolution;
pub mod mechanisms;
pub mod metrics;
pub mod motion;
pub mod neural;
mod sampling;
pub mod seeds;
pub mod sim;
pub mod world;

pub use arena::{Color, TileGrid};
pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use evolution::{EvoConfig, EvolutionResult, FitnessKind};
pub use mechanisms::{Mechanism, MechanismKind};
pub use metrics::{BenchmarkConfig, BenchmarkRow, RunRecord};
pub use neural::Genome;
pub use sim::{Scenario, SimParams, Simulation};
pub use world::World;
