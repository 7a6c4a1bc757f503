//! Temporal-aware multi-objective relay optimization for multi-hop V2V
//! networks.
//!
//! Each second of a vehicle trajectory becomes a [`scene::Scene`]; an
//! NSGA-II variant with variable-length genomes and elite inheritance from
//! the previous second searches message sizes, transmit powers and relay
//! paths against delay, load balance, SINR and path stability.

pub mod channel;
pub mod cli;
pub mod config;
pub mod encoding;
pub mod error;
pub mod evolution;
pub mod objectives;
pub mod oracle;
pub mod plot;
pub mod report;
pub mod rng;
pub mod scene;
pub mod temporal;
pub mod trajectory;

pub use channel::ChannelParams;
pub use config::RunConfig;
pub use encoding::{Bounds, Genome};
pub use error::{Error, Result};
pub use evolution::{EvoParams, Individual};
pub use objectives::ObjectiveVector;
pub use temporal::{SecondResult, SolverConfig};
pub use trajectory::{Archetype, ScenarioSpec, Snapshot, VehicleId, VehicleState};
