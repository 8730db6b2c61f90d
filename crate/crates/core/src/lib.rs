//! Deterministic 1 Hz simulation of parked cars that detect crossing
//! pedestrians from shoe-mounted radio beacons and slow down approaching
//! traffic.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod acceptance;
pub mod cohort;
pub mod config;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod geoloc;
pub mod metrics;
pub mod parallel;
pub mod rng;
pub mod safety_zone;
pub mod signal;
pub mod speed;
pub mod trace;

pub use config::{load_scenario, load_scenario_file, ScenarioConfig};
pub use engine::{run, World};
pub use error::{Error, Result};
pub use parallel::Exec;
pub use trace::{Record, TickTrace};
