//! Downlink cell-free massive MIMO with partially coherent AP clusters.
//!
//! APs within a cluster share a phase reference and transmit jointly; clusters
//! transmit independently coded streams. The crate draws networks, clusters
//! the APs, allocates streams, optimizes precoders and combiners by weighted
//! MMSE, and runs Monte Carlo experiments over all of it.

pub mod allocation;
pub mod channel;
pub mod clustering;
pub mod config;
pub mod error;
pub mod experiments;
pub mod format;
pub mod linalg;
pub mod motivating;
pub mod rates;
pub mod rng;
pub mod wmmse;

pub use allocation::{cinr_matrix, greedy_allocate};
pub use channel::NetworkRealization;
pub use clustering::{cluster_aps, ClusterSet, ZoneSet};
pub use config::{AllocationMode, Mode, Precoding, ScenarioConfig};
pub use error::{Error, Result};
pub use experiments::{run_scenario, sweep, ExperimentResult, SweepSpec};
pub use rates::{BeamformingState, RateReport, StreamAllocation, System};
pub use wmmse::{wmmse_solve, SolverConfig};
