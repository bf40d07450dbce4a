//! Analysis, optimization and slot-level simulation of the average Age of
//! Information (AAoI) in IEEE 802.11ax UORA uplink random access networks.
//!
//! The library models a symmetric BSS of `N` stations contending for `L`
//! random-access resource units under exponential OBO backoff, with Bernoulli
//! status-update arrivals of rate `lambda` per slot. It provides
//!
//! - an analytical pipeline (coupled Markov chains, fixed point in the success
//!   rate `q` and accessing rate `rho`, waiting/service moment recursions)
//!   that evaluates the long-term AAoI,
//! - closed forms and a lower bound for the fixed-window generate-at-will
//!   regime, together with the root machinery used to optimize `W_0`,
//! - parameter search routines (exhaustive and two efficient variants),
//! - a reproducible slot-level Monte Carlo simulator with round-robin and
//!   max-AoI centralized baselines, used to validate every analytical
//!   quantity.
//!
//! With the default `parallel` feature, simulation replications, exhaustive
//! search cells and sweep rows are evaluated on a rayon thread pool; without
//! it everything runs sequentially on one thread with identical results.

pub mod aoi;
pub mod bounds;
pub mod cli;
pub mod combinatorics;
pub mod config;
pub mod error;
pub mod optimizer;
pub mod sim;
pub mod steady_state;

pub use aoi::{average_aoi, AoiBreakdown};
pub use config::{BackoffLadder, NetworkConfig, SlotTiming};
pub use error::{Result, UoraError};
pub use optimizer::{OptimizationResult, SearchMethod};
pub use sim::{run_simulation, Policy, SimConfig, SimStats};
pub use steady_state::{solve_fixed_point, SteadyState};
