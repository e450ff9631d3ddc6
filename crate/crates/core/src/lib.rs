//! Predictive user-AP association and resource allocation for wireless
//! caching networks.
//!
//! The crate is a discrete-time simulator built around a per-slot control
//! loop:
//!
//! ```text
//!  slot event ──▶ channel ──▶ weights ──▶ greedy association ──▶ rates
//!  (gains, A, I)   C_uh(t)     M_uh(t)     (two partition matroids)   mu_u(t)
//!                                                                     │
//!        metrics ◀── advance window queues ◀── FIFO service ◀─────────┘
//! ```
//!
//! Each user keeps one queue per file type. A queue is split into the
//! backlog of requests that already arrived plus a lookahead window of
//! predicted requests that may be served before they arrive. Predictions can
//! be wrong in type or size; mismatches are reconciled when the real request
//! shows up.
//!
//! Module map:
//!
//! - [`config`]: [`SimConfig`] and its TOML form.
//! - [`topology`]: user/AP layout, potential links, cache placement, Zipf law.
//! - [`channel`]: WINNER II small-cell path loss and Monte Carlo link capacity.
//! - [`traffic`]: request arrivals, prediction errors, arrival reconciliation.
//! - [`scheduler`]: drift-plus-penalty weights, greedy and exact association,
//!   rate allocation.
//! - [`queueing`]: lookahead window queues and the FIFO service discipline.
//! - [`engine`]: the slot loop, metrics and parameter sweeps.
//! - [`cli`]: the command-line front end used by the `cachenet` binary.
//!
//! Runnable walkthroughs for each capability live in the crate's `examples/`
//! directory (`cargo run --release --example <name>`).

pub mod channel;
pub mod cli;
pub mod config;
pub mod engine;
mod error;
pub mod queueing;
pub mod rng;
pub mod scheduler;
pub mod stats;
pub mod topology;
pub mod traffic;

pub use channel::{estimate_capacities, los_probability, path_loss_gain, ChannelSlot};
pub use config::SimConfig;
pub use engine::{run, sweep, MetricsReport, SweepAxis};
pub use error::{Error, Result};
pub use queueing::{ServiceOutcome, UserQueues};
pub use scheduler::{
    allocate_rates, brute_force_associate, compute_weights, greedy_associate, Association,
    WeightMatrix,
};
pub use topology::{generate_topology, zipf_probabilities, Topology};
pub use traffic::{PredictionErrorModel, Request};
