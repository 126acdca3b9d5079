//! Simulation and bisimulation distances for stochastic games, with the
//! payoff bounds they certify.
//!
//! The exact pipeline covers MDPs and turn-based games: one-step distances
//! are trans-shipping linear programs ([`matchdist`]), iterated to a
//! fixpoint in [`metrics`]. Concurrent games get a sampled lower-bound
//! estimator in [`concurrent`].

pub mod concurrent;
pub mod error;
pub mod format;
pub mod game;
pub mod linprog;
pub mod matchdist;
pub mod metrics;
pub mod payoffs;
pub mod random;

pub use error::{Error, Result};
pub use format::GameFile;
pub use game::{
    Distribution, GameKind, GameStructure, Interval, MetricMatrix, MixedMove, Player, Valuation, Violation,
};
pub use metrics::{Base, Combine, FixpointReport, MetricKind, Partition, Relation, Status};
