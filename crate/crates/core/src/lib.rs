//! Model-based clustering of categorical symptom trajectories.
//!
//! This crate ingests daily (mood, pain) score records, reduces them to a
//! four-state space, and provides:
//!
//! - Pearson residual diagnostics against two structured null models for
//!   the pooled compound-state transition counts;
//! - EM fitting of a mixture of Markov chains over per-participant
//!   transition count matrices, with model selection over the number of
//!   components;
//! - stationary-distribution analysis of the fitted chains;
//! - counterfactual mood/pain improvement transforms on transition
//!   matrices and their effect on stationary distributions;
//! - cluster-versus-covariate association statistics (log odds ratios,
//!   proportions, group summaries).
//!
//! All results are plain data structures; the `endotype` command-line tool
//! wires them into reproducible file-based runs.

pub mod association;
pub mod em;
pub mod error;
pub mod ingest;
pub mod intervention;
pub mod io;
pub mod matrix;
pub mod residuals;
pub mod sim;
pub mod state_space;
pub mod stationary;

pub use error::{Error, Result};
pub use matrix::{CountMatrix, TransitionMatrix};
pub use state_space::{CompoundState, ReducedState, StateSpace};
