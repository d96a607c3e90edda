//! Confidence-masked graph attention (CO-GAT) for multi-evidence fact verification.
//!
//! A claim and its retrieved evidence sentences form a small fully connected
//! graph. Each node encodes one claim-evidence pair; a relevance head scores
//! every node and the score decides how much of the node survives before graph
//! attention, the remainder being replaced by a claim-only "blank" encoding.
//!
//! Module map:
//!
//! - [`numerics`]: dense tensors, a reverse-mode tape, Adam, checkpoints.
//! - [`data`]: claim ingestion, graph construction, the hashing text encoder,
//!   and a synthetic claim generator.
//! - [`graph`]: the model (masking, edge attention, node attention, label head).
//! - [`training`]: multi-task loss, training loop with early stopping, evaluation.
//! - [`metrics`]: FEVER score, label accuracy, evidence P/R/F1, attention
//!   entropy, NEI-tendency curves and confidence scaling sweeps.

pub mod data;
pub mod error;
pub mod exec;
pub mod graph;
pub mod metrics;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};
pub use exec::Execution;
