//! Corridor usage probabilities for shopping-mall graphs.
//!
//! - [`graph`]: heterogeneous mall graphs, procedural generation, canonical
//!   JSON, and exact shortest-path machinery.
//! - [`prob`]: the attraction-probability model, shop feature assignment,
//!   per-edge usage targets, non-shop and graph-level features.
//! - [`autodiff`]: a small reverse-mode tape over dense `f64` matrices with
//!   Adam and a finite-difference checker.
//! - [`gnn`]: the heterogeneous message-passing encoder and edge decoder.
//! - [`pipeline`]: dataset assembly, training and evaluation.
//! - [`cli`] and [`report`]: the batch-experiment command surface and its
//!   CSV/SVG outputs.

pub mod autodiff;
pub mod cli;
pub mod gnn;
pub mod graph;
pub mod pipeline;
pub mod prob;
pub mod report;
pub mod seed;

pub(crate) mod fsutil;
