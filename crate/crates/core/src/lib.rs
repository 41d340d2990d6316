//! Counterfactual subgraph generation over heterogeneous knowledge graphs.
//!
//! The crate trains differentiable soft masks over the nodes and edges of a
//! typed knowledge graph so that the thresholded subgraph is a minimal
//! structural perturbation with controlled semantic divergence, measured
//! against a frozen TF-IDF surrogate of the graph's textualization. Companion
//! modules provide pipeline validity checking, random and attention-guided
//! perturbation baselines, toolchain drift metrics over model output texts,
//! and low-rank adapter shift probes.

pub mod baselines;
pub mod csvutil;
pub mod fixtures;
pub mod graph;
pub mod metrics;
pub mod optim;
pub mod pipeline;
pub mod probes;
pub mod rng;
pub mod semantics;
