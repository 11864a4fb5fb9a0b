//! Unsupervised multi-task graph learning by consensus shift.
//!
//! Tasks are nodes of a fully connected graph whose directed edges are small
//! trainable models. Each node's pseudo-labels start from an expert and are
//! repeatedly replaced by a per-pixel selection ensemble (adaptive weights +
//! weighted median) over everything that reaches the node.

pub mod cli;
pub mod config;
pub mod consensus;
pub mod csmap;
pub mod edge;
pub mod error;
pub mod eval;
pub mod graph;
pub mod imgops;
pub mod maps;
pub mod rng;
pub mod split;
pub mod ssim;
pub mod synth;
pub mod tasks;

pub use error::{Error, Result};
pub use maps::{PredictionMap, SampleId, TaskKind, TaskSpec};
