//! Problem formulations and instance generation.

pub mod dataset;
pub mod formulations;
pub mod generate;
pub mod graph;
pub mod tune;

pub use dataset::{bundled_corpus, read_csv, synthetic, Dataset};
pub use formulations::*;
pub use generate::{generate, generate_with_datasets, instance_id, write_batch, GenerationSpec};
pub use graph::{generate_graph, ProblemGraph, Topology, TweakLog};
pub use tune::{tune_penalty, PenaltyTuneConfig, PenaltyTuneOutcome};
