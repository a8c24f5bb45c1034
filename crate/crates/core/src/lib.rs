//! Benchmark synthesis and solver-effectiveness meta-learning for QUBO
//! problems.
//!
//! The crate covers the whole chain: instance generation for ten problem
//! classes, classical samplers, exhaustive solution-space enumeration, minor
//! embedding onto Chimera/Pegasus graphs, the instance feature catalog, label
//! construction and nested cross-validated meta-models. Every capability has
//! a runnable program under `examples/`; run one with
//! `cargo run --release --example NAME`.

pub mod embedding;
pub mod error;
pub mod features;
pub mod io;
pub mod linalg;
pub mod metalearn;
pub mod pipeline;
pub mod problems;
pub mod qubo;
pub mod seed;
pub mod solvers;
pub mod space;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use qubo::{IsingModel, ProblemClass, QuboInstance, Sample, SampleSet, SizeClass};
