//! Variable-length, prefix-free port labels for source-routed networks.
//!
//! A routed network is modeled as a directed graph together with a set of
//! paths that packets must be able to follow. Every out-arc of a vertex gets
//! a binary label; the labels at each vertex must form a prefix-free set so
//! that a switch can pop exactly one label off the front of a packet header
//! and know which port to use. A path is encoded as the concatenation of its
//! arc labels, and the quantity to minimize is the longest encoding over the
//! path set.
//!
//! The pipeline:
//!
//! 1. [`solver`]: solve the continuous relaxation of the label-length
//!    assignment problem by projected gradient ascent on its dual.
//! 2. [`integerize`]: round the fractional lengths up, then locally repair
//!    slack along the longest paths. The tree dynamic program lives here;
//!    [`exact`] adds a small-instance exhaustive search.
//! 3. [`labeling`]: turn integer lengths into concrete prefix-free bit
//!    labels and fill in lengths for arcs no path uses.
//! 4. [`codec`]: encode paths into packet headers, and simulate switches
//!    forwarding a packet by consuming the header label by label.
//!
//! [`topology`] holds the graph/path model and its text format, [`satgen`]
//! builds hard instances from small CNF formulas, [`generate`] produces
//! synthetic families, and [`pipeline`] ties the stages into one run with a
//! report.
//!
//! Floating-point stages are generic over the scalar type through
//! [`Scalar`]; `f64` is the default used by the command-line tool, and the
//! aliases at the crate root pin both concrete instantiations. Feasibility
//! checks on integer lengths are done in exact rational arithmetic, never in
//! floating point.

#![forbid(unsafe_code)]

pub mod codec;
pub mod exact;
pub mod generate;
pub mod integerize;
pub mod labeling;
pub mod pipeline;
pub mod satgen;
pub mod solver;
pub mod topology;

mod scalar;

pub use scalar::Scalar;
pub use topology::{Graph, Path, ProblemInstance};

/// Dual weights over the path set, double precision.
pub type DualWeights64 = solver::DualWeights<f64>;
/// Dual weights over the path set, single precision.
pub type DualWeights32 = solver::DualWeights<f32>;
/// Fractional arc lengths, double precision.
pub type RealLengths64 = solver::RealLengths<f64>;
/// Fractional arc lengths, single precision.
pub type RealLengths32 = solver::RealLengths<f32>;
/// Solver configuration, double precision.
pub type SolverConfig64 = solver::SolverConfig<f64>;
/// Solver configuration, single precision.
pub type SolverConfig32 = solver::SolverConfig<f32>;
/// Pipeline configuration, double precision.
pub type PipelineConfig64 = pipeline::PipelineConfig<f64>;
/// Pipeline configuration, single precision.
pub type PipelineConfig32 = pipeline::PipelineConfig<f32>;
