//! Metric and combinatorial graphs, points on them, potentials, and the
//! GRAPH text format.

mod combinatorial;
mod format;
mod metric;
mod potential;

use thiserror::Error;

pub use combinatorial::CombinatorialGraph;
pub use format::{parse_graph, parse_profile, GraphFile};
pub use metric::{total_volume, Edge, MetricGraph, PointOnGraph};
pub use potential::{evaluate_potential, EdgePotential, PotentialSpec};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown vertex `{vertex}`")]
    UnknownVertexAt { line: usize, vertex: String },

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("unknown edge `{0}`")]
    UnknownEdge(String),

    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),

    #[error("duplicate edge `{0}`")]
    DuplicateEdge(String),

    #[error("more than one potential given for edge `{0}`")]
    DuplicatePotential(String),

    #[error("edge `{edge}` has non-positive length {length}")]
    NonPositiveLength { edge: String, length: f64 },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("graph has no vertices")]
    Empty,

    #[error("point (edge #{edge}, s = {s}) is not on the graph")]
    OffGraph { edge: usize, s: f64 },

    #[error("cannot parse point `{0}`; expected `<edge-id>:<arclength>`")]
    BadPoint(String),

    #[error("invalid potential on `{edge}`: {reason}")]
    BadPotential { edge: String, reason: String },

    #[error("adjacency is not symmetric at ({i}, {j})")]
    Asymmetric { i: usize, j: usize },

    #[error("adjacency weight at ({i}, {j}) is {weight}; weights must be non-negative")]
    NegativeWeight { i: usize, j: usize, weight: f64 },

    #[error("adjacency is {rows}x{cols} but {potential} potential values were given")]
    ShapeMismatch { rows: usize, cols: usize, potential: usize },
}
