//! Mass-lumped linear finite elements for `-d²/dx²` on metric graphs.
//!
//! Every edge is cut into `m_e = ceil(length / target_h)` equal pieces
//! (at least two). Edge-end nodes at the same vertex are merged into one
//! unknown, so continuity is built in and the Kirchhoff flux balance comes
//! out of assembly. With stiffness `S` and lumped mass `W`, the operator is
//! the symmetric matrix `A = W^{-1/2} S W^{-1/2}`, whose eigenvectors are
//! `W^{1/2}` times nodal values of the eigenfunctions.

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::graph::{CombinatorialGraph, EdgePotential, MetricGraph, PointOnGraph, PotentialSpec};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh step {0} must be positive and finite")]
    InvalidStep(f64),

    #[error("mesh step {target_h} is too coarse: it must be below the shortest edge length {min_length}")]
    TooCoarse { target_h: f64, min_length: f64 },

    #[error("sampled potential on edge `{edge}` has {got} values but the mesh has {expected} nodes there")]
    SampleCountMismatch { edge: String, got: usize, expected: usize },

    #[error("point is not on the meshed graph: {0}")]
    Point(#[from] crate::graph::GraphError),
}

/// Which operator a matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// Kirchhoff Laplacian `H₀` on a metric graph.
    H0,
    /// `H₀ + V` on a metric graph.
    H,
    /// `D - A + diag(V)` on a finite graph.
    Combinatorial,
    /// `-d²/dx²` on `(-a, a)` with Dirichlet ends.
    DirichletInterval,
}

/// Node layout of a meshed metric graph.
///
/// Vertex nodes come first (node `v` is vertex `v`), followed by the
/// interior nodes of each edge in edge order.
#[derive(Debug, Clone)]
pub struct Mesh {
    graph: MetricGraph,
    edge_nodes: Vec<Vec<usize>>,
    edge_step: Vec<f64>,
    weights: Vec<f64>,
}

/// Two-node linear interpolation stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub nodes: [usize; 2],
    pub coeffs: [f64; 2],
}

impl Mesh {
    pub fn new(g: &MetricGraph, target_h: f64) -> Result<Self, MeshError> {
        if !(target_h > 0.0) || !target_h.is_finite() {
            return Err(MeshError::InvalidStep(target_h));
        }
        let min_length = g.min_edge_length();
        if target_h >= min_length {
            return Err(MeshError::TooCoarse { target_h, min_length });
        }

        let n_vertices = g.vertices().len();
        let mut weights = vec![0.0; n_vertices];
        let mut edge_nodes = Vec::with_capacity(g.edges().len());
        let mut edge_step = Vec::with_capacity(g.edges().len());
        for e in g.edges() {
            let pieces = ((e.length / target_h).ceil() as usize).max(2);
            let step = e.length / pieces as f64;
            let mut nodes = Vec::with_capacity(pieces + 1);
            nodes.push(e.tail);
            for _ in 1..pieces {
                nodes.push(weights.len());
                weights.push(0.0);
            }
            nodes.push(e.head);
            for pair in nodes.windows(2) {
                weights[pair[0]] += 0.5 * step;
                weights[pair[1]] += 0.5 * step;
            }
            edge_nodes.push(nodes);
            edge_step.push(step);
        }
        Ok(Self { graph: g.clone(), edge_nodes, edge_step, weights })
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Lumped quadrature weight of every node; they sum to |X|.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Global node indices along edge `edge`, tail to head.
    pub fn edge_nodes(&self, edge: usize) -> &[usize] {
        &self.edge_nodes[edge]
    }

    pub fn edge_step(&self, edge: usize) -> f64 {
        self.edge_step[edge]
    }

    /// Largest per-edge spacing `h_e`.
    pub fn max_step(&self) -> f64 {
        self.edge_step.iter().copied().fold(0.0, f64::max)
    }

    pub fn vertex_node(&self, vertex: usize) -> usize {
        vertex
    }

    pub fn is_vertex_node(&self, node: usize) -> bool {
        node < self.graph.vertices().len()
    }

    /// Arclength position of every node, as `(edge, s)`; vertex nodes
    /// report their first incident edge end.
    pub fn node_points(&self) -> Vec<PointOnGraph> {
        let mut points = vec![None; self.len()];
        for (edge, nodes) in self.edge_nodes.iter().enumerate() {
            let step = self.edge_step[edge];
            let last = nodes.len() - 1;
            for (j, &node) in nodes.iter().enumerate() {
                let s = if j == last { self.graph.edge(edge).length } else { j as f64 * step };
                points[node].get_or_insert(PointOnGraph { edge, s });
            }
        }
        points.into_iter().map(|p| p.expect("every node lies on an edge")).collect()
    }

    /// Linear interpolation stencil for a point on the graph.
    pub fn locate(&self, p: &PointOnGraph) -> Result<Stencil, MeshError> {
        p.validate(&self.graph)?;
        let nodes = &self.edge_nodes[p.edge];
        let pieces = nodes.len() - 1;
        let x = p.s / self.edge_step[p.edge];
        let j = (x.floor() as usize).min(pieces - 1);
        let frac = (x - j as f64).clamp(0.0, 1.0);
        Ok(Stencil { nodes: [nodes[j], nodes[j + 1]], coeffs: [1.0 - frac, frac] })
    }

    /// Nodal samples of `V`. At a vertex node the incident edge ends are
    /// averaged with their lumped weights, which keeps `|V_i| ≤ ‖V‖∞`.
    pub fn sample_potential(&self, spec: &PotentialSpec) -> Result<Vec<f64>, MeshError> {
        let mut acc = vec![0.0; self.len()];
        for (edge, nodes) in self.edge_nodes.iter().enumerate() {
            if let Some(EdgePotential::Sampled(values)) = spec.edge_profile(edge) {
                if values.len() != nodes.len() {
                    return Err(MeshError::SampleCountMismatch {
                        edge: self.graph.edge(edge).id.clone(),
                        got: values.len(),
                        expected: nodes.len(),
                    });
                }
            }
            let step = self.edge_step[edge];
            let last = nodes.len() - 1;
            for (j, &node) in nodes.iter().enumerate() {
                let s = if j == last { self.graph.edge(edge).length } else { j as f64 * step };
                let v = spec.eval_on_edge(edge, s);
                if self.is_vertex_node(node) {
                    acc[node] += 0.5 * step * v;
                } else {
                    acc[node] = v;
                }
            }
        }
        for (v, value) in acc.iter_mut().enumerate().take(self.graph.vertices().len()) {
            *value /= self.weights[v];
        }
        Ok(acc)
    }

    /// Assembled stiffness matrix `S` with `f·S·f = ∫|f'|²` for
    /// piecewise-linear `f`.
    pub fn stiffness(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut s = DMatrix::zeros(n, n);
        for (edge, nodes) in self.edge_nodes.iter().enumerate() {
            let k = 1.0 / self.edge_step[edge];
            for pair in nodes.windows(2) {
                let (i, j) = (pair[0], pair[1]);
                s[(i, i)] += k;
                s[(j, j)] += k;
                s[(i, j)] -= k;
                s[(j, i)] -= k;
            }
        }
        s
    }
}

/// A real symmetric matrix standing for `H₀`, `H`, a combinatorial
/// Laplacian, or a Dirichlet interval operator, together with the
/// quadrature weights that define its inner product.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    kind: OperatorKind,
    matrix: DMatrix<f64>,
    weights: Vec<f64>,
    potential: Vec<f64>,
    mesh: Option<Arc<Mesh>>,
    weyl_dim: u32,
}

impl DiscreteOperator {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Diagonal potential values (zero for `H₀`).
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn mesh(&self) -> Option<&Arc<Mesh>> {
        self.mesh.as_ref()
    }

    /// Exponent `d` in the small-time diagonal behaviour `K(t,x,x) ~ a t^{-d/2}`.
    pub fn weyl_dim(&self) -> u32 {
        self.weyl_dim
    }

    /// Maximum absolute row sum; bounds the spectral radius.
    pub fn norm(&self) -> f64 {
        inf_norm(&self.matrix)
    }

    /// `A + diag(shift)`, keeping everything else. Used for `H₀ + sV` sweeps
    /// on a fixed mesh.
    pub fn with_added_potential(&self, values: &[f64], scale: f64) -> Self {
        let mut out = self.clone();
        for (i, &v) in values.iter().enumerate() {
            out.matrix[(i, i)] += scale * v;
            out.potential[i] += scale * v;
        }
        if out.kind == OperatorKind::H0 && values.iter().any(|&v| scale * v != 0.0) {
            out.kind = OperatorKind::H;
        }
        out
    }
}

pub(crate) fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn symmetrize_with_mass(stiffness: DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let scale: Vec<f64> = weights.iter().map(|w| w.sqrt().recip()).collect();
    DMatrix::from_fn(stiffness.nrows(), stiffness.ncols(), |i, j| {
        stiffness[(i, j)] * (scale[i] * scale[j])
    })
}

/// Kirchhoff Laplacian `H₀` on `g` with mesh spacing at most `target_h`.
pub fn assemble_h0(g: &MetricGraph, target_h: f64) -> Result<DiscreteOperator, MeshError> {
    let mesh = Mesh::new(g, target_h)?;
    let matrix = symmetrize_with_mass(mesh.stiffness(), mesh.weights());
    let n = mesh.len();
    Ok(DiscreteOperator {
        kind: OperatorKind::H0,
        matrix,
        weights: mesh.weights().to_vec(),
        potential: vec![0.0; n],
        mesh: Some(Arc::new(mesh)),
        weyl_dim: 1,
    })
}

/// `H = H₀ + V` on the same mesh `assemble_h0` would build.
pub fn assemble_h(g: &MetricGraph, v: &PotentialSpec, target_h: f64) -> Result<DiscreteOperator, MeshError> {
    let h0 = assemble_h0(g, target_h)?;
    let values = h0.mesh.as_ref().expect("metric operator has a mesh").sample_potential(v)?;
    let mut h = h0.with_added_potential(&values, 1.0);
    h.kind = OperatorKind::H;
    Ok(h)
}

/// `L = D - A + diag(V)` with unit vertex weights.
pub fn assemble_combinatorial(g: &CombinatorialGraph) -> DiscreteOperator {
    let n = g.len();
    let w = g.weights();
    let mut matrix = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && w[(i, j)] != 0.0 {
                matrix[(i, j)] = -w[(i, j)];
                matrix[(i, i)] += w[(i, j)];
            }
        }
        matrix[(i, i)] += g.potential()[i];
    }
    DiscreteOperator {
        kind: OperatorKind::Combinatorial,
        matrix,
        weights: vec![1.0; n],
        potential: g.potential().to_vec(),
        mesh: None,
        weyl_dim: 0,
    }
}

/// `-d²/dx²` on `(-a, a)` with Dirichlet ends; the unknowns are the
/// interior nodes `x_j = -a + j h`, `j = 1..m-1`.
pub fn assemble_dirichlet_interval(a: f64, target_h: f64) -> Result<DiscreteOperator, MeshError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(MeshError::InvalidStep(a));
    }
    if !(target_h > 0.0) || !target_h.is_finite() {
        return Err(MeshError::InvalidStep(target_h));
    }
    let length = 2.0 * a;
    if target_h >= a {
        return Err(MeshError::TooCoarse { target_h, min_length: a });
    }
    let pieces = ((length / target_h).ceil() as usize).max(2);
    let step = length / pieces as f64;
    let n = pieces - 1;
    let diag = 2.0 / (step * step);
    let off = -1.0 / (step * step);
    let matrix = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => diag,
        1 => off,
        _ => 0.0,
    });
    Ok(DiscreteOperator {
        kind: OperatorKind::DirichletInterval,
        matrix,
        weights: vec![step; n],
        potential: vec![0.0; n],
        mesh: None,
        weyl_dim: 1,
    })
}
