use nalgebra::DMatrix;
use petgraph::unionfind::UnionFind;

use super::GraphError;

/// A finite weighted graph on vertices `0..n` with a potential value at
/// each vertex. Diagonal adjacency entries are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinatorialGraph {
    weights: DMatrix<f64>,
    potential: Vec<f64>,
}

impl CombinatorialGraph {
    pub fn new(weights: DMatrix<f64>, potential: Vec<f64>) -> Result<Self, GraphError> {
        let n = weights.nrows();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if weights.ncols() != n || potential.len() != n {
            return Err(GraphError::ShapeMismatch {
                rows: n,
                cols: weights.ncols(),
                potential: potential.len(),
            });
        }
        let mut components = UnionFind::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let (w, w_t) = (weights[(i, j)], weights[(j, i)]);
                if w != w_t {
                    return Err(GraphError::Asymmetric { i, j });
                }
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(GraphError::NegativeWeight { i, j, weight: w });
                }
                if w > 0.0 {
                    components.union(i, j);
                }
            }
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(GraphError::BadPotential {
                edge: "<vertex>".into(),
                reason: "non-finite vertex potential".into(),
            });
        }
        let root = components.find(0);
        if (1..n).any(|v| components.find(v) != root) {
            return Err(GraphError::Disconnected);
        }
        Ok(Self { weights, potential })
    }

    /// Unit-weight path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize, potential: Vec<f64>) -> Result<Self, GraphError> {
        let mut w = DMatrix::zeros(n, n);
        for i in 1..n {
            w[(i - 1, i)] = 1.0;
            w[(i, i - 1)] = 1.0;
        }
        Self::new(w, potential)
    }

    pub fn len(&self) -> usize {
        self.potential.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potential.is_empty()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn with_potential(&self, potential: Vec<f64>) -> Result<Self, GraphError> {
        Self::new(self.weights.clone(), potential)
    }
}
