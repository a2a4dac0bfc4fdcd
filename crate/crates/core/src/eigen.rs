//! Dense symmetric eigensolver: Householder reduction to tridiagonal form
//! followed by the implicit-shift QL iteration (the EISPACK `tred2`/`tql2`
//! pair), plus the [`SpectralData`] built on top of it.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::discretization::{inf_norm, DiscreteOperator, Mesh, MeshError, OperatorKind};
use crate::graph::PointOnGraph;

/// Largest dimension accepted by [`eigendecompose`] unless overridden.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// QL sweeps allowed per eigenvalue before giving up.
const MAX_SWEEPS: usize = 60;

/// Relative size of `λ₁` below which the `H₀` ground state is snapped to 0.
const PIN_EIGENVALUE_TOL: f64 = 1e-10;
/// Allowed distance between the computed ground state and `W^{1/2}·1`.
const PIN_VECTOR_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("matrix is {rows}x{cols}; a square matrix is required")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },

    #[error("matrix dimension {dim} exceeds the cap {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("QL iteration failed to converge for eigenvalue {index} of {dim} after {sweeps} sweeps (‖A‖∞ = {norm:e}, off-diagonal {offdiag:e})")]
    NoConvergence { index: usize, dim: usize, sweeps: usize, norm: f64, offdiag: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("ground state of H0 is not the constant function (λ₁ = {lambda:e}, distance {distance:e})")]
    GroundStateNotConstant { lambda: f64, distance: f64 },

    #[error("eigen index {index} out of range for {dim} eigenpairs")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("spectral data has no mesh to evaluate points on")]
    NoMesh,

    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Eigenvalues in ascending order and, optionally, the matching
/// orthonormal eigenvectors as matrix columns.
pub fn symmetric_eigen(a: &DMatrix<f64>, want_vectors: bool) -> Result<(Vec<f64>, Option<DMatrix<f64>>), EigenError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(EigenError::NotSquare { rows: n, cols: a.ncols() });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(EigenError::NonFinite);
    }
    for j in 0..n {
        for i in (j + 1)..n {
            if a[(i, j)] != a[(j, i)] {
                return Err(EigenError::NotSymmetric { i, j });
            }
        }
    }
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(|| DMatrix::zeros(0, 0))));
    }

    // Row-major working copy.
    let mut work: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| a[(i, j)]).collect();
    let mut diag = vec![0.0; n];
    let mut sub = vec![0.0; n];

    let tridiagonal = (0..n).all(|i| (0..n).all(|j| i.abs_diff(j) <= 1 || work[i * n + j] == 0.0));
    let mut z = if tridiagonal {
        for i in 0..n {
            diag[i] = work[i * n + i];
            if i > 0 {
                sub[i] = work[i * n + i - 1];
            }
        }
        want_vectors.then(|| identity(n))
    } else {
        householder_tridiagonalize(&mut work, n, &mut diag, &mut sub, want_vectors);
        // z holds Qᵀ row-major, so the rotations in QL touch contiguous rows.
        want_vectors.then(|| transpose(&work, n))
    };

    tridiagonal_ql(&mut diag, &mut sub, z.as_deref_mut(), n).map_err(|(index, offdiag)| {
        EigenError::NoConvergence { index, dim: n, sweeps: MAX_SWEEPS, norm: inf_norm(a), offdiag }
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let vectors = z.map(|zt| {
        let mut cols = Vec::with_capacity(n * n);
        for &k in &order {
            let row = &zt[k * n..(k + 1) * n];
            // deterministic sign: non-negative component sum
            let flip = if row.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            cols.extend(row.iter().map(|x| flip * x));
        }
        DMatrix::from_vec(n, n, cols)
    });
    Ok((values, vectors))
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn transpose(m: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = m[i * n + j];
        }
    }
    t
}

/// Reduces the row-major symmetric `a` to tridiagonal form, working from
/// the last row up. On return `diag`/`sub` hold the tridiagonal matrix
/// (`sub[i]` couples rows `i-1` and `i`) and, if requested, `a` holds the
/// orthogonal `Q` with `Qᵀ A Q = T`.
fn householder_tridiagonalize(a: &mut [f64], n: usize, diag: &mut [f64], sub: &mut [f64], accumulate: bool) {
    let mut p = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i;
        let mut h = 0.0;
        if l > 1 {
            let scale: f64 = a[i * n..i * n + l].iter().map(|x| x.abs()).sum();
            if scale == 0.0 {
                sub[i] = a[i * n + l - 1];
            } else {
                for k in 0..l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l - 1];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                sub[i] = scale * g;
                h -= f * g;
                a[i * n + l - 1] = f - g;

                // p = A u / h on the leading l×l block; u is row i.
                p[..l].fill(0.0);
                for j in 0..l {
                    let uj = a[i * n + j];
                    let row = &a[j * n..j * n + l];
                    let mut acc = 0.0;
                    for k in 0..l {
                        acc += row[k] * a[i * n + k];
                    }
                    p[j] = acc / h;
                    if accumulate {
                        a[j * n + i] = uj / h;
                    }
                }
                let kappa: f64 = (0..l).map(|j| a[i * n + j] * p[j]).sum::<f64>() / (h + h);
                for j in 0..l {
                    p[j] -= kappa * a[i * n + j];
                }
                // A -= u qᵀ + q uᵀ
                for j in 0..l {
                    let (uj, qj) = (a[i * n + j], p[j]);
                    for k in 0..l {
                        let uk = a[i * n + k];
                        a[j * n + k] -= uj * p[k] + qj * uk;
                    }
                }
            }
        } else {
            sub[i] = a[i * n + l - 1];
        }
        diag[i] = h;
    }

    if !accumulate {
        for i in 0..n {
            diag[i] = a[i * n + i];
        }
        return;
    }

    diag[0] = 0.0;
    sub[0] = 0.0;
    let mut g = vec![0.0; n];
    for i in 0..n {
        let l = i;
        if diag[i] != 0.0 {
            // g = u_i ⋅ Q_block (row combination), then Q_block -= (u/h) gᵀ
            g[..l].fill(0.0);
            for k in 0..l {
                let uik = a[i * n + k];
                if uik != 0.0 {
                    for j in 0..l {
                        g[j] += uik * a[k * n + j];
                    }
                }
            }
            for k in 0..l {
                let vk = a[k * n + i];
                if vk != 0.0 {
                    for j in 0..l {
                        a[k * n + j] -= g[j] * vk;
                    }
                }
            }
        }
        diag[i] = a[i * n + i];
        a[i * n + i] = 1.0;
        for j in 0..l {
            a[j * n + i] = 0.0;
            a[i * n + j] = 0.0;
        }
    }
}

/// Implicit-shift QL on the symmetric tridiagonal (`diag`, `sub`), where
/// `sub[i]` couples `i-1` and `i`. Rotations are applied to the rows of
/// `zt` (the transposed eigenvector matrix) when given. On failure returns
/// the index being iterated and its remaining off-diagonal.
fn tridiagonal_ql(diag: &mut [f64], sub: &mut [f64], mut zt: Option<&mut [f64]>, n: usize) -> Result<(), (usize, f64)> {
    let e = sub;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let d = diag;

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if sweeps == MAX_SWEEPS {
                return Err((l, e[l]));
            }
            sweeps += 1;

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(zt) = zt.as_deref_mut() {
                    let (head, tail) = zt.split_at_mut((i + 1) * n);
                    let row_i = &mut head[i * n..];
                    let row_next = &mut tail[..n];
                    for k in 0..n {
                        let f = row_next[k];
                        row_next[k] = s * row_i[k] + c * f;
                        row_i[k] = c * row_i[k] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Full spectral decomposition of a discrete operator.
///
/// `values` ascend with multiplicity. Column `k` of `vectors` is the
/// orthonormal eigenvector in weighted coordinates; nodal eigenfunction
/// values are `vectors[(i, k)] / sqrt(weights[i])`.
#[derive(Debug, Clone)]
pub struct SpectralData {
    kind: OperatorKind,
    values: Vec<f64>,
    vectors: DMatrix<f64>,
    weights: Vec<f64>,
    mesh: Option<Arc<Mesh>>,
    weyl_dim: u32,
    operator_norm: f64,
}

impl SpectralData {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mesh(&self) -> Option<&Arc<Mesh>> {
        self.mesh.as_ref()
    }

    pub fn weyl_dim(&self) -> u32 {
        self.weyl_dim
    }

    pub fn operator_norm(&self) -> f64 {
        self.operator_norm
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sum of the quadrature weights: |X| for metric graphs, `n` for
    /// combinatorial graphs.
    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Nodal values `φ_k(x_i)` of eigenfunction `k` (0-based; `k = 0` is
    /// the ground state).
    pub fn nodal_eigenfunction(&self, k: usize) -> Result<Vec<f64>, EigenError> {
        self.check_index(k)?;
        Ok(self
            .vectors
            .column(k)
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v / w.sqrt())
            .collect())
    }

    fn check_index(&self, k: usize) -> Result<(), EigenError> {
        if k >= self.values.len() {
            return Err(EigenError::IndexOutOfRange { index: k, dim: self.values.len() });
        }
        Ok(())
    }

    pub(crate) fn require_mesh(&self) -> Result<&Arc<Mesh>, EigenError> {
        self.mesh.as_ref().ok_or(EigenError::NoMesh)
    }
}

/// Decomposes `op` with the default dimension cap.
pub fn eigendecompose(op: &DiscreteOperator) -> Result<SpectralData, EigenError> {
    eigendecompose_capped(op, DEFAULT_DIM_CAP)
}

pub fn eigendecompose_capped(op: &DiscreteOperator, cap: usize) -> Result<SpectralData, EigenError> {
    if op.dim() > cap {
        return Err(EigenError::TooLarge { dim: op.dim(), cap });
    }
    let (mut values, vectors) = symmetric_eigen(op.matrix(), true)?;
    let mut vectors = vectors.expect("vectors requested");
    let norm = op.norm();
    if pins_ground_state(op) {
        pin_ground_state(&mut values, Some(&mut vectors), op.weights(), norm)?;
    }
    Ok(SpectralData {
        kind: op.kind(),
        values,
        vectors,
        weights: op.weights().to_vec(),
        mesh: op.mesh().cloned(),
        weyl_dim: op.weyl_dim(),
        operator_norm: norm,
    })
}

/// All eigenvalues of `op` in ascending order, without eigenvectors.
/// The `H₀` ground state is pinned to zero as in [`eigendecompose`].
pub fn eigenvalues(op: &DiscreteOperator) -> Result<Vec<f64>, EigenError> {
    if op.dim() > DEFAULT_DIM_CAP {
        return Err(EigenError::TooLarge { dim: op.dim(), cap: DEFAULT_DIM_CAP });
    }
    let (mut values, _) = symmetric_eigen(op.matrix(), false)?;
    if pins_ground_state(op) {
        let lambda = values[0];
        if lambda.abs() < PIN_EIGENVALUE_TOL * op.norm() {
            values[0] = 0.0;
        } else {
            return Err(EigenError::GroundStateNotConstant { lambda, distance: f64::NAN });
        }
    }
    Ok(values)
}

fn pins_ground_state(op: &DiscreteOperator) -> bool {
    match op.kind() {
        OperatorKind::H0 => true,
        OperatorKind::H | OperatorKind::Combinatorial => op.potential().iter().all(|&v| v == 0.0),
        OperatorKind::DirichletInterval => false,
    }
}

fn pin_ground_state(
    values: &mut [f64],
    vectors: Option<&mut DMatrix<f64>>,
    weights: &[f64],
    norm: f64,
) -> Result<(), EigenError> {
    let lambda = values[0];
    let mut constant = DVector::from_iterator(weights.len(), weights.iter().map(|w| w.sqrt()));
    constant /= constant.norm();
    let distance = match &vectors {
        Some(v) => {
            let col = v.column(0);
            (col - &constant).norm().min((col + &constant).norm())
        }
        None => 0.0,
    };
    if lambda.abs() >= PIN_EIGENVALUE_TOL * norm.max(f64::MIN_POSITIVE) || distance >= PIN_VECTOR_TOL {
        return Err(EigenError::GroundStateNotConstant { lambda, distance });
    }
    values[0] = 0.0;
    if let Some(v) = vectors {
        v.set_column(0, &constant);
    }
    Ok(())
}

/// `φ_k(p)`, linearly interpolated between mesh nodes, normalized so
/// that `Σ w_i φ_k(x_i)² = 1`. `k` is 0-based.
pub fn eigenfunction_at(sd: &SpectralData, k: usize, p: &PointOnGraph) -> Result<f64, EigenError> {
    sd.check_index(k)?;
    let mesh = sd.require_mesh()?;
    let st = mesh.locate(p)?;
    Ok(st
        .nodes
        .iter()
        .zip(st.coeffs)
        .map(|(&i, c)| c * sd.vectors[(i, k)] / sd.weights[i].sqrt())
        .sum())
}
