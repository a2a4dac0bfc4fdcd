use rayon::prelude::*;

use crate::discretization::{assemble_h0, DiscreteOperator};
use crate::eigen::eigenvalues;
use crate::graph::{MetricGraph, PotentialSpec};

use super::AnalysisError;

/// `F(s) = μ₁(H₀ + sV)` on a fixed mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateCurve {
    /// Strictly increasing coupling grid containing 0.
    pub s: Vec<f64>,
    pub f: Vec<f64>,
    /// Forward difference `(F(s₊) - F(0)) / s₊` at the first positive grid
    /// point (backward when 0 is the last point).
    pub derivative_estimate: f64,
    /// `|X|^{-1} ∫V`.
    pub expected_derivative: f64,
    /// Admissible `|derivative_estimate - expected_derivative|`: the
    /// second-order perturbation bound `Δs‖V‖∞² / (λ₂ - 2Δs‖V‖∞)` plus
    /// the gap between nodal and exact integrals of `V`.
    pub derivative_tolerance: f64,
    /// Largest second difference over interior grid points (scaled to
    /// `F_{i-1} - 2F_i + F_{i+1}` on uniform grids).
    pub max_second_difference: f64,
}

impl GroundStateCurve {
    pub fn is_concave(&self, tol: f64) -> bool {
        self.max_second_difference <= tol
    }

    pub fn derivative_matches(&self) -> bool {
        (self.derivative_estimate - self.expected_derivative).abs() <= self.derivative_tolerance
    }
}

/// Sweeps `H₀ + sV` on the mesh of spacing `target_h` over `s_grid`.
pub fn ground_state_curve(
    g: &MetricGraph,
    v: &PotentialSpec,
    target_h: f64,
    s_grid: &[f64],
) -> Result<GroundStateCurve, AnalysisError> {
    let op0 = assemble_h0(g, target_h)?;
    let values = op0.mesh().expect("metric operator has a mesh").sample_potential(v)?;
    ground_state_curve_on(&op0, &values, v.sup_norm(), v.integral(), s_grid)
}

/// Sweep on an already assembled `H₀` with nodal potential `values`.
pub fn ground_state_curve_on(
    op0: &DiscreteOperator,
    values: &[f64],
    sup_norm: f64,
    integral: f64,
    s_grid: &[f64],
) -> Result<GroundStateCurve, AnalysisError> {
    if s_grid.len() < 2 {
        return Err(AnalysisError::BadGrid("need at least two couplings".into()));
    }
    if s_grid.iter().any(|s| !s.is_finite()) || s_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::BadGrid("couplings must be finite and strictly increasing".into()));
    }
    let zero = s_grid
        .iter()
        .position(|&s| s == 0.0)
        .ok_or_else(|| AnalysisError::BadGrid("coupling grid must contain 0".into()))?;

    let spectra = s_grid
        .par_iter()
        .map(|&s| eigenvalues(&op0.with_added_potential(values, s)))
        .collect::<Result<Vec<_>, _>>()?;
    let f: Vec<f64> = spectra.iter().map(|sp| sp[0]).collect();
    let lambda2 = spectra[zero].get(1).copied().unwrap_or(f64::INFINITY);

    let volume: f64 = op0.weights().iter().sum();
    let expected_derivative = integral / volume;
    let nodal_mean = op0.weights().iter().zip(values).map(|(w, v)| w * v).sum::<f64>() / volume;
    let (derivative_estimate, step) = if zero + 1 < s_grid.len() {
        let ds = s_grid[zero + 1];
        ((f[zero + 1] - f[zero]) / ds, ds)
    } else {
        let ds = -s_grid[zero - 1];
        ((f[zero] - f[zero - 1]) / ds, ds)
    };
    let denom = lambda2 - 2.0 * step * sup_norm;
    let perturbation = if denom > 0.0 { step * sup_norm * sup_norm / denom } else { f64::INFINITY };
    let derivative_tolerance = perturbation + (nodal_mean - expected_derivative).abs();

    let max_second_difference = (1..s_grid.len() - 1)
        .map(|i| {
            let (a, b, c) = (s_grid[i - 1], s_grid[i], s_grid[i + 1]);
            (f[i - 1] * (c - b) - f[i] * (c - a) + f[i + 1] * (b - a)) / ((c - a) / 2.0)
        })
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(GroundStateCurve {
        s: s_grid.to_vec(),
        f,
        derivative_estimate,
        expected_derivative,
        derivative_tolerance,
        max_second_difference,
    })
}
