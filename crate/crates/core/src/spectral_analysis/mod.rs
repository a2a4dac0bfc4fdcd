//! Heat traces, the σ(t) diagnostic, the trace-expansion residual ρ(t),
//! the ground-state coupling curve and the verdict checks built on them.

mod ground_state;
mod output;
mod trace;
mod verdict;

use std::f64::consts::PI;

use thiserror::Error;

use crate::discretization::MeshError;
use crate::eigen::{EigenError, SpectralData};
use crate::graph::{GraphError, PotentialSpec};
use crate::heat_kernel::HeatKernelError;

pub use ground_state::{ground_state_curve, ground_state_curve_on, GroundStateCurve};
pub use output::{write_ground_state_csv, write_residual_csv, write_sigma_csv, write_spectrum_csv};
pub use trace::{
    heat_trace, heat_trace_report, sigma_of_t, trace_expansion_residual, HeatTrace, SigmaCurve,
    TraceExpansionReport,
};
pub use verdict::{
    ambarzumyan_verdict, combinatorial_trace_identity, premain_verdict, TailPolicy, Verdict, VerdictStatus,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("time must be positive and finite, got {0}")]
    NonPositiveTime(f64),

    #[error("invalid grid: {0}")]
    BadGrid(String),

    #[error("spectra have different lengths ({lambda} vs {mu})")]
    LengthMismatch { lambda: usize, mu: usize },

    #[error("{name} spectrum is not in ascending order at index {index}")]
    NotAscending { name: &'static str, index: usize },

    #[error("unperturbed ground state λ₁ = {0:e} is not exactly 0")]
    GroundStateNotZero(f64),

    #[error("need at least {need} eigenvalues, got {got}")]
    TooFewEigenvalues { got: usize, need: usize },

    #[error("t = {t} lies outside the mesh-valid range [{floor}, 1]")]
    MeshFloor { t: f64, floor: f64 },

    #[error("truncation tail {tail:e} exceeds 10% of σ({t}) = {sigma:e}")]
    TruncationTail { t: f64, tail: f64, sigma: f64 },

    #[error("eigenvalue trace {spectral} and diagonal quadrature {quadrature} disagree at t = {t}")]
    MercerMismatch { t: f64, spectral: f64, quadrature: f64 },

    #[error("operators live on different meshes ({0} vs {1} nodes)")]
    MeshMismatch(usize, usize),

    #[error("spectral data has no mesh")]
    NoMesh,

    #[error(transparent)]
    Graph(#[from] GraphError),

    #[error(transparent)]
    Eigen(#[from] EigenError),

    #[error(transparent)]
    Mesh(#[from] MeshError),

    #[error(transparent)]
    Kernel(#[from] HeatKernelError),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Weyl constant `(4π)^{-d/2}` of a `d`-dimensional flat problem.
pub fn weyl_constant(d: u32) -> f64 {
    (4.0 * PI).powf(-f64::from(d) / 2.0)
}

/// Spectra `λ_n` of `H₀` and `μ_n` of `H` side by side, with the geometric
/// data the σ(t) diagnostic needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPair {
    lambda: Vec<f64>,
    mu: Vec<f64>,
    weyl_dim: u32,
    volume: f64,
    weyl_constant: f64,
    sup_norm: Option<f64>,
    integral: Option<f64>,
    truncated: bool,
}

impl SpectrumPair {
    /// Validates equal lengths, ascending order and `λ₁ = 0`.
    pub fn new(lambda: Vec<f64>, mu: Vec<f64>, volume: f64, weyl_dim: u32) -> Result<Self, AnalysisError> {
        if lambda.len() != mu.len() {
            return Err(AnalysisError::LengthMismatch { lambda: lambda.len(), mu: mu.len() });
        }
        if lambda.is_empty() {
            return Err(AnalysisError::TooFewEigenvalues { got: 0, need: 1 });
        }
        for (name, list) in [("λ", &lambda), ("μ", &mu)] {
            if let Some(index) = list.windows(2).position(|w| !(w[0] <= w[1])) {
                return Err(AnalysisError::NotAscending { name, index: index + 1 });
            }
        }
        if lambda[0] != 0.0 {
            return Err(AnalysisError::GroundStateNotZero(lambda[0]));
        }
        Ok(Self {
            lambda,
            mu,
            weyl_dim,
            volume,
            weyl_constant: weyl_constant(weyl_dim),
            sup_norm: None,
            integral: None,
            truncated: false,
        })
    }

    /// Pairs two full mesh spectra; `|X|` is the sum of the node weights.
    pub fn from_spectral(sd0: &SpectralData, sd_h: &SpectralData) -> Result<Self, AnalysisError> {
        if sd0.len() != sd_h.len() {
            return Err(AnalysisError::MeshMismatch(sd0.len(), sd_h.len()));
        }
        Self::new(sd0.values().to_vec(), sd_h.values().to_vec(), sd0.volume(), sd0.weyl_dim())
    }

    /// Records `‖V‖∞` and `∫V` from the potential specification.
    pub fn with_potential(mut self, v: &PotentialSpec) -> Self {
        self.sup_norm = Some(v.sup_norm());
        self.integral = Some(v.integral());
        self
    }

    pub fn with_potential_bounds(mut self, sup_norm: f64, integral: f64) -> Self {
        self.sup_norm = Some(sup_norm);
        self.integral = Some(integral);
        self
    }

    /// Marks the lists as the first `N` eigenvalues of an infinite
    /// spectrum, so σ(t) carries a tail bound.
    pub fn truncated(mut self) -> Self {
        self.truncated = true;
        self
    }

    pub fn with_weyl_constant(mut self, a: f64) -> Self {
        self.weyl_constant = a;
        self
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn weyl_dim(&self) -> u32 {
        self.weyl_dim
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn weyl_constant(&self) -> f64 {
        self.weyl_constant
    }

    pub fn sup_norm(&self) -> Option<f64> {
        self.sup_norm
    }

    pub fn integral(&self) -> Option<f64> {
        self.integral
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }
}

pub(crate) fn check_time(t: f64) -> Result<(), AnalysisError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(AnalysisError::NonPositiveTime(t))
    }
}
