//! Spectra, heat kernels and Ambarzumyan-type inverse spectral checks on
//! compact quantum graphs and finite combinatorial graphs.
//!
//! The pipeline is: build a [`graph::MetricGraph`] (or parse one), assemble
//! `H₀` or `H = H₀ + V` with [`discretization`], decompose it with
//! [`eigen::eigendecompose`], then evaluate kernels ([`heat_kernel`]) and
//! traces, σ(t), residuals and verdicts ([`spectral_analysis`]).

pub mod discretization;
pub mod eigen;
pub mod extrapolate;
pub mod graph;
pub mod heat_kernel;
pub mod spectral_analysis;

use thiserror::Error;

pub use discretization::{
    assemble_combinatorial, assemble_dirichlet_interval, assemble_h, assemble_h0, DiscreteOperator, Mesh,
    MeshError, OperatorKind,
};
pub use eigen::{eigendecompose, eigenfunction_at, eigenvalues, symmetric_eigen, EigenError, SpectralData};
pub use graph::{
    evaluate_potential, parse_graph, total_volume, CombinatorialGraph, EdgePotential, GraphError, GraphFile,
    MetricGraph, PointOnGraph, PotentialSpec,
};
pub use heat_kernel::{
    closed_form_eval, diagonal_limit, heat_content_dirichlet, k0_eval, k_eval, ClosedFormKernel, HeatKernelError,
};
pub use spectral_analysis::{
    ambarzumyan_verdict, combinatorial_trace_identity, ground_state_curve, heat_trace, premain_verdict, sigma_of_t,
    trace_expansion_residual, AnalysisError, GroundStateCurve, SigmaCurve, SpectrumPair, TailPolicy,
    TraceExpansionReport, Verdict, VerdictStatus,
};

/// Any error raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),

    #[error(transparent)]
    Mesh(#[from] MeshError),

    #[error(transparent)]
    Eigen(#[from] EigenError),

    #[error(transparent)]
    Kernel(#[from] HeatKernelError),

    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl Error {
    /// `true` for failures of the numerics (non-convergence, truncation
    /// tail, consistency checks) as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Self::Eigen(e) | Self::Kernel(HeatKernelError::Eigen(e)) | Self::Analysis(AnalysisError::Eigen(e)) => {
                eigen_is_numerical(e)
            }
            Self::Analysis(AnalysisError::TruncationTail { .. } | AnalysisError::MercerMismatch { .. }) => true,
            _ => false,
        }
    }
}

fn eigen_is_numerical(e: &EigenError) -> bool {
    matches!(e, EigenError::NoConvergence { .. } | EigenError::GroundStateNotConstant { .. } | EigenError::NonFinite)
}
