use crate::eigen::SpectralData;
use crate::extrapolate::{loglog_slope, pairwise_power_limits, SlopeFit};
use crate::graph::PotentialSpec;
use crate::heat_kernel::MESH_FLOOR_FACTOR;

use super::{check_time, AnalysisError, SpectrumPair};

/// Relative agreement required between the eigenvalue trace and the
/// quadrature of the kernel diagonal.
const MERCER_TOL: f64 = 1e-8;

/// Both routes to `tr e^{-Ht}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatTrace {
    /// `Σ e^{-λ_n t}`.
    pub spectral: f64,
    /// `Σ_i w_i K(t, x_i, x_i)`.
    pub quadrature: f64,
}

pub fn heat_trace_report(sd: &SpectralData, t: f64) -> Result<HeatTrace, AnalysisError> {
    check_time(t)?;
    let decay: Vec<f64> = sd.values().iter().map(|l| (-l * t).exp()).collect();
    let spectral = decay.iter().sum();
    let v = sd.vectors();
    let quadrature = (0..sd.len())
        .map(|i| decay.iter().enumerate().map(|(n, e)| e * v[(i, n)] * v[(i, n)]).sum::<f64>())
        .sum();
    Ok(HeatTrace { spectral, quadrature })
}

/// `tr e^{-Ht} = Σ e^{-λ_n t}`, checked against the diagonal quadrature.
pub fn heat_trace(sd: &SpectralData, t: f64) -> Result<f64, AnalysisError> {
    let r = heat_trace_report(sd, t)?;
    if (r.spectral - r.quadrature).abs() > MERCER_TOL * r.spectral.abs().max(1.0) {
        return Err(AnalysisError::MercerMismatch { t, spectral: r.spectral, quadrature: r.quadrature });
    }
    Ok(r.spectral)
}

/// σ(t) samples and the extrapolated `t → 0` limit.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaCurve {
    /// Strictly decreasing times.
    pub t: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Bound on the contribution of eigenvalues beyond the truncation;
    /// zero for complete (mesh) spectra.
    pub tail: Vec<f64>,
    /// Limits of `L + b·t^{1/2}` through consecutive pairs of samples.
    pub extrapolants: Vec<f64>,
    /// Last extrapolant.
    pub limit: f64,
    /// Spread of the last three extrapolants (or of all of them when
    /// fewer are available; infinite with only one).
    pub uncertainty: f64,
}

impl SigmaCurve {
    /// `|limit - target| ≤ uncertainty`.
    pub fn brackets(&self, target: f64) -> bool {
        (self.limit - target).abs() <= self.uncertainty
    }
}

pub(crate) fn check_decreasing(t_grid: &[f64], min_len: usize) -> Result<(), AnalysisError> {
    if t_grid.len() < min_len {
        return Err(AnalysisError::BadGrid(format!("need at least {min_len} times, got {}", t_grid.len())));
    }
    for &t in t_grid {
        check_time(t)?;
    }
    if t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(AnalysisError::BadGrid("times must be strictly decreasing".into()));
    }
    Ok(())
}

/// Bound on `Σ_{n>N} e^{-λ_n t}` assuming the gaps keep growing from the
/// last observed one, as they do for one-dimensional spectra.
fn truncation_sum(lambda: &[f64], t: f64) -> f64 {
    let n = lambda.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let gap = (lambda[n - 1] - lambda[n - 2]).max(0.0);
    let q = (-gap * t).exp();
    if q >= 1.0 {
        return f64::INFINITY;
    }
    (-lambda[n - 1] * t).exp() * q / (1.0 - q)
}

/// `σ(t) = t^{d/2-1} Σ (e^{-λ_n t} - e^{-μ_n t})` on a decreasing grid.
///
/// For truncated spectra each sample carries a tail bound; a sample whose
/// bound exceeds 10% of `|σ|` is rejected with
/// [`AnalysisError::TruncationTail`].
pub fn sigma_of_t(sp: &SpectrumPair, t_grid: &[f64]) -> Result<SigmaCurve, AnalysisError> {
    check_decreasing(t_grid, 2)?;
    let power = f64::from(sp.weyl_dim()) / 2.0 - 1.0;
    let mut sigma = Vec::with_capacity(t_grid.len());
    let mut tail = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        // e^{-λt} - e^{-μt} = -e^{-λt}·expm1(-(μ-λ)t), exact for tiny shifts
        let sum: f64 = sp
            .lambda()
            .iter()
            .zip(sp.mu())
            .map(|(l, m)| -(-l * t).exp() * (-(m - l) * t).exp_m1())
            .sum();
        let s = t.powf(power) * sum;
        let bound = if sp.is_truncated() {
            let shift = match sp.sup_norm() {
                Some(v) => (v * t).exp_m1(),
                None => {
                    let start = sp.len() - (sp.len() / 10).max(1);
                    sp.lambda()[start..]
                        .iter()
                        .zip(&sp.mu()[start..])
                        .map(|(l, m)| (-(m - l) * t).exp_m1().abs())
                        .fold(0.0, f64::max)
                }
            };
            if shift == 0.0 {
                0.0
            } else {
                t.powf(power) * truncation_sum(sp.lambda(), t) * shift
            }
        } else {
            0.0
        };
        if bound > 0.1 * s.abs() && bound > 1e-12 {
            return Err(AnalysisError::TruncationTail { t, tail: bound, sigma: s });
        }
        sigma.push(s);
        tail.push(bound);
    }
    let extrapolants = pairwise_power_limits(t_grid, &sigma, 0.5);
    let limit = *extrapolants.last().expect("at least two samples");
    let last = &extrapolants[extrapolants.len().saturating_sub(3)..];
    let uncertainty = if last.len() < 2 {
        f64::INFINITY
    } else {
        let (lo, hi) = last.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        hi - lo
    };
    Ok(SigmaCurve { t: t_grid.to_vec(), sigma, tail, extrapolants, limit, uncertainty })
}

/// Terms of `tr e^{-Ht} = tr e^{-H₀t} - t∫K₀(t,x,x)V(x)dx + ρ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceExpansionReport {
    pub t: Vec<f64>,
    pub trace0: Vec<f64>,
    pub trace_h: Vec<f64>,
    /// `t ∫ K₀(t,x,x) V(x) dx`.
    pub first_order: Vec<f64>,
    pub rho: Vec<f64>,
    /// Least-squares exponent of `|ρ|` against `t`; `None` when some
    /// `ρ` vanishes.
    pub fit: Option<SlopeFit>,
}

impl TraceExpansionReport {
    /// `(slope - 2·stderr, slope + 2·stderr)`.
    pub fn exponent_band(&self) -> Option<(f64, f64)> {
        self.fit.map(|f| (f.slope - 2.0 * f.stderr, f.slope + 2.0 * f.stderr))
    }
}

/// Computes ρ(t) as the defining difference on a fixed mesh. Every `t`
/// must lie in `[10·h², 1]`.
pub fn trace_expansion_residual(
    sd0: &SpectralData,
    sd_h: &SpectralData,
    v: &PotentialSpec,
    t_grid: &[f64],
) -> Result<TraceExpansionReport, AnalysisError> {
    let mesh = sd0.mesh().ok_or(AnalysisError::NoMesh)?;
    if sd0.len() != sd_h.len() || sd_h.mesh().is_none() {
        return Err(AnalysisError::MeshMismatch(sd0.len(), sd_h.len()));
    }
    if t_grid.is_empty() {
        return Err(AnalysisError::BadGrid("empty time grid".into()));
    }
    let floor = MESH_FLOOR_FACTOR * mesh.max_step().powi(2);
    for &t in t_grid {
        check_time(t)?;
        if t < floor || t > 1.0 {
            return Err(AnalysisError::MeshFloor { t, floor });
        }
    }
    let values = mesh.sample_potential(v)?;
    let vecs = sd0.vectors();
    // ⟨v_n, V v_n⟩ for every unperturbed eigenvector
    let coupling: Vec<f64> = (0..sd0.len())
        .map(|n| vecs.column(n).iter().zip(&values).map(|(x, v)| v * x * x).sum())
        .collect();

    let mut report = TraceExpansionReport {
        t: t_grid.to_vec(),
        trace0: Vec::new(),
        trace_h: Vec::new(),
        first_order: Vec::new(),
        rho: Vec::new(),
        fit: None,
    };
    for &t in t_grid {
        let trace0: f64 = sd0.values().iter().map(|l| (-l * t).exp()).sum();
        let trace_h: f64 = sd_h.values().iter().map(|m| (-m * t).exp()).sum();
        let first: f64 = t * sd0.values().iter().zip(&coupling).map(|(l, c)| (-l * t).exp() * c).sum::<f64>();
        report.trace0.push(trace0);
        report.trace_h.push(trace_h);
        report.first_order.push(first);
        report.rho.push(trace_h - trace0 + first);
    }
    let abs_rho: Vec<f64> = report.rho.iter().map(|r| r.abs()).collect();
    report.fit = loglog_slope(&report.t, &abs_rho);
    Ok(report)
}
