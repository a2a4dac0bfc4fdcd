use std::fmt;

use crate::discretization::assemble_combinatorial;
use crate::eigen::eigenvalues;
use crate::graph::CombinatorialGraph;

use super::{AnalysisError, SpectrumPair};

/// Smallest spectrum length accepted by [`ambarzumyan_verdict`].
pub const MIN_VERDICT_EIGENVALUES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictStatus {
    Pass,
    Fail,
    /// A quantity sits inside its resolution threshold.
    Indeterminate,
}

impl fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Indeterminate => "INDETERMINATE",
        })
    }
}

/// Outcome of a check together with the numbers behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub check: String,
    pub status: VerdictStatus,
    pub evidence: Vec<(String, f64)>,
    pub rationale: String,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.status == VerdictStatus::Pass
    }

    /// Looks up a named number in the evidence.
    pub fn value(&self, name: &str) -> Option<f64> {
        self.evidence.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {}", self.check, self.status)?;
        for (name, value) in &self.evidence {
            writeln!(f, "  {name} = {value:e}")?;
        }
        write!(f, "  {}", self.rationale)
    }
}

/// How the finite-data stand-in for `limsup (μ_n - λ_n) ≤ 0` is decided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPolicy {
    /// Fraction of the highest indices inspected.
    pub window: f64,
    /// Largest admissible `μ_n - λ_n` in the window.
    pub eps: f64,
}

impl Default for TailPolicy {
    fn default() -> Self {
        Self { window: 0.3, eps: 1e-6 }
    }
}

impl TailPolicy {
    /// `eps = 3·c·k⁴·h²`: three times the modelled discretization error
    /// `c·k⁴·h²` of eigenvalue `k` on a mesh of spacing `h`.
    pub fn from_discretization_error(c: f64, h: f64, k: usize) -> Self {
        let k = k as f64;
        Self { window: 0.3, eps: 3.0 * c * k.powi(4) * h * h }
    }
}

fn resolution(sp: &SpectrumPair) -> f64 {
    let top = sp.lambda().last().copied().unwrap_or(0.0).abs();
    1e-10 * top.max(1.0)
}

/// Checks `μ₁ ≥ 0` and the tail criterion on the last `policy.window`
/// of the spectrum. A pass means the spectra are consistent with `V = 0`;
/// finitely many eigenvalues never prove it.
pub fn ambarzumyan_verdict(sp: &SpectrumPair, policy: TailPolicy) -> Result<Verdict, AnalysisError> {
    let n = sp.len();
    if n < MIN_VERDICT_EIGENVALUES {
        return Err(AnalysisError::TooFewEigenvalues { got: n, need: MIN_VERDICT_EIGENVALUES });
    }
    let tol = resolution(sp);
    let mu1 = sp.mu()[0];
    let start = ((n as f64) * (1.0 - policy.window.clamp(0.0, 1.0))).floor() as usize;
    let start = start.min(n - 1);
    let tail_max = sp.lambda()[start..]
        .iter()
        .zip(&sp.mu()[start..])
        .map(|(l, m)| m - l)
        .fold(f64::NEG_INFINITY, f64::max);
    let ground_ok = mu1 >= -tol;
    let tail_ok = tail_max <= policy.eps;
    let status = if ground_ok && tail_ok { VerdictStatus::Pass } else { VerdictStatus::Fail };
    let rationale = match (ground_ok, tail_ok) {
        (true, true) => "consistent with V = 0: μ₁ ≥ 0 and no positive drift of μ_n - λ_n in the tail".to_string(),
        (false, true) => format!("hypotheses violated: μ₁ = {mu1:e} < 0"),
        (true, false) => format!("hypotheses violated: max tail μ_n - λ_n = {tail_max:e} exceeds {:e}", policy.eps),
        (false, false) => format!("hypotheses violated: μ₁ = {mu1:e} < 0 and tail excess {tail_max:e}"),
    };
    Ok(Verdict {
        check: "ambarzumyan".into(),
        status,
        evidence: vec![
            ("mu1".into(), mu1),
            ("tolerance".into(), tol),
            ("tail_max".into(), tail_max),
            ("tail_eps".into(), policy.eps),
            ("tail_start_index".into(), start as f64),
            ("eigenvalues".into(), n as f64),
        ],
        rationale,
    })
}

/// Self-test of the pipeline against the statement "`μ₁ ≥ 0` and
/// `∫V ≤ 0` force `V = 0`". A `Fail` flags a contradiction, which can only
/// come from a numerical defect.
pub fn premain_verdict(sp: &SpectrumPair, int_v: f64) -> Verdict {
    let tol = resolution(sp);
    let mu1 = sp.mu()[0];
    let max_shift = sp.lambda().iter().zip(sp.mu()).map(|(l, m)| (m - l).abs()).fold(0.0, f64::max);
    let sup = sp.sup_norm().unwrap_or(max_shift);
    let v_nonzero = match sp.sup_norm() {
        Some(s) => s > 0.0,
        None => max_shift > tol,
    };
    let tol_int = 1e-12 * (sup * sp.volume()).max(1.0);

    let (status, rationale) = if mu1 < -tol {
        (VerdictStatus::Pass, format!("not applicable: μ₁ = {mu1:e} < 0"))
    } else if int_v > tol_int {
        (VerdictStatus::Pass, format!("not applicable: ∫V = {int_v:e} > 0"))
    } else if !v_nonzero {
        (VerdictStatus::Pass, "consistent: V = 0".to_string())
    } else if mu1.abs() <= tol {
        (
            VerdictStatus::Indeterminate,
            format!("μ₁ = {mu1:e} is within the resolution {tol:e} of 0 while V ≠ 0"),
        )
    } else {
        (
            VerdictStatus::Fail,
            format!("contradiction: μ₁ = {mu1:e} > 0 and ∫V = {int_v:e} ≤ 0 with V ≠ 0"),
        )
    };
    Verdict {
        check: "premain".into(),
        status,
        evidence: vec![
            ("mu1".into(), mu1),
            ("integral_v".into(), int_v),
            ("tolerance".into(), tol),
            ("integral_tolerance".into(), tol_int),
        ],
        rationale,
    }
}

/// Checks `Σμ - Σλ = Σ_x V(x)` for a finite graph by eigensolving both
/// `L` and `L + diag V`.
pub fn combinatorial_trace_identity(g: &CombinatorialGraph) -> Result<Verdict, AnalysisError> {
    let h = assemble_combinatorial(g);
    let h0 = assemble_combinatorial(&g.with_potential(vec![0.0; g.len()])?);
    let lambda = eigenvalues(&h0)?;
    let mu = eigenvalues(&h)?;
    let sum_l: f64 = lambda.iter().sum();
    let sum_m: f64 = mu.iter().sum();
    let sum_v: f64 = g.potential().iter().sum();
    let sup = g.potential().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let defect = sum_m - sum_l - sum_v;
    let bound = 1e-9 * (g.len() as f64 * sup + sum_l).max(f64::MIN_POSITIVE);
    let ok = defect.abs() <= bound;
    Ok(Verdict {
        check: "combinatorial_trace_identity".into(),
        status: if ok { VerdictStatus::Pass } else { VerdictStatus::Fail },
        evidence: vec![
            ("sum_mu".into(), sum_m),
            ("sum_lambda".into(), sum_l),
            ("sum_v".into(), sum_v),
            ("defect".into(), defect),
            ("bound".into(), bound),
        ],
        rationale: if ok {
            "Σμ - Σλ equals ΣV".into()
        } else {
            format!("|Σμ - Σλ - ΣV| = {:e} exceeds {bound:e}", defect.abs())
        },
    })
}
