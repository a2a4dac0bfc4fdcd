//! CSV emission: header row, comma separators, LF line endings and
//! shortest round-trip float formatting.

use std::io::Write;

use super::{AnalysisError, GroundStateCurve, SigmaCurve, TraceExpansionReport};

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Columns `t,sigma`.
pub fn write_sigma_csv<W: Write>(w: W, curve: &SigmaCurve) -> Result<(), AnalysisError> {
    let mut out = writer(w);
    out.write_record(["t", "sigma"])?;
    for (t, s) in curve.t.iter().zip(&curve.sigma) {
        out.write_record([num(*t), num(*s)])?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `t,trace0,traceH,first_order_term,rho`.
pub fn write_residual_csv<W: Write>(w: W, report: &TraceExpansionReport) -> Result<(), AnalysisError> {
    let mut out = writer(w);
    out.write_record(["t", "trace0", "traceH", "first_order_term", "rho"])?;
    for i in 0..report.t.len() {
        out.write_record([
            num(report.t[i]),
            num(report.trace0[i]),
            num(report.trace_h[i]),
            num(report.first_order[i]),
            num(report.rho[i]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `s,F`.
pub fn write_ground_state_csv<W: Write>(w: W, curve: &GroundStateCurve) -> Result<(), AnalysisError> {
    let mut out = writer(w);
    out.write_record(["s", "F"])?;
    for (s, f) in curve.s.iter().zip(&curve.f) {
        out.write_record([num(*s), num(*f)])?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `n,lambda_n,mu_n` for the first `count` eigenvalues, `n`
/// starting at 1.
pub fn write_spectrum_csv<W: Write>(w: W, lambda: &[f64], mu: &[f64], count: usize) -> Result<(), AnalysisError> {
    let mut out = writer(w);
    out.write_record(["n", "lambda_n", "mu_n"])?;
    for (n, (l, m)) in lambda.iter().zip(mu).take(count).enumerate() {
        out.write_record([(n + 1).to_string(), num(*l), num(*m)])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_csv_layout() {
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &[0.0, 9.5], &[1.0, 10.5], 5).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,lambda_n,mu_n\n1,0.0,1.0\n2,9.5,10.5\n");
    }
}
