//! Small-sample limit extraction: the `a + b·e^{-c/t}` three-point fit,
//! pairwise power-law extrapolation, Richardson steps and log-log slopes.

/// Fitted `f(t) = a + b·e^{-c/t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpCorrectionFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Fits `a + b·e^{-c/t}` through three samples with `t1 > t2 > t3 > 0`.
///
/// `None` when the samples are not consistent with a positive `c` (the
/// ratio of successive differences falls outside the model's range) or
/// when the differences are at rounding level.
pub fn fit_exp_correction(t: [f64; 3], f: [f64; 3]) -> Option<ExpCorrectionFit> {
    let [t1, t2, t3] = t;
    if !(t1 > t2 && t2 > t3 && t3 > 0.0) {
        return None;
    }
    let d12 = f[0] - f[1];
    let d23 = f[1] - f[2];
    let scale = f.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if d12.abs() <= 64.0 * f64::EPSILON * scale || d12 == 0.0 {
        return None;
    }
    let r = d23 / d12;
    // r(c) falls from r0 (c -> 0) to 0 (c -> inf)
    let r0 = (1.0 / t3 - 1.0 / t2) / (1.0 / t2 - 1.0 / t1);
    if !(r > 0.0 && r < r0) {
        return None;
    }
    let ratio = |c: f64| {
        let (e1, e2, e3) = ((-c / t1).exp(), (-c / t2).exp(), (-c / t3).exp());
        (e2 - e3) / (e1 - e2)
    };
    // bracket in log c; keep c/t3 below the underflow range
    let (mut lo, mut hi) = ((1e-12 * t3).ln(), (700.0 * t3).ln());
    if !(ratio(lo.exp()) >= r && ratio(hi.exp()) <= r) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid.exp()) > r {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let c = (0.5 * (lo + hi)).exp();
    let (e1, e2) = ((-c / t1).exp(), (-c / t2).exp());
    let b = d12 / (e1 - e2);
    let a = f[0] - b * e1;
    a.is_finite().then_some(ExpCorrectionFit { a, b, c })
}

/// Limit `L` of `f(t) = L + b·t^p` through each consecutive pair of
/// samples; entry `i` uses samples `i` and `i + 1`.
pub fn pairwise_power_limits(t: &[f64], f: &[f64], p: f64) -> Vec<f64> {
    t.windows(2)
        .zip(f.windows(2))
        .map(|(tw, fw)| {
            let (a, b) = (tw[0].powf(p), tw[1].powf(p));
            (fw[1] * a - fw[0] * b) / (a - b)
        })
        .collect()
}

/// One Richardson step: combines values at spacings `h` and `h/ratio`
/// under an error model of order `order`.
pub fn richardson(coarse: f64, fine: f64, ratio: f64, order: f64) -> f64 {
    let w = ratio.powf(order);
    (w * fine - coarse) / (w - 1.0)
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero for two points.
    pub stderr: f64,
}

/// Fits `ln y = intercept + slope·ln x`. Requires at least two points
/// with positive coordinates and distinct `x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<SlopeFit> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return None;
    }
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if x.len() > 2 {
        let rss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(SlopeFit { slope, intercept, stderr })
}

/// `n` points from `max` down to `min`, equally spaced in `ln t`.
pub fn geometric_grid_desc(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![max],
        _ => {
            let ratio = (min / max).ln() / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { min } else { max * (ratio * i as f64).exp() })
                .collect()
        }
    }
}
