//! Heat kernels: spectral sums over [`SpectralData`], closed forms on the
//! line and on intervals, Dirichlet heat content, and extraction of the
//! small-time diagonal limit `lim t^{1/2} K(t,x,x)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::eigen::{EigenError, SpectralData};
use crate::extrapolate::fit_exp_correction;
use crate::graph::PointOnGraph;

/// Terms `e^{-x}` with `x` beyond this are dropped (`e^{-40} ≈ 4e-18`).
const EXPONENT_CUTOFF: f64 = 40.0;

/// Small-time validity floor of a mesh kernel, as a multiple of `h²`.
pub const MESH_FLOOR_FACTOR: f64 = 10.0;

#[derive(Debug, Error)]
pub enum HeatKernelError {
    #[error("time must be positive and finite, got {0}")]
    NonPositiveTime(f64),

    #[error("point {x} is outside the kernel domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("point (edge #{edge}, s = {s}) is a vertex; the diagonal limit is only taken at interior points")]
    VertexPoint { edge: usize, s: f64 },

    #[error("t = {t} is below the mesh floor {floor} (10·h²)")]
    MeshFloor { t: f64, floor: f64 },

    #[error("invalid time grid: {0}")]
    BadGrid(String),

    #[error(transparent)]
    Eigen(#[from] EigenError),
}

fn check_time(t: f64) -> Result<(), HeatKernelError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(HeatKernelError::NonPositiveTime(t))
    }
}

/// `φ_n(p)` for every `n`, interpolated from the mesh.
fn eigenfunctions_at(sd: &SpectralData, p: &PointOnGraph) -> Result<Vec<f64>, HeatKernelError> {
    let mesh = sd.require_mesh()?;
    let st = mesh.locate(p).map_err(EigenError::from)?;
    let v = sd.vectors();
    let w = sd.weights();
    let mut out = vec![0.0; sd.len()];
    for (&i, c) in st.nodes.iter().zip(st.coeffs) {
        if c == 0.0 {
            continue;
        }
        let scale = c / w[i].sqrt();
        for (n, o) in out.iter_mut().enumerate() {
            *o += scale * v[(i, n)];
        }
    }
    Ok(out)
}

fn spectral_sum(sd: &SpectralData, t: f64, x: &PointOnGraph, y: &PointOnGraph) -> Result<f64, HeatKernelError> {
    check_time(t)?;
    let fx = eigenfunctions_at(sd, x)?;
    let fy = if x == y { fx.clone() } else { eigenfunctions_at(sd, y)? };
    Ok(sd
        .values()
        .iter()
        .zip(fx.iter().zip(&fy))
        .map(|(l, (a, b))| (-l * t).exp() * (a * b))
        .sum())
}

/// `K₀(t,x,y) = Σ e^{-λ_n t} φ_n(x) φ_n(y)` over the full computed spectrum.
pub fn k0_eval(sd: &SpectralData, t: f64, x: &PointOnGraph, y: &PointOnGraph) -> Result<f64, HeatKernelError> {
    spectral_sum(sd, t, x, y)
}

/// Kernel of `e^{-Ht}` from the spectrum `μ_n` of `H = H₀ + V`.
pub fn k_eval(sd_h: &SpectralData, t: f64, x: &PointOnGraph, y: &PointOnGraph) -> Result<f64, HeatKernelError> {
    spectral_sum(sd_h, t, x, y)
}

/// Nodal kernel matrix `K(t, x_i, x_j)`.
pub fn kernel_matrix(sd: &SpectralData, t: f64) -> Result<DMatrix<f64>, HeatKernelError> {
    check_time(t)?;
    let v = sd.vectors();
    let mut scaled = v.clone();
    for (n, l) in sd.values().iter().enumerate() {
        scaled.column_mut(n).scale_mut((-l * t).exp());
    }
    let mut k = scaled * v.transpose();
    let inv: Vec<f64> = sd.weights().iter().map(|w| w.sqrt().recip()).collect();
    for j in 0..k.ncols() {
        for i in 0..k.nrows() {
            k[(i, j)] *= inv[i] * inv[j];
        }
    }
    Ok(k)
}

/// Nodal diagonal `K(t, x_i, x_i)`.
pub fn kernel_diagonal(sd: &SpectralData, t: f64) -> Result<Vec<f64>, HeatKernelError> {
    check_time(t)?;
    let v = sd.vectors();
    let decay: Vec<f64> = sd.values().iter().map(|l| (-l * t).exp()).collect();
    Ok((0..sd.len())
        .map(|i| {
            let s: f64 = decay.iter().enumerate().map(|(n, e)| e * v[(i, n)] * v[(i, n)]).sum();
            s / sd.weights()[i]
        })
        .collect())
}

/// Heat kernels with known closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedFormKernel {
    /// `(4πt)^{-1/2} e^{-(x-y)²/(4t)}` on the real line.
    FreeLine,
    /// Neumann ends at `0` and `length`.
    NeumannInterval { length: f64 },
    /// Dirichlet ends at `±half_width`.
    DirichletInterval { half_width: f64 },
}

/// How a closed-form kernel is summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    /// Method of images; converges fast for small `t`.
    Images,
    /// Eigenfunction series; converges fast for large `t`.
    Series,
    /// Images below [`ClosedFormKernel::crossover`], series above.
    Auto,
}

fn gaussian(z: f64, t: f64) -> f64 {
    (-z * z / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

impl ClosedFormKernel {
    /// `(lo, hi)` of the domain.
    pub fn domain(&self) -> (f64, f64) {
        match *self {
            Self::FreeLine => (f64::NEG_INFINITY, f64::INFINITY),
            Self::NeumannInterval { length } => (0.0, length),
            Self::DirichletInterval { half_width } => (-half_width, half_width),
        }
    }

    /// Domain length `L`; `None` for the line.
    pub fn domain_length(&self) -> Option<f64> {
        match *self {
            Self::FreeLine => None,
            Self::NeumannInterval { length } => Some(length),
            Self::DirichletInterval { half_width } => Some(2.0 * half_width),
        }
    }

    /// Time `L²/π` at which `Auto` switches from images to the series.
    pub fn crossover(&self) -> Option<f64> {
        self.domain_length().map(|l| l * l / PI)
    }

    fn validate(&self, t: f64, points: &[f64]) -> Result<(), HeatKernelError> {
        check_time(t)?;
        let (lo, hi) = self.domain();
        if let Some(&x) = points.iter().find(|x| !(lo..=hi).contains(*x)) {
            return Err(HeatKernelError::OutOfDomain { x, lo, hi });
        }
        if let Some(l) = self.domain_length() {
            if !(l > 0.0) || !l.is_finite() {
                return Err(HeatKernelError::OutOfDomain { x: l, lo: 0.0, hi: f64::INFINITY });
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64, x: f64, y: f64) -> Result<f64, HeatKernelError> {
        self.eval_with(KernelMethod::Auto, t, x, y)
    }

    pub fn eval_with(&self, method: KernelMethod, t: f64, x: f64, y: f64) -> Result<f64, HeatKernelError> {
        self.validate(t, &[x, y])?;
        let series = match method {
            KernelMethod::Images => false,
            KernelMethod::Series => true,
            KernelMethod::Auto => self.crossover().is_some_and(|tc| t > tc),
        };
        if !series {
            return Ok(self.scaled_images(t, x, y)? / (4.0 * PI * t).sqrt());
        }
        Ok(match *self {
            Self::FreeLine => gaussian(x - y, t),
            Self::NeumannInterval { length } => neumann_series(length, t, x, y),
            Self::DirichletInterval { half_width } => {
                dirichlet_series(2.0 * half_width, t, x + half_width, y + half_width)
            }
        })
    }

    /// `(4πt)^{1/2} K(t,x,y)` summed by images, without the `(4πt)^{-1/2}`
    /// prefactor round trip.
    pub fn scaled_images(&self, t: f64, x: f64, y: f64) -> Result<f64, HeatKernelError> {
        self.validate(t, &[x, y])?;
        Ok(match *self {
            Self::FreeLine => (-(x - y).powi(2) / (4.0 * t)).exp(),
            Self::NeumannInterval { length } => neumann_images_scaled(length, t, x, y),
            Self::DirichletInterval { half_width } => {
                let l = 2.0 * half_width;
                let (u, v) = (x + half_width, y + half_width);
                (-(u - v).powi(2) / (4.0 * t)).exp() + dirichlet_images_rest(l, t, u, v)
            }
        })
    }
}

/// `closed_form_eval(kernel, t, x, y)`, switching method at the crossover.
pub fn closed_form_eval(kernel: &ClosedFormKernel, t: f64, x: f64, y: f64) -> Result<f64, HeatKernelError> {
    kernel.eval(t, x, y)
}

/// Number of image periods needed so that every omitted Gaussian has
/// exponent above the cutoff; images in period `k` sit at least
/// `2(k-1)L` away.
fn image_periods(l: f64, t: f64) -> i64 {
    let mut k = 1_i64;
    while (2.0 * (k - 1) as f64 * l).powi(2) / (4.0 * t) <= EXPONENT_CUTOFF {
        k += 1;
    }
    k
}

fn neumann_images_scaled(l: f64, t: f64, x: f64, y: f64) -> f64 {
    let g = |z: f64| (-z * z / (4.0 * t)).exp();
    let periods = image_periods(l, t);
    let mut sum = g(x - y) + g(x + y);
    for k in 1..=periods {
        let s = 2.0 * k as f64 * l;
        sum += g(x - y + s) + g(x - y - s) + g(x + y + s) + g(x + y - s);
    }
    sum
}

/// Image sum for the Dirichlet kernel on `[0, l]` in shifted coordinates,
/// scaled by `(4πt)^{1/2}`, without the direct term `g(u - v)`.
fn dirichlet_images_rest(l: f64, t: f64, u: f64, v: f64) -> f64 {
    let g = |z: f64| (-z * z / (4.0 * t)).exp();
    let periods = image_periods(l, t);
    let mut rest = -g(u + v);
    for k in 1..=periods {
        let s = 2.0 * k as f64 * l;
        rest += g(u - v + s) + g(u - v - s) - g(u + v + s) - g(u + v - s);
    }
    rest
}

fn series_terms(l: f64, t: f64) -> usize {
    // exponent π²n²t/L² first exceeds the cutoff
    ((EXPONENT_CUTOFF * l * l / (PI * PI * t)).sqrt().ceil() as usize).max(1) + 1
}

fn neumann_series(l: f64, t: f64, x: f64, y: f64) -> f64 {
    let mut sum = 1.0;
    for n in 1..=series_terms(l, t) {
        let k = n as f64 * PI / l;
        sum += 2.0 * (-k * k * t).exp() * (k * x).cos() * (k * y).cos();
    }
    sum / l
}

fn dirichlet_series(l: f64, t: f64, u: f64, v: f64) -> f64 {
    let mut sum = 0.0;
    for n in 1..=series_terms(l, t) {
        let k = n as f64 * PI / l;
        sum += (-k * k * t).exp() * (k * u).sin() * (k * v).sin();
    }
    2.0 * sum / l
}

/// `1 - (4πt)^{1/2} K_a(t,x,x)` for the Dirichlet kernel on `(-a, a)`,
/// summed by images without cancellation against 1.
pub fn dirichlet_diagonal_deficit(a: f64, t: f64, x: f64) -> Result<f64, HeatKernelError> {
    let kernel = ClosedFormKernel::DirichletInterval { half_width: a };
    kernel.validate(t, &[x])?;
    let u = x + a;
    Ok(0.0 - dirichlet_images_rest(2.0 * a, t, u, u))
}

/// `∫_{-a}^{a} K_a(t,0,x) dx`: the heat retained in `(-a, a)` from a unit
/// source at the centre.
pub fn heat_content_dirichlet(a: f64, t: f64) -> Result<f64, HeatKernelError> {
    Ok(1.0 - heat_content_deficit_dirichlet(a, t)?)
}

/// `1 - ∫_{-a}^{a} K_a(t,0,x) dx`, computed directly so that tiny losses
/// are not rounded away.
pub fn heat_content_deficit_dirichlet(a: f64, t: f64) -> Result<f64, HeatKernelError> {
    check_time(t)?;
    if !(a > 0.0) || !a.is_finite() {
        return Err(HeatKernelError::OutOfDomain { x: a, lo: 0.0, hi: f64::INFINITY });
    }
    if t <= 4.0 * a * a / PI {
        // term-wise integrated images: 2 Σ (-1)^j erfc((2j+1)a / (2√t))
        let mut sum = 0.0;
        let mut j = 0;
        loop {
            let z = (2 * j + 1) as f64 * a / (2.0 * t.sqrt());
            let term = libm::erfc(z);
            sum += if j % 2 == 0 { term } else { -term };
            if z * z > EXPONENT_CUTOFF {
                break;
            }
            j += 1;
        }
        Ok(2.0 * sum)
    } else {
        // odd sine modes: (4/π) Σ (-1)^j/(2j+1) e^{-π²(2j+1)²t/(4a²)}
        let mut sum = 0.0;
        let mut j = 0;
        loop {
            let m = (2 * j + 1) as f64;
            let x = PI * PI * m * m * t / (4.0 * a * a);
            let term = (-x).exp() / m;
            sum += if j % 2 == 0 { term } else { -term };
            if x > EXPONENT_CUTOFF {
                break;
            }
            j += 1;
        }
        Ok(1.0 - 4.0 / PI * sum)
    }
}

/// `ln(1 - ∫_{-a}^{a} K_a(t,0,x) dx)`, finite even where the deficit
/// itself underflows.
pub fn heat_content_log_deficit_dirichlet(a: f64, t: f64) -> Result<f64, HeatKernelError> {
    let deficit = heat_content_deficit_dirichlet(a, t)?;
    if deficit > 1e-280 {
        return Ok(deficit.ln());
    }
    // here z > 25, the deficit is 2·erfc(z) to relative e^{-8z²}, and the
    // asymptotic series of erfc(z)·z·√π·e^{z²} converges fast
    let z = a / (2.0 * t.sqrt());
    let z2 = z * z;
    let (mut term, mut series) = (1.0, 1.0);
    for k in 1..8 {
        term *= -((2 * k - 1) as f64) / (2.0 * z2);
        series += term;
    }
    Ok(2.0_f64.ln() - z2 - (z * PI.sqrt()).ln() + series.ln())
}

fn check_grid(t_grid: &[f64]) -> Result<(), HeatKernelError> {
    if t_grid.len() < 3 {
        return Err(HeatKernelError::BadGrid("need at least three times".into()));
    }
    if let Some(&t) = t_grid.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(HeatKernelError::NonPositiveTime(t));
    }
    if t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(HeatKernelError::BadGrid("times must be strictly decreasing".into()));
    }
    Ok(())
}

/// Samples of `t^{1/2} K(t,x,x)` and the extrapolated `t → 0` limit.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalLimit {
    pub t: Vec<f64>,
    pub scaled: Vec<f64>,
    pub limit: f64,
    /// `true` when the `a + b·e^{-c/t}` fit was used; otherwise `limit`
    /// is the value at the smallest `t`.
    pub fitted: bool,
}

fn extract_limit(t: Vec<f64>, scaled: Vec<f64>) -> DiagonalLimit {
    let n = t.len();
    let fit = fit_exp_correction([t[n - 3], t[n - 2], t[n - 1]], [scaled[n - 3], scaled[n - 2], scaled[n - 1]]);
    let (limit, fitted) = match fit {
        // a fit that moves the estimate further than the last step is noise
        Some(f) if (f.a - scaled[n - 1]).abs() <= (scaled[n - 2] - scaled[n - 1]).abs() => (f.a, true),
        _ => (scaled[n - 1], false),
    };
    DiagonalLimit { t, scaled, limit, fitted }
}

/// Extrapolated `lim_{t→0} t^{1/2} K₀(t,x,x)` at an interior point.
///
/// `t_grid` must be strictly decreasing and stay above the mesh floor
/// `10·h²`.
pub fn diagonal_limit(sd: &SpectralData, x: &PointOnGraph, t_grid: &[f64]) -> Result<f64, HeatKernelError> {
    diagonal_limit_report(sd, x, t_grid).map(|r| r.limit)
}

pub fn diagonal_limit_report(
    sd: &SpectralData,
    x: &PointOnGraph,
    t_grid: &[f64],
) -> Result<DiagonalLimit, HeatKernelError> {
    check_grid(t_grid)?;
    let mesh = sd.require_mesh()?;
    if x.vertex(mesh.graph()).is_some() {
        return Err(HeatKernelError::VertexPoint { edge: x.edge, s: x.s });
    }
    let floor = MESH_FLOOR_FACTOR * mesh.max_step().powi(2);
    if let Some(&t) = t_grid.iter().find(|&&t| t < floor) {
        return Err(HeatKernelError::MeshFloor { t, floor });
    }
    let scaled = t_grid
        .iter()
        .map(|&t| Ok(t.sqrt() * k0_eval(sd, t, x, x)?))
        .collect::<Result<Vec<_>, HeatKernelError>>()?;
    Ok(extract_limit(t_grid.to_vec(), scaled))
}

/// Same extraction for a closed-form kernel; vertices (interval ends) are
/// allowed here.
pub fn closed_form_diagonal_limit(
    kernel: &ClosedFormKernel,
    x: f64,
    t_grid: &[f64],
) -> Result<DiagonalLimit, HeatKernelError> {
    check_grid(t_grid)?;
    let scaled = t_grid
        .iter()
        .map(|&t| Ok(kernel.scaled_images(t, x, x)? / (4.0 * PI).sqrt()))
        .collect::<Result<Vec<_>, HeatKernelError>>()?;
    Ok(extract_limit(t_grid.to_vec(), scaled))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_line_diagonal() {
        let k = ClosedFormKernel::FreeLine.eval(0.3, 1.0, 1.0).unwrap();
        assert!((k - (4.0 * PI * 0.3).sqrt().recip()).abs() < 1e-15);
    }

    #[test]
    fn methods_agree_at_crossover() {
        for kernel in [
            ClosedFormKernel::NeumannInterval { length: 1.3 },
            ClosedFormKernel::DirichletInterval { half_width: 0.7 },
        ] {
            let tc = kernel.crossover().unwrap();
            let (lo, hi) = kernel.domain();
            for (fx, fy) in [(0.1, 0.9), (0.5, 0.5), (0.0, 1.0), (0.33, 0.21)] {
                let (x, y) = (lo + fx * (hi - lo), lo + fy * (hi - lo));
                let a = kernel.eval_with(KernelMethod::Images, tc, x, y).unwrap();
                let b = kernel.eval_with(KernelMethod::Series, tc, x, y).unwrap();
                assert!((a - b).abs() < 1e-12, "{kernel:?} {x} {y}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn out_of_domain_and_bad_time() {
        let k = ClosedFormKernel::NeumannInterval { length: 1.0 };
        assert!(matches!(k.eval(0.1, -0.1, 0.5), Err(HeatKernelError::OutOfDomain { .. })));
        assert!(matches!(k.eval(0.0, 0.1, 0.5), Err(HeatKernelError::NonPositiveTime(_))));
        assert!(heat_content_dirichlet(1.0, -1.0).is_err());
    }

    #[test]
    fn neumann_endpoint_doubles() {
        let k = ClosedFormKernel::NeumannInterval { length: 1.0 };
        let t = 1e-4;
        let scaled = k.scaled_images(t, 0.0, 0.0).unwrap();
        assert!((scaled - 2.0).abs() < 1e-12);
    }

    #[test]
    fn heat_content_limits() {
        assert_eq!(heat_content_dirichlet(1.0, 1e-6).unwrap(), 1.0);
        let a = 0.8;
        let tc = 4.0 * a * a / PI;
        let below = heat_content_deficit_dirichlet(a, tc).unwrap();
        let above = heat_content_deficit_dirichlet(a, tc * (1.0 + 1e-12)).unwrap();
        assert!((below - above).abs() < 1e-11);
    }

    #[test]
    fn dirichlet_deficit_matches_kernel() {
        let (a, t) = (1.0, 0.2);
        let k = ClosedFormKernel::DirichletInterval { half_width: a }.eval(t, 0.0, 0.0).unwrap();
        let deficit = dirichlet_diagonal_deficit(a, t, 0.0).unwrap();
        assert!(((1.0 - deficit) - k * (4.0 * PI * t).sqrt()).abs() < 1e-13);
    }
}
