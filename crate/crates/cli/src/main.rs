use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qgspec::extrapolate::geometric_grid_desc;
use qgspec::graph::{parse_profile, GraphFile};
use qgspec::heat_kernel::MESH_FLOOR_FACTOR;
use qgspec::spectral_analysis::{
    ground_state_curve, write_ground_state_csv, write_residual_csv, write_sigma_csv, write_spectrum_csv,
};
use qgspec::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser, Debug)]
#[command(name = "qgspec", version, about = "Spectra, heat kernels and inverse spectral checks on quantum graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues of H₀ and H as CSV `n,lambda_n,mu_n`.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Number of eigenvalues to report.
        #[arg(long, default_value_t = 20)]
        neigs: usize,
    },
    /// σ(t) as CSV `t,sigma` plus its extrapolated small-time limit.
    Sigma {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        times: TimeGrid,
        /// Keep only the lowest eigenvalues (the tail is then bounded).
        #[arg(long)]
        neigs: Option<usize>,
    },
    /// Verdict report: positivity, tail criterion and mean-value checks.
    Check {
        #[command(flatten)]
        common: Common,
        /// Fraction of the highest indices inspected by the tail criterion.
        #[arg(long, default_value_t = TailPolicy::default().window)]
        window: f64,
        /// Largest admissible μ_n − λ_n in the inspected window.
        #[arg(long, default_value_t = TailPolicy::default().eps)]
        eps: f64,
    },
    /// Kernel values at given points: spectral, closed form and sandwich bounds.
    Kernel {
        #[command(flatten)]
        common: Common,
        /// Times (repeatable).
        #[arg(long = "t", required = true, num_args = 1..)]
        times: Vec<f64>,
        /// First point as `EDGE:S`.
        #[arg(long)]
        x: Option<String>,
        /// Second point as `EDGE:S` (defaults to x).
        #[arg(long)]
        y: Option<String>,
        /// Additional random point pairs drawn with --seed.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// ρ(t) = tr e^{-Ht} − tr e^{-H₀t} + t·tr(V e^{-H₀t}) as CSV.
    Residual {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        times: TimeGrid,
    },
    /// F(s) = μ₁(H₀ + sV) as CSV `s,F`.
    GroundState {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
        smin: f64,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        smax: f64,
        #[arg(long, default_value_t = 41)]
        spoints: usize,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// GRAPH file (may carry `potential` lines).
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    graph: Option<PathBuf>,
    #[arg(long, value_enum)]
    builtin: Option<Builtin>,
    /// Target mesh spacing.
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    /// Potential as `SPEC` for every edge or `EDGE:SPEC`, e.g.
    /// `const 1` or `e1:cos amp=1 mode=2` (repeatable, later wins).
    #[arg(long = "potential")]
    potentials: Vec<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TimeGrid {
    #[arg(long, default_value_t = 1e-3)]
    tmin: f64,
    #[arg(long, default_value_t = 0.1)]
    tmax: f64,
    #[arg(long, default_value_t = 8)]
    tpoints: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Builtin {
    Interval,
    Loop,
    Star3,
    Lasso,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Self::Lib(e.into())
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure::Usage(message.into())
}

type Outcome = Result<(), Failure>;

struct Setup {
    graph: MetricGraph,
    potential: PotentialSpec,
    h: f64,
    out: Option<PathBuf>,
}

impl Common {
    fn setup(&self) -> Result<Setup, Failure> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(usage(format!("--h must be positive, got {}", self.h)));
        }
        let file = match (&self.graph, self.builtin) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
                GraphFile::parse(&text)?
            }
            (None, Some(b)) => {
                let graph = match b {
                    Builtin::Interval => MetricGraph::interval(1.0),
                    Builtin::Loop => MetricGraph::loop_graph(1.0),
                    Builtin::Star3 => MetricGraph::star(&[1.0, 1.0, 1.0]),
                    Builtin::Lasso => MetricGraph::lasso(1.0, 1.0),
                }?;
                let potential = PotentialSpec::zero(&graph);
                GraphFile { graph, potential }
            }
            (None, None) => return Err(usage("one of --graph or --builtin is required")),
        };
        let g = file.graph;
        let mut entries: BTreeMap<usize, EdgePotential> =
            file.potential.entries().map(|(e, p)| (e, p.clone())).collect();
        for arg in &self.potentials {
            let (target, spec) = match arg.split_once(':') {
                Some((edge, spec)) => {
                    let e = g
                        .edge_index(edge.trim())
                        .ok_or_else(|| usage(format!("unknown edge `{}` in --potential", edge.trim())))?;
                    (Some(e), spec)
                }
                None => (None, arg.as_str()),
            };
            let profile = parse_profile(spec)?;
            match target {
                Some(e) => {
                    entries.insert(e, profile);
                }
                None => {
                    for e in 0..g.edges().len() {
                        entries.insert(e, profile.clone());
                    }
                }
            }
        }
        let potential = PotentialSpec::new(&g, entries)?;
        Ok(Setup { graph: g, potential, h: self.h, out: self.out.clone() })
    }
}

impl Setup {
    fn pair(&self) -> Result<(SpectralData, SpectralData), Failure> {
        let sd0 = eigendecompose(&assemble_h0(&self.graph, self.h)?)?;
        let sdh = eigendecompose(&assemble_h(&self.graph, &self.potential, self.h)?)?;
        Ok((sd0, sdh))
    }

    fn floor(&self, sd: &SpectralData) -> f64 {
        let step = sd.mesh().map_or(self.h, |m| m.max_step());
        MESH_FLOOR_FACTOR * step * step
    }

    fn writer(&self) -> Result<Box<dyn Write>, Failure> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).map_err(|e| usage(format!("cannot create {}: {e}", path.display())))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }

    /// Summary lines go to stdout when the CSV goes to a file, else stderr.
    fn summary(&self, line: &str) {
        if self.out.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
}

impl TimeGrid {
    fn grid(&self, floor: f64) -> Result<Vec<f64>, Failure> {
        if !(self.tmin > 0.0) || !(self.tmin < self.tmax) || !self.tmax.is_finite() {
            return Err(usage(format!("need 0 < tmin < tmax, got {} and {}", self.tmin, self.tmax)));
        }
        if self.tpoints < 3 {
            return Err(usage("--tpoints must be at least 3"));
        }
        if self.tmin < floor {
            return Err(usage(format!(
                "--tmin {} is below the mesh floor {floor:e} (10·h²); raise tmin or refine h",
                self.tmin
            )));
        }
        Ok(geometric_grid_desc(self.tmin, self.tmax, self.tpoints))
    }
}

fn spectrum(common: &Common, neigs: usize) -> Outcome {
    let s = common.setup()?;
    let lambda = eigenvalues(&assemble_h0(&s.graph, s.h)?)?;
    let mu = eigenvalues(&assemble_h(&s.graph, &s.potential, s.h)?)?;
    if neigs > lambda.len() {
        s.summary(&format!("note: mesh has {} eigenvalues, fewer than --neigs {neigs}", lambda.len()));
    }
    write_spectrum_csv(s.writer()?, &lambda, &mu, neigs)?;
    Ok(())
}

fn sigma(common: &Common, times: &TimeGrid, neigs: Option<usize>) -> Outcome {
    let s = common.setup()?;
    let (sd0, sdh) = s.pair()?;
    let grid = times.grid(s.floor(&sd0))?;
    let mut sp = SpectrumPair::from_spectral(&sd0, &sdh)?.with_potential(&s.potential);
    if let Some(n) = neigs {
        if n < 3 {
            return Err(usage("--neigs must be at least 3"));
        }
        if n < sp.len() {
            let lambda = sp.lambda()[..n].to_vec();
            let mu = sp.mu()[..n].to_vec();
            sp = SpectrumPair::new(lambda, mu, sp.volume(), sp.weyl_dim())?
                .with_potential(&s.potential)
                .truncated();
        }
    }
    let curve = sigma_of_t(&sp, &grid)?;
    write_sigma_csv(s.writer()?, &curve)?;
    s.summary(&format!("sigma limit = {:e} +/- {:e}", curve.limit, curve.uncertainty));
    Ok(())
}

fn check(common: &Common, window: f64, eps: f64) -> Outcome {
    if !(window > 0.0 && window <= 1.0) {
        return Err(usage(format!("--window must be in (0, 1], got {window}")));
    }
    if !(eps >= 0.0) {
        return Err(usage(format!("--eps must be non-negative, got {eps}")));
    }
    let s = common.setup()?;
    let lambda = eigenvalues(&assemble_h0(&s.graph, s.h)?)?;
    let mu = eigenvalues(&assemble_h(&s.graph, &s.potential, s.h)?)?;
    let sp = SpectrumPair::new(lambda, mu, s.graph.total_volume(), 1)?.with_potential(&s.potential);
    let amb = ambarzumyan_verdict(&sp, TailPolicy { window, eps })?;
    let pre = premain_verdict(&sp, s.potential.integral());
    let mut w = s.writer()?;
    let write = |w: &mut Box<dyn Write>| -> io::Result<()> {
        writeln!(w, "graph: {} vertices, {} edges, |X| = {}", s.graph.vertices().len(), s.graph.edges().len(), sp.volume())?;
        writeln!(w, "mesh: h = {}, {} eigenvalues", s.h, sp.len())?;
        writeln!(w, "potential: sup = {:e}, integral = {:e}", s.potential.sup_norm(), s.potential.integral())?;
        writeln!(w, "{amb}")?;
        writeln!(w, "{pre}")?;
        w.flush()
    };
    write(&mut w).map_err(|e| Failure::Lib(AnalysisError::from(e).into()))?;
    Ok(())
}

fn closed_form(g: &MetricGraph) -> Option<ClosedFormKernel> {
    match g.edges() {
        [e] if !e.is_loop() => Some(ClosedFormKernel::NeumannInterval { length: e.length }),
        _ => None,
    }
}

fn kernel(
    common: &Common,
    times: &[f64],
    x: Option<&str>,
    y: Option<&str>,
    random: usize,
    seed: u64,
) -> Outcome {
    let s = common.setup()?;
    let g = &s.graph;
    let mut pairs = Vec::new();
    if let Some(x) = x {
        let p = PointOnGraph::parse(g, x)?;
        let q = match y {
            Some(y) => PointOnGraph::parse(g, y)?,
            None => p,
        };
        pairs.push((p, q));
    } else if y.is_some() {
        return Err(usage("--y requires --x"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let e = rng.random_range(0..g.edges().len());
        PointOnGraph::new(g, e, rng.random_range(0.0..=g.edge(e).length)).expect("point on edge")
    };
    for _ in 0..random {
        let p = draw(&mut rng);
        let q = draw(&mut rng);
        pairs.push((p, q));
    }
    if pairs.is_empty() {
        return Err(usage("give --x (and optionally --y) or --random N"));
    }

    let (sd0, sdh) = s.pair()?;
    let floor = s.floor(&sd0);
    if let Some(&t) = times.iter().find(|&&t| !(t >= floor) || !t.is_finite()) {
        return Err(usage(format!("t = {t} is below the mesh floor {floor:e} (10·h²)")));
    }
    let exact = closed_form(g).filter(|_| s.potential.is_zero());
    let sup = s.potential.sup_norm();
    let label = |p: &PointOnGraph| format!("{}:{}", g.edge(p.edge).id, p.s);

    let mut w = s.writer()?;
    let mut lines = Vec::new();
    for &t in times {
        for (p, q) in &pairs {
            let k0 = k0_eval(&sd0, t, p, q)?;
            let k = k_eval(&sdh, t, p, q)?;
            let lower = (-sup * t).exp() * k0;
            let upper = (sup * t).exp() * k0;
            let mut line = format!("t={t} x={} y={} K={k:e} K0={k0:e} lower={lower:e} upper={upper:e}", label(p), label(q));
            if let Some(cf) = exact {
                line.push_str(&format!(" closed_form={:e}", cf.eval(t, p.s, q.s)?));
            }
            // rounding of two separate eigendecompositions
            let slack = 1e-9 * k0.abs();
            let ok = k - lower >= -slack && upper - k >= -slack;
            line.push_str(if ok { " sandwich=ok" } else { " sandwich=VIOLATED" });
            lines.push(line);
        }
    }
    let write = |w: &mut Box<dyn Write>| -> io::Result<()> {
        for l in &lines {
            writeln!(w, "{l}")?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Failure::Lib(AnalysisError::from(e).into()))?;
    Ok(())
}

fn residual(common: &Common, times: &TimeGrid) -> Outcome {
    let s = common.setup()?;
    let (sd0, sdh) = s.pair()?;
    let grid = times.grid(s.floor(&sd0))?;
    if grid[0] > 1.0 {
        return Err(usage("--tmax must not exceed 1"));
    }
    let report = trace_expansion_residual(&sd0, &sdh, &s.potential, &grid)?;
    write_residual_csv(s.writer()?, &report)?;
    match report.fit {
        Some(fit) => s.summary(&format!("rho exponent = {:.4} +/- {:.4}", fit.slope, 2.0 * fit.stderr)),
        None => s.summary("rho exponent: no fit (rho vanishes)"),
    }
    Ok(())
}

fn ground_state(common: &Common, smin: f64, smax: f64, spoints: usize) -> Outcome {
    if !(smin < smax) || !smin.is_finite() || !smax.is_finite() || spoints < 2 {
        return Err(usage("need finite smin < smax and at least two points"));
    }
    let s = common.setup()?;
    let span = smax - smin;
    let mut grid: Vec<f64> = (0..spoints)
        .map(|i| {
            let v = smin + span * i as f64 / (spoints - 1) as f64;
            if v.abs() < 1e-12 * span {
                0.0
            } else {
                v
            }
        })
        .collect();
    if !grid.contains(&0.0) {
        grid.push(0.0);
        grid.sort_by(f64::total_cmp);
    }
    let curve = ground_state_curve(&s.graph, &s.potential, s.h, &grid)?;
    write_ground_state_csv(s.writer()?, &curve)?;
    s.summary(&format!(
        "F'(0) ~ {:e} (expected {:e} +/- {:e}), max second difference {:e}",
        curve.derivative_estimate, curve.expected_derivative, curve.derivative_tolerance, curve.max_second_difference
    ));
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Spectrum { common, neigs } => spectrum(common, *neigs),
        Command::Sigma { common, times, neigs } => sigma(common, times, *neigs),
        Command::Check { common, window, eps } => check(common, *window, *eps),
        Command::Kernel { common, times, x, y, random, seed } => {
            kernel(common, times, x.as_deref(), y.as_deref(), *random, *seed)
        }
        Command::Residual { common, times } => residual(common, times),
        Command::GroundState { common, smin, smax, spoints } => ground_state(common, *smin, *smax, *spoints),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
