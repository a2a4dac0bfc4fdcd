use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::{GraphError, MetricGraph, PointOnGraph};

/// Minimum number of trapezoid panels per edge when integrating a bump.
const BUMP_PANELS: usize = 4096;

/// Profile of the potential along one edge, in the edge's arclength `s`.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgePotential {
    Constant(f64),
    /// `amplitude * cos(mode * π * s / length)`.
    Cosine { amplitude: f64, mode: u32 },
    /// `amplitude * exp(-(s - center)² / (2 width²))`.
    Bump { amplitude: f64, center: f64, width: f64 },
    /// Values at uniformly spaced points `s_j = j * length / (n - 1)`,
    /// linearly interpolated in between.
    Sampled(Vec<f64>),
}

impl EdgePotential {
    fn validate(&self, edge: &str) -> Result<(), GraphError> {
        let bad = |what: &str| GraphError::BadPotential { edge: edge.to_string(), reason: what.to_string() };
        match self {
            Self::Constant(c) if !c.is_finite() => Err(bad("non-finite constant")),
            Self::Cosine { amplitude, .. } if !amplitude.is_finite() => Err(bad("non-finite amplitude")),
            Self::Bump { amplitude, center, width } => {
                if !amplitude.is_finite() || !center.is_finite() {
                    Err(bad("non-finite bump parameter"))
                } else if !(*width > 0.0) || !width.is_finite() {
                    Err(bad("bump width must be positive"))
                } else {
                    Ok(())
                }
            }
            Self::Sampled(v) if v.len() < 2 => Err(bad("need at least two samples")),
            Self::Sampled(v) if v.iter().any(|x| !x.is_finite()) => Err(bad("non-finite sample")),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, s: f64, length: f64) -> f64 {
        match *self {
            Self::Constant(c) => c,
            Self::Cosine { amplitude, mode } => amplitude * (f64::from(mode) * PI * s / length).cos(),
            Self::Bump { amplitude, center, width } => {
                let z = (s - center) / width;
                amplitude * (-0.5 * z * z).exp()
            }
            Self::Sampled(ref v) => {
                let n = v.len() - 1;
                let x = (s / length * n as f64).clamp(0.0, n as f64);
                let j = (x.floor() as usize).min(n - 1);
                let frac = x - j as f64;
                v[j] * (1.0 - frac) + v[j + 1] * frac
            }
        }
    }

    /// Upper bound for `|V|` on the edge.
    pub fn sup_norm(&self) -> f64 {
        match self {
            Self::Constant(c) => c.abs(),
            Self::Cosine { amplitude, .. } | Self::Bump { amplitude, .. } => amplitude.abs(),
            Self::Sampled(v) => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    /// `∫_0^length V(s) ds`; closed form where one exists, composite
    /// trapezoid otherwise.
    pub fn integral(&self, length: f64) -> f64 {
        match self {
            Self::Constant(c) => c * length,
            Self::Cosine { amplitude, mode } => {
                if *mode == 0 {
                    amplitude * length
                } else {
                    0.0
                }
            }
            Self::Bump { width, .. } => {
                let panels = BUMP_PANELS.max((64.0 * length / width).ceil() as usize);
                trapezoid(panels, length, |s| self.eval(s, length))
            }
            Self::Sampled(v) => {
                let panels = v.len() - 1;
                trapezoid(panels, length, |s| v[(s / length * panels as f64).round() as usize])
            }
        }
    }
}

fn trapezoid(panels: usize, length: f64, f: impl Fn(f64) -> f64) -> f64 {
    let h = length / panels as f64;
    let interior: f64 = (1..panels).map(|j| f(j as f64 * h)).sum();
    h * (0.5 * (f(0.0) + f(length)) + interior)
}

/// A bounded potential on a metric graph, specified edge by edge.
/// Edges without an entry carry `V = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    edge_lengths: Vec<f64>,
    per_edge: BTreeMap<usize, EdgePotential>,
    sup_norm: f64,
}

impl PotentialSpec {
    pub fn zero(g: &MetricGraph) -> Self {
        Self {
            edge_lengths: g.edges().iter().map(|e| e.length).collect(),
            per_edge: BTreeMap::new(),
            sup_norm: 0.0,
        }
    }

    pub fn new(
        g: &MetricGraph,
        entries: impl IntoIterator<Item = (usize, EdgePotential)>,
    ) -> Result<Self, GraphError> {
        let mut spec = Self::zero(g);
        for (edge, profile) in entries {
            spec.set(g, edge, profile)?;
        }
        Ok(spec)
    }

    /// The same profile on every edge of `g`.
    pub fn uniform(g: &MetricGraph, profile: EdgePotential) -> Result<Self, GraphError> {
        Self::new(g, (0..g.edges().len()).map(|e| (e, profile.clone())))
    }

    pub(crate) fn set(&mut self, g: &MetricGraph, edge: usize, profile: EdgePotential) -> Result<(), GraphError> {
        let Some(e) = g.edges().get(edge) else {
            return Err(GraphError::UnknownEdge(format!("#{edge}")));
        };
        profile.validate(&e.id)?;
        if self.per_edge.contains_key(&edge) {
            return Err(GraphError::DuplicatePotential(e.id.clone()));
        }
        self.sup_norm = self.sup_norm.max(profile.sup_norm());
        self.per_edge.insert(edge, profile);
        Ok(())
    }

    pub fn edge_profile(&self, edge: usize) -> Option<&EdgePotential> {
        self.per_edge.get(&edge)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &EdgePotential)> {
        self.per_edge.iter().map(|(&e, p)| (e, p))
    }

    /// ‖V‖∞ (an upper bound, exact for every profile except an off-edge bump).
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn is_zero(&self) -> bool {
        self.sup_norm == 0.0
    }

    /// Value on edge `edge` at arclength `s`, without range checks.
    pub fn eval_on_edge(&self, edge: usize, s: f64) -> f64 {
        self.per_edge
            .get(&edge)
            .map_or(0.0, |p| p.eval(s, self.edge_lengths[edge]))
    }

    /// `∫_X V(x) dx`, independent of any mesh.
    pub fn integral(&self) -> f64 {
        self.per_edge
            .iter()
            .map(|(&e, p)| p.integral(self.edge_lengths[e]))
            .sum()
    }
}

/// `V(p)`; errors if `p` is not on the graph the potential was built for.
pub fn evaluate_potential(spec: &PotentialSpec, p: &PointOnGraph) -> Result<f64, GraphError> {
    let off = || GraphError::OffGraph { edge: p.edge, s: p.s };
    let &length = spec.edge_lengths.get(p.edge).ok_or_else(off)?;
    if !(0.0..=length).contains(&p.s) {
        return Err(off());
    }
    Ok(spec.eval_on_edge(p.edge, p.s))
}
