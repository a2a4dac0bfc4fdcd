//! Line-oriented GRAPH text format.
//!
//! ```text
//! # comment
//! vertex <id>
//! edge <id> <vid> <vid> length=<positive float>
//! potential <edge-id> const <c>
//! potential <edge-id> cos amp=<a> mode=<k>
//! potential <edge-id> bump amp=<a> center=<s> width=<w>
//! potential <edge-id> sampled <v0> <v1> ...
//! ```
//!
//! Declarations must precede their use. Floats are written back in Rust's
//! shortest round-trip representation, so `parse(to_string(g)) == g`.

use std::collections::HashMap;
use std::fmt;

use super::{Edge, EdgePotential, GraphError, MetricGraph, PotentialSpec};

/// A graph together with the potential declared alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFile {
    pub graph: MetricGraph,
    pub potential: PotentialSpec,
}

/// Parses GRAPH text and returns only the metric graph.
pub fn parse_graph(text: &str) -> Result<MetricGraph, GraphError> {
    GraphFile::parse(text).map(|f| f.graph)
}

impl GraphFile {
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut vertices: Vec<String> = Vec::new();
        let mut vertex_ids: HashMap<String, usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut edge_ids: HashMap<String, usize> = HashMap::new();
        let mut potentials: Vec<(usize, usize, EdgePotential)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let syntax = |message: &str| GraphError::Syntax { line, message: message.to_string() };
            let tokens: Vec<&str> = content.split_whitespace().collect();
            match tokens[0] {
                "vertex" => {
                    let [_, id] = tokens[..] else {
                        return Err(syntax("expected `vertex <id>`"));
                    };
                    if vertex_ids.insert(id.to_string(), vertices.len()).is_some() {
                        return Err(GraphError::DuplicateVertex(id.to_string()));
                    }
                    vertices.push(id.to_string());
                }
                "edge" => {
                    let [_, id, a, b, len] = tokens[..] else {
                        return Err(syntax("expected `edge <id> <vid> <vid> length=<float>`"));
                    };
                    let lookup = |v: &str| {
                        vertex_ids.get(v).copied().ok_or_else(|| GraphError::UnknownVertexAt {
                            line,
                            vertex: v.to_string(),
                        })
                    };
                    let (tail, head) = (lookup(a)?, lookup(b)?);
                    let length = keyed_float(len, "length", line)?;
                    if !(length > 0.0) || !length.is_finite() {
                        return Err(GraphError::NonPositiveLength { edge: id.to_string(), length });
                    }
                    if edge_ids.insert(id.to_string(), edges.len()).is_some() {
                        return Err(GraphError::DuplicateEdge(id.to_string()));
                    }
                    edges.push(Edge { id: id.to_string(), tail, head, length });
                }
                "potential" => {
                    let Some(&edge_id) = tokens.get(1) else {
                        return Err(syntax("expected `potential <edge-id> <profile>`"));
                    };
                    let edge = *edge_ids.get(edge_id).ok_or_else(|| GraphError::Syntax {
                        line,
                        message: format!("unknown edge `{edge_id}`"),
                    })?;
                    let profile = parse_profile_tokens(&tokens[2..], line)?;
                    potentials.push((line, edge, profile));
                }
                other => return Err(syntax(&format!("unknown directive `{other}`"))),
            }
        }

        let graph = MetricGraph::new(vertices, edges)?;
        let mut potential = PotentialSpec::zero(&graph);
        for (line, edge, profile) in potentials {
            potential.set(&graph, edge, profile).map_err(|e| match e {
                GraphError::BadPotential { reason, .. } => GraphError::Syntax { line, message: reason },
                other => other,
            })?;
        }
        Ok(Self { graph, potential })
    }
}

/// Parses a profile such as `const 0.5` or `cos amp=1 mode=2`.
pub fn parse_profile(text: &str) -> Result<EdgePotential, GraphError> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    parse_profile_tokens(&tokens, 1)
}

fn parse_profile_tokens(tokens: &[&str], line: usize) -> Result<EdgePotential, GraphError> {
    let syntax = |message: &str| GraphError::Syntax { line, message: message.to_string() };
    match tokens {
        ["const", c] => Ok(EdgePotential::Constant(plain_float(c, line)?)),
        ["cos", amp, mode] => {
            let amplitude = keyed_float(amp, "amp", line)?;
            let mode = keyed(mode, "mode", line)?
                .parse::<u32>()
                .map_err(|_| syntax("mode must be a non-negative integer"))?;
            Ok(EdgePotential::Cosine { amplitude, mode })
        }
        ["bump", amp, center, width] => Ok(EdgePotential::Bump {
            amplitude: keyed_float(amp, "amp", line)?,
            center: keyed_float(center, "center", line)?,
            width: keyed_float(width, "width", line)?,
        }),
        ["sampled", values @ ..] if !values.is_empty() => Ok(EdgePotential::Sampled(
            values.iter().map(|v| plain_float(v, line)).collect::<Result<_, _>>()?,
        )),
        _ => Err(syntax(
            "expected `const <c>`, `cos amp=<a> mode=<k>`, `bump amp=<a> center=<s> width=<w>` or `sampled <v>...`",
        )),
    }
}

fn keyed<'a>(token: &'a str, key: &str, line: usize) -> Result<&'a str, GraphError> {
    token
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| GraphError::Syntax { line, message: format!("expected `{key}=<value>`, found `{token}`") })
}

fn keyed_float(token: &str, key: &str, line: usize) -> Result<f64, GraphError> {
    plain_float(keyed(token, key, line)?, line)
}

fn plain_float(token: &str, line: usize) -> Result<f64, GraphError> {
    token
        .parse()
        .map_err(|_| GraphError::Syntax { line, message: format!("invalid number `{token}`") })
}

impl fmt::Display for GraphFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = &self.graph;
        for v in g.vertices() {
            writeln!(f, "vertex {v}")?;
        }
        for e in g.edges() {
            let (a, b) = (&g.vertices()[e.tail], &g.vertices()[e.head]);
            writeln!(f, "edge {} {a} {b} length={:?}", e.id, e.length)?;
        }
        for (edge, profile) in self.potential.entries() {
            write!(f, "potential {} ", g.edge(edge).id)?;
            match profile {
                EdgePotential::Constant(c) => writeln!(f, "const {c:?}")?,
                EdgePotential::Cosine { amplitude, mode } => writeln!(f, "cos amp={amplitude:?} mode={mode}")?,
                EdgePotential::Bump { amplitude, center, width } => {
                    writeln!(f, "bump amp={amplitude:?} center={center:?} width={width:?}")?
                }
                EdgePotential::Sampled(values) => {
                    write!(f, "sampled")?;
                    for v in values {
                        write!(f, " {v:?}")?;
                    }
                    writeln!(f)?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for MetricGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        GraphFile { graph: self.clone(), potential: PotentialSpec::zero(self) }.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_interval() {
        let g = parse_graph("vertex a\nvertex b\nedge e1 a b length=1.0\n").unwrap();
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.total_volume(), 1.0);
    }

    #[test]
    fn negative_length() {
        let err = parse_graph("vertex a\nvertex b\nedge e1 a b length=-1\n").unwrap_err();
        assert!(matches!(err, GraphError::NonPositiveLength { .. }), "{err}");
    }

    #[test]
    fn disconnected_edges() {
        let text = "vertex a\nvertex b\nvertex c\nvertex d\nedge e1 a b length=1\nedge e2 c d length=1\n";
        assert!(matches!(parse_graph(text), Err(GraphError::Disconnected)));
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = "# header\nvertex a\n\nedge e1 a\n";
        match parse_graph(text) {
            Err(GraphError::Syntax { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_vertex() {
        let err = parse_graph("vertex a\nedge e1 a z length=1\n").unwrap_err();
        assert!(matches!(err, GraphError::UnknownVertexAt { line: 2, .. }), "{err}");
    }

    #[test]
    fn potentials_and_comments() {
        let text = "\
vertex c   # centre
vertex v1
vertex v2
edge e1 c v1 length=1
edge e2 c v2 length=0.5
potential e1 cos amp=1 mode=2
potential e2 bump amp=-0.5 center=0.25 width=0.1
";
        let file = GraphFile::parse(text).unwrap();
        assert_eq!(
            file.potential.edge_profile(0),
            Some(&EdgePotential::Cosine { amplitude: 1.0, mode: 2 })
        );
        assert_eq!(file.potential.sup_norm(), 1.0);
        assert_eq!(GraphFile::parse(&file.to_string()).unwrap(), file);
    }

    #[test]
    fn bad_profile() {
        let text = "vertex a\nvertex b\nedge e1 a b length=1\npotential e1 cos amp=1\n";
        assert!(matches!(GraphFile::parse(text), Err(GraphError::Syntax { line: 4, .. })));
        let text = "vertex a\nvertex b\nedge e1 a b length=1\npotential e1 bump amp=1 center=0 width=-1\n";
        assert!(matches!(GraphFile::parse(text), Err(GraphError::Syntax { line: 4, .. })));
    }
}
