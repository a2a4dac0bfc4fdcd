use std::collections::HashMap;

use petgraph::unionfind::UnionFind;

use super::GraphError;

/// An edge of a metric graph, parametrized by arclength `s ∈ [0, length]`
/// running from `tail` to `head`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    pub length: f64,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }
}

/// A compact, connected metric graph. Loops and multi-edges are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
}

impl MetricGraph {
    /// Validates and builds a graph. Vertex and edge ids must be unique,
    /// lengths positive and finite, endpoints in range, and the whole graph
    /// connected.
    pub fn new(vertices: Vec<String>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        if vertices.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut seen = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if seen.insert(v.as_str(), i).is_some() {
                return Err(GraphError::DuplicateVertex(v.clone()));
            }
        }
        let mut edge_ids = HashMap::new();
        for e in &edges {
            if edge_ids.insert(e.id.as_str(), ()).is_some() {
                return Err(GraphError::DuplicateEdge(e.id.clone()));
            }
            if !(e.length > 0.0) || !e.length.is_finite() {
                return Err(GraphError::NonPositiveLength {
                    edge: e.id.clone(),
                    length: e.length,
                });
            }
            for &v in &[e.tail, e.head] {
                if v >= vertices.len() {
                    return Err(GraphError::UnknownVertex(format!("#{v}")));
                }
            }
        }

        let mut components = UnionFind::new(vertices.len());
        for e in &edges {
            components.union(e.tail, e.head);
        }
        let root = components.find(0);
        if (1..vertices.len()).any(|v| components.find(v) != root) {
            return Err(GraphError::Disconnected);
        }

        Ok(Self { vertices, edges })
    }

    /// A single edge `[0, length]` with two degree-1 (Neumann) endpoints.
    pub fn interval(length: f64) -> Result<Self, GraphError> {
        Self::new(
            vec!["a".into(), "b".into()],
            vec![Edge { id: "e1".into(), tail: 0, head: 1, length }],
        )
    }

    /// A circle of the given circumference: one vertex carrying a loop.
    pub fn loop_graph(length: f64) -> Result<Self, GraphError> {
        Self::new(
            vec!["o".into()],
            vec![Edge { id: "e1".into(), tail: 0, head: 0, length }],
        )
    }

    /// Star with edges oriented from the centre `c` out to leaves `v1..vk`.
    pub fn star(lengths: &[f64]) -> Result<Self, GraphError> {
        let mut vertices = vec!["c".to_string()];
        let mut edges = Vec::with_capacity(lengths.len());
        for (i, &length) in lengths.iter().enumerate() {
            vertices.push(format!("v{}", i + 1));
            edges.push(Edge { id: format!("e{}", i + 1), tail: 0, head: i + 1, length });
        }
        Self::new(vertices, edges)
    }

    /// A loop at vertex `o` with a pendant edge from `o` to the leaf `p`.
    pub fn lasso(loop_length: f64, pendant_length: f64) -> Result<Self, GraphError> {
        Self::new(
            vec!["o".into(), "p".into()],
            vec![
                Edge { id: "loop".into(), tail: 0, head: 0, length: loop_length },
                Edge { id: "tail".into(), tail: 0, head: 1, length: pendant_length },
            ],
        )
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> &Edge {
        &self.edges[index]
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == id)
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// Number of edge ends meeting at `vertex`; a loop contributes two.
    pub fn degree(&self, vertex: usize) -> usize {
        self.edges
            .iter()
            .map(|e| usize::from(e.tail == vertex) + usize::from(e.head == vertex))
            .sum()
    }

    /// |X|, the sum of all edge lengths.
    pub fn total_volume(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(f64::INFINITY, f64::min)
    }

    /// Distance along its own edge from `p` to the nearer endpoint vertex.
    pub fn distance_to_edge_ends(&self, p: &PointOnGraph) -> f64 {
        let len = self.edges[p.edge].length;
        p.s.min(len - p.s)
    }
}

/// Total volume |X| of a metric graph.
pub fn total_volume(g: &MetricGraph) -> f64 {
    g.total_volume()
}

/// A point given by an edge index and an arclength coordinate on that edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointOnGraph {
    pub edge: usize,
    pub s: f64,
}

impl PointOnGraph {
    pub fn new(g: &MetricGraph, edge: usize, s: f64) -> Result<Self, GraphError> {
        let p = Self { edge, s };
        p.validate(g)?;
        Ok(p)
    }

    /// Looks the edge up by id, e.g. from a CLI argument `e1:0.25`.
    pub fn parse(g: &MetricGraph, text: &str) -> Result<Self, GraphError> {
        let (edge, s) = text
            .split_once(':')
            .ok_or_else(|| GraphError::BadPoint(text.to_string()))?;
        let edge = g
            .edge_index(edge.trim())
            .ok_or_else(|| GraphError::UnknownEdge(edge.trim().to_string()))?;
        let s: f64 = s.trim().parse().map_err(|_| GraphError::BadPoint(text.to_string()))?;
        Self::new(g, edge, s)
    }

    pub fn validate(&self, g: &MetricGraph) -> Result<(), GraphError> {
        let Some(e) = g.edges.get(self.edge) else {
            return Err(GraphError::OffGraph { edge: self.edge, s: self.s });
        };
        if !(0.0..=e.length).contains(&self.s) {
            return Err(GraphError::OffGraph { edge: self.edge, s: self.s });
        }
        Ok(())
    }

    /// The vertex this point coincides with, if it sits on an edge end.
    pub fn vertex(&self, g: &MetricGraph) -> Option<usize> {
        let e = &g.edges[self.edge];
        if self.s == 0.0 {
            Some(e.tail)
        } else if self.s == e.length {
            Some(e.head)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volumes() {
        assert_eq!(MetricGraph::interval(1.0).unwrap().total_volume(), 1.0);
        assert_eq!(MetricGraph::star(&[1.0, 1.0, 1.0]).unwrap().total_volume(), 3.0);
        let tau = 2.0 * std::f64::consts::PI;
        assert_eq!(MetricGraph::loop_graph(tau).unwrap().total_volume(), tau);
    }

    #[test]
    fn rejects_disconnected() {
        let err = MetricGraph::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![
                Edge { id: "e1".into(), tail: 0, head: 1, length: 1.0 },
                Edge { id: "e2".into(), tail: 2, head: 3, length: 1.0 },
            ],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::Disconnected));
    }

    #[test]
    fn isolated_vertex_is_disconnected() {
        let err = MetricGraph::new(
            vec!["a".into(), "b".into(), "z".into()],
            vec![Edge { id: "e1".into(), tail: 0, head: 1, length: 1.0 }],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::Disconnected));
    }

    #[test]
    fn degrees_count_loops_twice() {
        let g = MetricGraph::lasso(1.0, 1.0).unwrap();
        assert_eq!(g.degree(0), 3);
        assert_eq!(g.degree(1), 1);
    }

    #[test]
    fn points_identify_vertices() {
        let g = MetricGraph::star(&[1.0, 2.0, 1.0]).unwrap();
        let p = PointOnGraph::new(&g, 1, 0.0).unwrap();
        let q = PointOnGraph::new(&g, 2, 0.0).unwrap();
        assert_eq!(p.vertex(&g), q.vertex(&g));
        assert_eq!(PointOnGraph::new(&g, 1, 2.0).unwrap().vertex(&g), Some(2));
        assert!(PointOnGraph::new(&g, 0, 1.5).is_err());
        assert!(PointOnGraph::new(&g, 3, 0.5).is_err());
        assert_eq!(PointOnGraph::parse(&g, "e2:0.5").unwrap(), PointOnGraph { edge: 1, s: 0.5 });
    }
}
