//! Moving graphs: a graph whose vertices follow planar trajectories
//! `t -> (x(t), y(t))` such that every edge keeps a constant length.
//!
//! [`Graph`] holds the combinatorial part (labels and edges, in their
//! canonical order), [`MovingGraph`] adds one [`Motion`] per vertex and the
//! closed time interval that collision detection scans.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, MotionExpr, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("empty vertex label")]
    EmptyLabel,
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("self-loop on vertex `{0}`")]
    SelfLoop(String),
    #[error("edge {0}-{1} references unknown vertex `{2}`")]
    DanglingEndpoint(String, String, String),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(String, String),
    #[error("edge name `{0}` is ambiguous")]
    AmbiguousEdgeName(String),
}

/// The combinatorial part of a moving graph. Vertex and edge order are kept
/// exactly as given; downstream tie-breaking depends on them.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    labels: Vec<String>,
    edges: Vec<[VertexId; 2]>,
    vertex_index: HashMap<String, VertexId>,
    edge_index: HashMap<(VertexId, VertexId), EdgeId>,
    name_index: HashMap<String, EdgeId>,
    incident: Vec<Vec<EdgeId>>,
}

impl Graph {
    pub fn new<S: AsRef<str>>(labels: &[S], edges: &[(S, S)]) -> Result<Self, GraphError> {
        let mut vertex_index = HashMap::new();
        let mut owned = Vec::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            let label = label.as_ref();
            if label.is_empty() {
                return Err(GraphError::EmptyLabel);
            }
            if vertex_index
                .insert(label.to_string(), VertexId(i))
                .is_some()
            {
                return Err(GraphError::DuplicateVertex(label.to_string()));
            }
            owned.push(label.to_string());
        }

        let mut graph = Graph {
            labels: owned,
            edges: Vec::with_capacity(edges.len()),
            vertex_index,
            edge_index: HashMap::new(),
            name_index: HashMap::new(),
            incident: vec![Vec::new(); labels.len()],
        };
        for (u, v) in edges {
            let (u, v) = (u.as_ref(), v.as_ref());
            if u == v {
                return Err(GraphError::SelfLoop(u.to_string()));
            }
            let lookup = |x: &str| {
                graph.vertex_index.get(x).copied().ok_or_else(|| {
                    GraphError::DanglingEndpoint(u.to_string(), v.to_string(), x.to_string())
                })
            };
            let (iu, iv) = (lookup(u)?, lookup(v)?);
            let id = EdgeId(graph.edges.len());
            if graph.edge_index.insert(sorted(iu, iv), id).is_some() {
                return Err(GraphError::DuplicateEdge(u.to_string(), v.to_string()));
            }
            let name = format!("{u}-{v}");
            if graph.name_index.insert(name.clone(), id).is_some() {
                return Err(GraphError::AmbiguousEdgeName(name));
            }
            graph.edges.push([iu, iv]);
            graph.incident[iu.0].push(id);
            graph.incident[iv.0].push(id);
        }
        Ok(graph)
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.labels.len()).map(VertexId)
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.labels[v.0]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn endpoints(&self, e: EdgeId) -> [VertexId; 2] {
        self.edges[e.0]
    }

    /// `u-v` with the endpoints in the order the edge was declared.
    pub fn edge_name(&self, e: EdgeId) -> String {
        let [u, v] = self.edges[e.0];
        format!("{}-{}", self.labels[u.0], self.labels[v.0])
    }

    pub fn edge_labels(&self, e: EdgeId) -> [&str; 2] {
        let [u, v] = self.edges[e.0];
        [&self.labels[u.0], &self.labels[v.0]]
    }

    pub fn vertex_id(&self, label: &str) -> Option<VertexId> {
        self.vertex_index.get(label).copied()
    }

    /// Looks up an edge by its endpoint labels, in either order.
    pub fn edge_id(&self, u: &str, v: &str) -> Option<EdgeId> {
        let (u, v) = (self.vertex_id(u)?, self.vertex_id(v)?);
        self.edge_index.get(&sorted(u, v)).copied()
    }

    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.edge_index.get(&sorted(u, v)).copied()
    }

    /// Looks up an edge by its `u-v` name; the reversed name `v-u` also works.
    pub fn edge_by_name(&self, name: &str) -> Option<EdgeId> {
        if let Some(&e) = self.name_index.get(name) {
            return Some(e);
        }
        // A name like "a-b" may still be split differently from how it was declared.
        name.char_indices()
            .filter(|&(_, c)| c == '-')
            .find_map(|(i, _)| self.edge_id(&name[..i], &name[i + 1..]))
    }

    pub fn incident_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.incident[v.0]
    }

    pub fn is_incident(&self, v: VertexId, e: EdgeId) -> bool {
        self.edges[e.0].contains(&v)
    }

    pub fn isolated_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|v| self.incident[v.0].is_empty())
    }
}

fn sorted(a: VertexId, b: VertexId) -> (VertexId, VertexId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Closed analysis window `[start, end]` in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Result<Self, LoadError> {
        if start.is_finite() && end.is_finite() && start < end {
            Ok(Interval { start, end })
        } else {
            Err(LoadError::BadDomain(start, end))
        }
    }

    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    /// `n >= 2` equally spaced times, both ends included.
    pub fn sample(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let last = n.saturating_sub(1).max(1) as f64;
        (0..n).map(move |k| {
            if k + 1 == n {
                self.end
            } else {
                self.start + self.width() * (k as f64 / last)
            }
        })
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval {
            start: 0.0,
            end: TAU,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Motion {
    pub x: MotionExpr,
    pub y: MotionExpr,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("malformed graph file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("vertex `{vertex}`, {axis} coordinate: {source}")]
    Expr {
        vertex: String,
        axis: char,
        #[source]
        source: ParseError,
    },
    #[error("invalid domain [{0}, {1}]")]
    BadDomain(f64, f64),
    #[error("{0} motions for {1} vertices")]
    MotionCount(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("evaluating vertex `{vertex}` at t = {t}: {source}")]
pub struct PositionError {
    pub vertex: String,
    pub t: f64,
    #[source]
    pub source: EvalError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeLength {
    pub edge: String,
    pub mean: f64,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthReport {
    pub samples: usize,
    pub tolerance: f64,
    pub edges: Vec<EdgeLength>,
    pub pass: bool,
    /// Vertices without incident edges. Accepted, but worth a warning.
    pub isolated_vertices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidateError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Position(#[from] PositionError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovingGraph {
    graph: Graph,
    motions: Vec<Motion>,
    domain: Interval,
}

impl MovingGraph {
    pub fn new(graph: Graph, motions: Vec<Motion>, domain: Interval) -> Result<Self, LoadError> {
        if motions.len() != graph.vertex_count() {
            return Err(LoadError::MotionCount(motions.len(), graph.vertex_count()));
        }
        Ok(MovingGraph {
            graph,
            motions,
            domain,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn with_domain(mut self, domain: Interval) -> Self {
        self.domain = domain;
        self
    }

    pub fn motion(&self, v: VertexId) -> &Motion {
        &self.motions[v.0]
    }

    pub fn position(&self, v: VertexId, t: f64) -> Result<Point, PositionError> {
        let motion = &self.motions[v.0];
        let wrap = |source| PositionError {
            vertex: self.graph.label(v).to_string(),
            t,
            source,
        };
        Ok(Point {
            x: motion.x.eval(t).map_err(wrap)?,
            y: motion.y.eval(t).map_err(wrap)?,
        })
    }

    /// Position of the vertex labelled `label`, or `None` if there is no such vertex.
    pub fn position_of(&self, label: &str, t: f64) -> Option<Result<Point, PositionError>> {
        self.graph.vertex_id(label).map(|v| self.position(v, t))
    }

    pub fn edge_length(&self, e: EdgeId, t: f64) -> Result<f64, PositionError> {
        let [u, v] = self.graph.endpoints(e);
        Ok(self.position(u, t)?.distance(self.position(v, t)?))
    }

    /// Samples every edge length at `samples` equally spaced times of the
    /// domain; passes iff each deviation from the edge's mean is within `tol`.
    pub fn validate_edge_lengths(
        &self,
        samples: usize,
        tol: f64,
    ) -> Result<LengthReport, ValidateError> {
        if samples < 2 {
            return Err(ValidateError::TooFewSamples(samples));
        }
        let times: Vec<f64> = self.domain.sample(samples).collect();
        let mut positions = Vec::with_capacity(self.graph.vertex_count());
        for v in self.graph.vertices() {
            let track = times
                .iter()
                .map(|&t| self.position(v, t))
                .collect::<Result<Vec<_>, _>>()?;
            positions.push(track);
        }

        let edges: Vec<EdgeLength> = self
            .graph
            .edges()
            .map(|e| {
                let [u, v] = self.graph.endpoints(e);
                let lengths: Vec<f64> = positions[u.0]
                    .iter()
                    .zip(&positions[v.0])
                    .map(|(p, q)| p.distance(*q))
                    .collect();
                let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
                let max_deviation = lengths.iter().map(|l| (l - mean).abs()).fold(0.0, f64::max);
                EdgeLength {
                    edge: self.graph.edge_name(e),
                    mean,
                    max_deviation,
                }
            })
            .collect();
        let pass = edges.iter().all(|e| e.max_deviation <= tol);
        Ok(LengthReport {
            samples,
            tolerance: tol,
            edges,
            pass,
            isolated_vertices: self
                .graph
                .isolated_vertices()
                .map(|v| self.graph.label(v).to_string())
                .collect(),
        })
    }

    /// True when every vertex is back where it started at the end of the domain.
    pub fn returns_to_start(&self, tol: f64) -> Result<bool, PositionError> {
        for v in self.graph.vertices() {
            let a = self.position(v, self.domain.start)?;
            let b = self.position(v, self.domain.end)?;
            if a.distance(b) > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn from_json(text: &str) -> Result<Self, LoadError> {
        let file: GraphFile = serde_json::from_str(text)?;
        let domain = match file.domain {
            Some([a, b]) => Interval::new(a, b)?,
            None => Interval::default(),
        };
        let labels: Vec<&str> = file.vertices.iter().map(|v| v.id.as_str()).collect();
        let edges: Vec<(&str, &str)> = file
            .edges
            .iter()
            .map(|[u, v]| (u.as_str(), v.as_str()))
            .collect();
        let graph = Graph::new(&labels, &edges)?;
        let motions = file
            .vertices
            .iter()
            .map(|entry| {
                let parse = |text: &str, axis| {
                    MotionExpr::parse(text).map_err(|source| LoadError::Expr {
                        vertex: entry.id.clone(),
                        axis,
                        source,
                    })
                };
                Ok(Motion {
                    x: parse(&entry.x, 'x')?,
                    y: parse(&entry.y, 'y')?,
                })
            })
            .collect::<Result<Vec<_>, LoadError>>()?;
        MovingGraph::new(graph, motions, domain)
    }

    pub fn to_json(&self) -> String {
        let file = GraphFile {
            domain: Some([self.domain.start, self.domain.end]),
            vertices: self
                .graph
                .vertices()
                .map(|v| VertexEntry {
                    id: self.graph.label(v).to_string(),
                    x: self.motions[v.0].x.to_string(),
                    y: self.motions[v.0].y.to_string(),
                })
                .collect(),
            edges: self
                .graph
                .edges()
                .map(|e| self.graph.edge_labels(e).map(str::to_string))
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&file).expect("graph file serializes");
        out.push('\n');
        out
    }
}

pub fn load_graph(text: &str) -> Result<MovingGraph, LoadError> {
    MovingGraph::from_json(text)
}

pub fn save_graph(graph: &MovingGraph) -> String {
    graph.to_json()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<[f64; 2]>,
    vertices: Vec<VertexEntry>,
    edges: Vec<[String; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexEntry {
    id: String,
    x: String,
    y: String,
}
