//! Vertex–edge collision detection.
//!
//! A vertex `v` collides with an edge `u w` when, at some time, it lies on the
//! closed segment between `u` and `w`. The triangle-inequality slack
//!
//! ```text
//! gap(t) = |v - u| + |v - w| - |u - w|
//! ```
//!
//! is nonnegative and vanishes exactly at those times. Its zeros are
//! tangential minima, so they are found by minimization: the gap is sampled
//! over the graph's domain and every sampled local minimum is refined by
//! golden-section search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::{EdgeId, Graph, MovingGraph, Point, PositionError, VertexId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig {
    /// Equally spaced samples over the domain, both ends included.
    pub samples: usize,
    /// Final bracket width of the golden-section refinement.
    pub refine_tol: f64,
    /// A refined minimum below this counts as a collision.
    pub collide_eps: f64,
    /// Also report the smallest gap of every non-colliding pair.
    pub report_margin: bool,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            samples: 2048,
            refine_tol: 1e-12,
            collide_eps: 1e-7,
            report_margin: false,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        if self.samples < 16 {
            return Err(DetectError::Config(format!(
                "samples must be >= 16, got {}",
                self.samples
            )));
        }
        if !(self.refine_tol > 0.0 && self.refine_tol < self.collide_eps) {
            return Err(DetectError::Config(format!(
                "need 0 < refine_tol < collide_eps, got {} and {}",
                self.refine_tol, self.collide_eps
            )));
        }
        Ok(())
    }

    /// Upper end of the band `[collide_eps, 10 * collide_eps]` in which a
    /// non-collision verdict is not trustworthy.
    pub fn ambiguity_limit(&self) -> f64 {
        10.0 * self.collide_eps
    }
}

/// A detected collision, in the form stored in pairs files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionPair {
    pub vertex: String,
    pub edge: [String; 2],
    /// Time of the smallest gap found.
    #[serde(default)]
    pub t: f64,
    #[serde(default)]
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PairError {
    #[error("collision pair names unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("collision pair names unknown edge {0}-{1}")]
    UnknownEdge(String, String),
    #[error("vertex `{0}` is an endpoint of edge {1}-{2}")]
    Incident(String, String, String),
}

impl CollisionPair {
    /// A pair without numerical evidence, for hand-built instances.
    pub fn new(vertex: &str, u: &str, w: &str) -> Self {
        CollisionPair {
            vertex: vertex.into(),
            edge: [u.into(), w.into()],
            t: 0.0,
            gap: 0.0,
        }
    }

    pub fn resolve(&self, graph: &Graph) -> Result<(VertexId, EdgeId), PairError> {
        let v = graph
            .vertex_id(&self.vertex)
            .ok_or_else(|| PairError::UnknownVertex(self.vertex.clone()))?;
        let [a, b] = &self.edge;
        let e = graph
            .edge_id(a, b)
            .ok_or_else(|| PairError::UnknownEdge(a.clone(), b.clone()))?;
        if graph.is_incident(v, e) {
            return Err(PairError::Incident(
                self.vertex.clone(),
                a.clone(),
                b.clone(),
            ));
        }
        Ok((v, e))
    }
}

/// Resolves every pair against `graph`, keeping their order.
pub fn resolve_pairs(
    graph: &Graph,
    pairs: &[CollisionPair],
) -> Result<Vec<(VertexId, EdgeId)>, PairError> {
    pairs.iter().map(|p| p.resolve(graph)).collect()
}

/// Outcome of scanning one (vertex, edge) combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScan {
    pub vertex: VertexId,
    pub edge: EdgeId,
    pub min_gap: f64,
    pub witness_t: f64,
    pub collides: bool,
}

impl PairScan {
    pub fn to_pair(&self, graph: &Graph) -> CollisionPair {
        CollisionPair {
            vertex: graph.label(self.vertex).to_string(),
            edge: graph.edge_labels(self.edge).map(str::to_string),
            t: self.witness_t,
            gap: self.min_gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Undecidable {
    pub vertex: String,
    pub edge: String,
    pub error: PositionError,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("invalid detection config: {0}")]
    Config(String),
    #[error("vertex `{0}` is an endpoint of edge {1}")]
    Incident(String, String),
    #[error(transparent)]
    Position(#[from] PositionError),
    #[error("{} undecidable pair(s), first: vertex `{}` vs edge {}: {}",
            .0.len(), .0[0].vertex, .0[0].edge, .0[0].error)]
    Undecidable(Vec<Undecidable>),
}

fn gap_between(v: Point, a: Point, b: Point) -> f64 {
    v.distance(a) + v.distance(b) - a.distance(b)
}

/// Triangle-inequality slack of vertex `v` against edge `e` at time `t`.
pub fn gap(g: &MovingGraph, v: VertexId, e: EdgeId, t: f64) -> Result<f64, PositionError> {
    let [a, b] = g.graph().endpoints(e);
    Ok(gap_between(
        g.position(v, t)?,
        g.position(a, t)?,
        g.position(b, t)?,
    ))
}

/// Scans a single (vertex, edge) combination.
pub fn detect_pair(
    g: &MovingGraph,
    v: VertexId,
    e: EdgeId,
    cfg: &DetectionConfig,
) -> Result<PairScan, DetectError> {
    cfg.validate()?;
    if g.graph().is_incident(v, e) {
        return Err(DetectError::Incident(
            g.graph().label(v).to_string(),
            g.graph().edge_name(e),
        ));
    }
    let times: Vec<f64> = g.domain().sample(cfg.samples).collect();
    let gaps = times
        .iter()
        .map(|&t| gap(g, v, e, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(scan(v, e, &times, &gaps, |t| gap(g, v, e, t), cfg)?)
}

fn scan(
    vertex: VertexId,
    edge: EdgeId,
    times: &[f64],
    gaps: &[f64],
    mut f: impl FnMut(f64) -> Result<f64, PositionError>,
    cfg: &DetectionConfig,
) -> Result<PairScan, PositionError> {
    let n = gaps.len();
    let mut best_gap = f64::INFINITY;
    let mut best_t = times[0];
    for (k, &g) in gaps.iter().enumerate() {
        if g < best_gap {
            best_gap = g;
            best_t = times[k];
        }
    }
    for k in 0..n {
        let falls_in = k == 0 || gaps[k] <= gaps[k - 1];
        let rises_out = k + 1 == n || gaps[k] < gaps[k + 1];
        if !(falls_in && rises_out) {
            continue;
        }
        let lo = times[k.saturating_sub(1)];
        let hi = times[(k + 1).min(n - 1)];
        let (t, g) = golden_section_min(&mut f, lo, hi, cfg.refine_tol)?;
        if g < best_gap {
            best_gap = g;
            best_t = t;
        }
    }
    Ok(PairScan {
        vertex,
        edge,
        min_gap: best_gap,
        witness_t: best_t,
        collides: best_gap < cfg.collide_eps,
    })
}

/// Golden-section search for a minimum of `f` on `[a, b]`, stopping once the
/// bracket is narrower than `tol`. Returns `(t_min, f_min)`.
fn golden_section_min<E>(
    f: &mut impl FnMut(f64) -> Result<f64, E>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64), E> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    // 200 iterations shrink any bracket by more than 1e40.
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Every non-incident (vertex, edge) scan of a graph, in canonical order
/// (vertex order, then edge order).
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub config: DetectionConfig,
    pub scans: Vec<PairScan>,
}

impl Detection {
    pub fn collisions(&self) -> impl Iterator<Item = &PairScan> {
        self.scans.iter().filter(|s| s.collides)
    }

    pub fn pairs(&self, graph: &Graph) -> Vec<CollisionPair> {
        self.collisions().map(|s| s.to_pair(graph)).collect()
    }

    /// Non-colliding scans whose minimum fell inside the ambiguity band.
    pub fn ambiguous(&self) -> Vec<&PairScan> {
        let limit = self.config.ambiguity_limit();
        self.scans
            .iter()
            .filter(|s| !s.collides && s.min_gap <= limit)
            .collect()
    }

    /// The non-colliding scan that came closest to a collision.
    pub fn nearest_miss(&self) -> Option<&PairScan> {
        self.scans
            .iter()
            .filter(|s| !s.collides)
            .min_by(|a, b| a.min_gap.total_cmp(&b.min_gap))
    }
}

/// Scans every vertex against every edge not containing it. Pairs run in
/// parallel; the result does not depend on the schedule.
pub fn detect_all(g: &MovingGraph, cfg: &DetectionConfig) -> Result<Detection, DetectError> {
    cfg.validate()?;
    let graph = g.graph();
    let times: Vec<f64> = g.domain().sample(cfg.samples).collect();
    let tracks: Vec<Result<Vec<Point>, PositionError>> = graph
        .vertices()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&v| times.iter().map(|&t| g.position(v, t)).collect())
        .collect();

    let jobs: Vec<(VertexId, EdgeId)> = graph
        .vertices()
        .flat_map(|v| {
            graph
                .edges()
                .filter(move |&e| !graph.is_incident(v, e))
                .map(move |e| (v, e))
        })
        .collect();

    let results: Vec<Result<PairScan, PositionError>> = jobs
        .par_iter()
        .map(|&(v, e)| {
            let [a, b] = graph.endpoints(e);
            let track = |x: VertexId| tracks[x.0].as_ref().map_err(Clone::clone);
            let (tv, ta, tb) = (track(v)?, track(a)?, track(b)?);
            let gaps: Vec<f64> = (0..times.len())
                .map(|k| gap_between(tv[k], ta[k], tb[k]))
                .collect();
            scan(v, e, &times, &gaps, |t| gap(g, v, e, t), cfg)
        })
        .collect();

    let mut scans = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for (result, &(v, e)) in results.into_iter().zip(&jobs) {
        match result {
            Ok(s) => scans.push(s),
            Err(error) => failed.push(Undecidable {
                vertex: graph.label(v).to_string(),
                edge: graph.edge_name(e),
                error,
            }),
        }
    }
    if !failed.is_empty() {
        return Err(DetectError::Undecidable(failed));
    }
    Ok(Detection {
        config: *cfg,
        scans,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub vertex: String,
    pub edge: [String; 2],
    pub t: f64,
    pub gap: f64,
}

/// The pairs file: detected collisions plus a reference to the graph they
/// belong to (a path, or any other identifier).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairsFile {
    pub graph: String,
    pub pairs: Vec<CollisionPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margins: Option<Vec<Margin>>,
}

impl PairsFile {
    pub fn from_detection(graph_ref: &str, graph: &Graph, detection: &Detection) -> Self {
        let margins = detection.config.report_margin.then(|| {
            detection
                .scans
                .iter()
                .filter(|s| !s.collides)
                .map(|s| {
                    let p = s.to_pair(graph);
                    Margin {
                        vertex: p.vertex,
                        edge: p.edge,
                        t: p.t,
                        gap: p.gap,
                    }
                })
                .collect()
        });
        PairsFile {
            graph: graph_ref.to_string(),
            pairs: detection.pairs(graph),
            margins,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("pairs file serializes");
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{dixon1, Dixon1Params, Sign};
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    fn k43() -> MovingGraph {
        dixon1(&Dixon1Params {
            m: 4,
            n: 3,
            a: vec![1.0, 2.0, 3.0],
            b: vec![1.0, 2.0],
            sx: vec![Sign::Plus, Sign::Minus, Sign::Plus],
            sy: vec![Sign::Plus, Sign::Minus],
        })
        .unwrap()
    }

    fn ids(g: &MovingGraph, v: &str, a: &str, b: &str) -> (VertexId, EdgeId) {
        let graph = g.graph();
        (graph.vertex_id(v).unwrap(), graph.edge_id(a, b).unwrap())
    }

    #[test]
    fn gap_matches_hand_computation() {
        let g = k43();
        let (v, e) = ids(&g, "p0", "q0", "p1");
        assert!((gap(&g, v, e, 0.0).unwrap() - (2.0 - SQRT_2)).abs() < 1e-15);
        assert!(gap(&g, v, e, FRAC_PI_2).unwrap().abs() < 1e-15);
    }

    #[test]
    fn coincident_endpoint_has_zero_gap() {
        let g = MovingGraph::from_json(
            r#"{"vertices":[{"id":"v","x":"1","y":"1"},{"id":"a","x":"1","y":"1"},
                            {"id":"b","x":"4","y":"5"}],"edges":[["a","b"]]}"#,
        )
        .unwrap();
        assert_eq!(gap(&g, VertexId(0), EdgeId(0), 0.3).unwrap(), 0.0);
    }

    #[test]
    fn golden_section_finds_interior_and_boundary_minima() {
        let mut f = |x: f64| Ok::<_, ()>((x - 0.3) * (x - 0.3));
        let (x, fx) = golden_section_min(&mut f, 0.0, 1.0, 1e-10).unwrap();
        assert!((x - 0.3).abs() < 1e-6 && fx < 1e-12);
        let mut g = |x: f64| Ok::<_, ()>(x.abs());
        let (x, fx) = golden_section_min(&mut g, 0.0, 0.1, 1e-12).unwrap();
        assert!(x < 1e-11 && fx < 1e-11);
    }

    #[test]
    fn detects_collision_of_p0_with_q0_p1() {
        let g = k43();
        let (v, e) = ids(&g, "p0", "q0", "p1");
        let scan = detect_pair(&g, v, e, &DetectionConfig::default()).unwrap();
        assert!(scan.collides);
        assert!(scan.min_gap < 1e-12);
        assert!(
            (scan.witness_t - FRAC_PI_2).abs() < 1e-5,
            "{}",
            scan.witness_t
        );
    }

    #[test]
    fn opposite_signs_do_not_collide() {
        let g = k43();
        let (v, e) = ids(&g, "p2", "q0", "p3");
        let scan = detect_pair(&g, v, e, &DetectionConfig::default()).unwrap();
        assert!(!scan.collides);
        assert!(scan.min_gap > 1e-3);
    }

    #[test]
    fn static_far_vertex_keeps_constant_gap() {
        let g = MovingGraph::from_json(
            r#"{"vertices":[{"id":"v","x":"0","y":"3"},{"id":"a","x":"-1","y":"0"},
                            {"id":"b","x":"1","y":"0"}],"edges":[["a","b"]]}"#,
        )
        .unwrap();
        let scan = detect_pair(&g, VertexId(0), EdgeId(0), &DetectionConfig::default()).unwrap();
        assert!(!scan.collides);
        assert!((scan.min_gap - (2.0 * 10f64.sqrt() - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn incident_pairs_and_bad_configs_are_rejected() {
        let g = k43();
        let (_, e) = ids(&g, "p0", "q0", "p1");
        let v = g.graph().vertex_id("q0").unwrap();
        assert!(matches!(
            detect_pair(&g, v, e, &DetectionConfig::default()),
            Err(DetectError::Incident(..))
        ));
        let cfg = DetectionConfig {
            samples: 8,
            ..Default::default()
        };
        assert!(matches!(detect_all(&g, &cfg), Err(DetectError::Config(_))));
        let cfg = DetectionConfig {
            refine_tol: 1e-3,
            ..Default::default()
        };
        assert!(matches!(detect_all(&g, &cfg), Err(DetectError::Config(_))));
    }

    #[test]
    fn evaluation_failures_make_pairs_undecidable() {
        let g = MovingGraph::from_json(
            r#"{"vertices":[{"id":"v","x":"sqrt(sin(t))","y":"3"},{"id":"a","x":"-1","y":"0"},
                            {"id":"b","x":"1","y":"0"}],"edges":[["a","b"]]}"#,
        )
        .unwrap();
        match detect_all(&g, &DetectionConfig::default()) {
            Err(DetectError::Undecidable(list)) => {
                assert_eq!(list.len(), 1);
                assert_eq!(list[0].vertex, "v");
                assert_eq!(list[0].edge, "a-b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn k43_pairs_in_canonical_order() {
        let g = k43();
        let detection = detect_all(&g, &DetectionConfig::default()).unwrap();
        let got: Vec<(String, String)> = detection
            .collisions()
            .map(|s| {
                (
                    g.graph().label(s.vertex).to_string(),
                    g.graph().edge_name(s.edge),
                )
            })
            .collect();
        let want = [
            ("p0", "q0-p1"),
            ("p0", "q0-p2"),
            ("p0", "q0-p3"),
            ("p1", "q0-p3"),
            ("q0", "q1-p0"),
            ("q0", "q2-p0"),
        ];
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert_eq!((g.0.as_str(), g.1.as_str()), w);
        }
        assert!(detection.ambiguous().is_empty());
        assert!(detection.nearest_miss().unwrap().min_gap > 1e-3);
        for s in detection.collisions() {
            assert!(g.domain().contains(s.witness_t));
            assert!(!g.graph().is_incident(s.vertex, s.edge));
        }
        // 7 vertices, each incident to 4 or 3 of the 12 edges.
        assert_eq!(detection.scans.len(), 4 * 9 + 3 * 8);
    }

    #[test]
    fn sampled_gap_is_nonnegative() {
        let g = k43();
        for v in g.graph().vertices() {
            for e in g.graph().edges().filter(|&e| !g.graph().is_incident(v, e)) {
                for t in g.domain().sample(257) {
                    assert!(gap(&g, v, e, t).unwrap() >= -1e-9);
                }
            }
        }
        assert!(gap(&g, VertexId(0), EdgeId(5), PI).unwrap() > 0.0);
    }

    #[test]
    fn pairs_file_round_trips() {
        let g = k43();
        let cfg = DetectionConfig {
            report_margin: true,
            ..Default::default()
        };
        let detection = detect_all(&g, &cfg).unwrap();
        let file = PairsFile::from_detection("k43.json", g.graph(), &detection);
        assert_eq!(file.pairs.len(), 6);
        assert_eq!(
            file.margins.as_ref().unwrap().len(),
            detection.scans.len() - 6
        );
        let back = PairsFile::from_json(&file.to_json()).unwrap();
        assert_eq!(back, file);
        let minimal: PairsFile =
            PairsFile::from_json(r#"{"graph":"x","pairs":[{"vertex":"p0","edge":["q0","p1"]}]}"#)
                .unwrap();
        assert_eq!(minimal.pairs[0], CollisionPair::new("p0", "q0", "p1"));
    }

    #[test]
    fn pair_resolution_errors() {
        let g = k43();
        let graph = g.graph();
        assert!(matches!(
            CollisionPair::new("zz", "q0", "p1").resolve(graph),
            Err(PairError::UnknownVertex(_))
        ));
        assert!(matches!(
            CollisionPair::new("p0", "p1", "p2").resolve(graph),
            Err(PairError::UnknownEdge(..))
        ));
        assert!(matches!(
            CollisionPair::new("p1", "q0", "p1").resolve(graph),
            Err(PairError::Incident(..))
        ));
        assert_eq!(
            CollisionPair::new("p0", "p1", "q0").resolve(graph).unwrap(),
            ids(&g, "p0", "q0", "p1")
        );
    }
}
