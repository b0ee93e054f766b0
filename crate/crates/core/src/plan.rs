//! Height planning for L-models.
//!
//! An L-model gives every edge an integer height. It is collision-free when,
//! for each collision pair `(v, e)`, the height of `e` lies strictly outside
//! the closed range spanned by the heights of the edges at `v`.
//!
//! The constructive route splits the collision graph into an upper and a
//! lower part with acyclic induced subgraphs ([`decide_partition`]), layers
//! the upper part upwards from 1 ([`heights_up`]) and the lower part downwards
//! from 0 ([`heights_down`]). [`exists_arrangement`] decides existence exactly,
//! including for graphs where no such partition exists.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cgraph::{Bipartiteness, CollisionGraph};
use crate::collide::{resolve_pairs, CollisionPair, PairError};
use crate::motion::{EdgeId, Graph, VertexId};

/// Default limit on nodes outside the multi-edged subgraph in [`decide_partition`].
pub const DEFAULT_FREE_NODE_CAP: usize = 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Pair(#[from] PairError),
    #[error("collision graph has a cycle through {0:?}")]
    Cyclic(Vec<EdgeId>),
    #[error("{part} part of the partition has a cycle: {}", .cycle.join(" -> "))]
    PartitionCyclic {
        part: &'static str,
        cycle: Vec<String>,
    },
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("{count} nodes outside the multi-edged subgraph exceed the search cap of {cap}")]
    TooManyFreeNodes { count: usize, cap: usize },
    #[error("no height for edge {0}")]
    MissingHeight(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("height assignment is not collision-free ({0} violations)")]
    NotCollisionFree(usize),
}

/// Integer heights keyed by edge.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HeightAssignment(BTreeMap<EdgeId, i64>);

impl HeightAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, e: EdgeId) -> Option<i64> {
        self.0.get(&e).copied()
    }

    pub fn insert(&mut self, e: EdgeId, h: i64) {
        self.0.insert(e, h);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (EdgeId, i64)> + '_ {
        self.0.iter().map(|(&e, &h)| (e, h))
    }

    pub fn is_injective(&self) -> bool {
        let distinct: BTreeSet<i64> = self.0.values().copied().collect();
        distinct.len() == self.0.len()
    }

    fn require(&self, graph: &Graph, e: EdgeId) -> Result<i64, PlanError> {
        self.get(e)
            .ok_or_else(|| PlanError::MissingHeight(graph.edge_name(e)))
    }

    pub fn to_file(&self, graph: &Graph, partition: Option<&Partition>) -> HeightsFile {
        let names = |list: &[EdgeId]| list.iter().map(|&e| graph.edge_name(e)).collect();
        HeightsFile {
            heights: self.iter().map(|(e, h)| (graph.edge_name(e), h)).collect(),
            partition: partition.map(|p| PartitionFile {
                upper: names(&p.upper),
                lower: names(&p.lower),
            }),
        }
    }

    pub fn from_file(graph: &Graph, file: &HeightsFile) -> Result<Self, PlanError> {
        let mut h = HeightAssignment::new();
        for (name, &value) in &file.heights {
            let e = graph
                .edge_by_name(name)
                .ok_or_else(|| PlanError::UnknownEdge(name.clone()))?;
            h.insert(e, value);
        }
        Ok(h)
    }
}

impl FromIterator<(EdgeId, i64)> for HeightAssignment {
    fn from_iter<I: IntoIterator<Item = (EdgeId, i64)>>(iter: I) -> Self {
        HeightAssignment(iter.into_iter().collect())
    }
}

/// Upper and lower edge sets, each in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub upper: Vec<EdgeId>,
    pub lower: Vec<EdgeId>,
}

impl Partition {
    /// `upper` as given, every other edge of `graph` in the lower part.
    pub fn from_upper(graph: &Graph, upper: &[EdgeId]) -> Result<Self, PlanError> {
        let set: BTreeSet<EdgeId> = upper.iter().copied().collect();
        if set.len() != upper.len() {
            return Err(PlanError::BadPartition(
                "repeated edge in upper part".into(),
            ));
        }
        if let Some(e) = set.iter().find(|e| e.0 >= graph.edge_count()) {
            return Err(PlanError::BadPartition(format!("edge {e:?} not in graph")));
        }
        Ok(Partition {
            upper: set.iter().copied().collect(),
            lower: graph.edges().filter(|e| !set.contains(e)).collect(),
        })
    }

    fn check(&self, graph: &Graph) -> Result<(), PlanError> {
        let mut all: Vec<EdgeId> = self.upper.iter().chain(&self.lower).copied().collect();
        all.sort();
        if all != graph.edges().collect::<Vec<_>>() {
            return Err(PlanError::BadPartition(
                "upper and lower parts must split the edge set".into(),
            ));
        }
        Ok(())
    }
}

/// Nodes without incoming arcs, in canonical order. In a finite graph these
/// are exactly the minimal elements of the reachability order.
pub fn minimal_nodes(c: &CollisionGraph) -> Vec<EdgeId> {
    let targets: BTreeSet<EdgeId> = c.arcs().map(|(_, v)| v).collect();
    c.nodes()
        .iter()
        .copied()
        .filter(|n| !targets.contains(n))
        .collect()
}

/// Layers `c` from the bottom: heights `1, 2, …` in order of removal, so
/// every arc `u -> v` gets `h(u) < h(v)`.
pub fn heights_up(c: &CollisionGraph) -> Result<HeightAssignment, PlanError> {
    layer(c, 1, 1)
}

/// Like [`heights_up`] but counting down from 0, so every arc `u -> v` gets
/// `h(u) > h(v)`.
pub fn heights_down(c: &CollisionGraph) -> Result<HeightAssignment, PlanError> {
    layer(c, 0, -1)
}

fn layer(c: &CollisionGraph, start: i64, step: i64) -> Result<HeightAssignment, PlanError> {
    let local = c.local();
    let n = c.nodes().len();
    let mut indegree = vec![0usize; n];
    for targets in &local.out {
        for &t in targets {
            indegree[t] += 1;
        }
    }
    let mut removed = vec![false; n];
    let mut heights = HeightAssignment::new();
    let mut k = start;
    let mut left = n;
    while left > 0 {
        let minimal: Vec<usize> = (0..n)
            .filter(|&i| !removed[i] && indegree[i] == 0)
            .collect();
        if minimal.is_empty() {
            let rest: Vec<EdgeId> = (0..n)
                .filter(|&i| !removed[i])
                .map(|i| c.nodes()[i])
                .collect();
            let cycle = c
                .induced(&rest)
                .expect("subset of nodes")
                .find_cycle()
                .unwrap_or(rest);
            return Err(PlanError::Cyclic(cycle));
        }
        for &i in &minimal {
            removed[i] = true;
            for &t in &local.out[i] {
                indegree[t] -= 1;
            }
        }
        for &i in &minimal {
            heights.insert(c.nodes()[i], k);
            k += step;
        }
        left -= minimal.len();
    }
    Ok(heights)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionDecision {
    Found(Partition),
    /// The multi-edged subgraph has an odd cycle, so some two-cycle always
    /// ends up inside one part.
    NotBipartite {
        component: Vec<EdgeId>,
        odd_cycle: Vec<EdgeId>,
    },
    /// Every candidate partition leaves a cycle in one of the parts.
    Exhausted,
}

/// Decides whether the nodes of `c` split into two parts with acyclic
/// induced subgraphs, using the default free-node cap.
pub fn decide_partition(c: &CollisionGraph) -> Result<PartitionDecision, PlanError> {
    decide_partition_with_cap(c, DEFAULT_FREE_NODE_CAP)
}

/// Nodes on two-cycles must be separated, so the proper two-colourings of the
/// multi-edged subgraph fix their side up to one flip per component. The
/// remaining ("free") nodes are placed depth-first, upper part first, and a
/// branch is cut as soon as a placement closes a cycle within its part.
pub fn decide_partition_with_cap(
    c: &CollisionGraph,
    free_cap: usize,
) -> Result<PartitionDecision, PlanError> {
    let components = match c.multi_edged_subgraph().is_bipartite() {
        Bipartiteness::NotBipartite {
            component,
            odd_cycle,
        } => {
            return Ok(PartitionDecision::NotBipartite {
                component,
                odd_cycle,
            })
        }
        Bipartiteness::Bipartite(components) => components,
    };
    let index: BTreeMap<EdgeId, usize> =
        c.nodes().iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let colored: BTreeSet<EdgeId> = components
        .iter()
        .flat_map(|comp| comp.nodes.iter().copied())
        .collect();
    let free: Vec<usize> = c
        .nodes()
        .iter()
        .filter(|n| !colored.contains(n))
        .map(|n| index[n])
        .collect();
    if free.len() > free_cap {
        return Err(PlanError::TooManyFreeNodes {
            count: free.len(),
            cap: free_cap,
        });
    }
    let groups: Vec<Vec<(usize, u8)>> = components
        .iter()
        .map(|comp| {
            comp.nodes
                .iter()
                .zip(&comp.colors)
                .map(|(n, &col)| (index[n], col))
                .collect()
        })
        .collect();

    let mut search = SideSearch {
        out: c.local().out,
        side: vec![None; c.nodes().len()],
    };
    if !search.run(&groups, &free, 0) {
        return Ok(PartitionDecision::Exhausted);
    }
    let pick = |s: Side| -> Vec<EdgeId> {
        (0..c.nodes().len())
            .filter(|&i| search.side[i] == Some(s))
            .map(|i| c.nodes()[i])
            .collect()
    };
    let partition = Partition {
        upper: pick(Side::Upper),
        lower: pick(Side::Lower),
    };
    assert!(
        c.induced(&partition.upper).unwrap().is_acyclic()
            && c.induced(&partition.lower).unwrap().is_acyclic(),
        "partition search returned a cyclic part"
    );
    Ok(PartitionDecision::Found(partition))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Upper,
    Lower,
}

struct SideSearch {
    out: Vec<Vec<usize>>,
    side: Vec<Option<Side>>,
}

impl SideSearch {
    fn run(&mut self, groups: &[Vec<(usize, u8)>], free: &[usize], step: usize) -> bool {
        if step < groups.len() {
            for flip in [0u8, 1] {
                let placed = self.place_group(&groups[step], flip);
                if placed.is_some() && self.run(groups, free, step + 1) {
                    return true;
                }
                for &(node, _) in &groups[step] {
                    self.side[node] = None;
                }
            }
            return false;
        }
        let Some(&node) = free.get(step - groups.len()) else {
            return true;
        };
        for s in [Side::Upper, Side::Lower] {
            if self.place(node, s) && self.run(groups, free, step + 1) {
                return true;
            }
            self.side[node] = None;
        }
        false
    }

    fn place_group(&mut self, group: &[(usize, u8)], flip: u8) -> Option<()> {
        for &(node, color) in group {
            let s = if color ^ flip == 0 {
                Side::Upper
            } else {
                Side::Lower
            };
            if !self.place(node, s) {
                return None;
            }
        }
        Some(())
    }

    /// Puts `node` on side `s`; false if that closes a cycle within the side.
    fn place(&mut self, node: usize, s: Side) -> bool {
        self.side[node] = Some(s);
        let mut seen = vec![false; self.out.len()];
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            for &y in &self.out[x] {
                if y == node {
                    return false;
                }
                if self.side[y] == Some(s) && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        true
    }
}

/// Heights for a partition whose two induced collision graphs are acyclic:
/// the upper part layered upwards from 1, the lower part downwards from 0.
pub fn assign_heights(
    graph: &Graph,
    pairs: &[CollisionPair],
    partition: &Partition,
) -> Result<HeightAssignment, PlanError> {
    partition.check(graph)?;
    let c = CollisionGraph::build(graph, pairs)?;
    let names = |cycle: Vec<EdgeId>| cycle.into_iter().map(|e| graph.edge_name(e)).collect();
    let part = |nodes: &[EdgeId], label: &'static str| {
        let sub = c.induced(nodes).expect("partition nodes are graph edges");
        match sub.find_cycle() {
            Some(cycle) => Err(PlanError::PartitionCyclic {
                part: label,
                cycle: names(cycle),
            }),
            None => Ok(sub),
        }
    };
    let upper = heights_up(&part(&partition.upper, "upper")?)?;
    let lower = heights_down(&part(&partition.lower, "lower")?)?;
    Ok(upper.iter().chain(lower.iter()).collect())
}

/// A collision pair whose edge sits inside the height range of its vertex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub pair: CollisionPair,
    /// `[min, max]` of the heights of the edges at the pair's vertex.
    pub range: [i64; 2],
    pub height: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub collision_free: bool,
    pub violations: Vec<Violation>,
}

fn vertex_range(
    graph: &Graph,
    h: &HeightAssignment,
    v: VertexId,
) -> Result<Option<[i64; 2]>, PlanError> {
    let mut range: Option<[i64; 2]> = None;
    for &e in graph.incident_edges(v) {
        let x = h.require(graph, e)?;
        range = Some(match range {
            None => [x, x],
            Some([lo, hi]) => [lo.min(x), hi.max(x)],
        });
    }
    Ok(range)
}

/// Checks every collision pair against the closed range of its vertex.
/// A vertex without edges imposes nothing.
pub fn verify_collision_free(
    graph: &Graph,
    pairs: &[CollisionPair],
    h: &HeightAssignment,
) -> Result<Verification, PlanError> {
    for e in graph.edges() {
        h.require(graph, e)?;
    }
    let mut violations = Vec::new();
    for (pair, (v, e)) in pairs.iter().zip(resolve_pairs(graph, pairs)?) {
        let height = h.require(graph, e)?;
        if let Some([lo, hi]) = vertex_range(graph, h, v)? {
            if lo <= height && height <= hi {
                violations.push(Violation {
                    pair: pair.clone(),
                    range: [lo, hi],
                    height,
                });
            }
        }
    }
    Ok(Verification {
        collision_free: violations.is_empty(),
        violations,
    })
}

/// Breaks ties of a collision-free assignment. Edges are ranked by
/// `(height, edge order)` and renumbered consecutively from the lowest height,
/// which keeps every strict inequality and therefore the verdict.
pub fn split_layers(
    graph: &Graph,
    pairs: &[CollisionPair],
    h: &HeightAssignment,
) -> Result<HeightAssignment, PlanError> {
    let report = verify_collision_free(graph, pairs, h)?;
    if !report.collision_free {
        return Err(PlanError::NotCollisionFree(report.violations.len()));
    }
    let mut order: Vec<(i64, EdgeId)> = graph.edges().map(|e| (h.get(e).unwrap(), e)).collect();
    order.sort();
    let base = order.first().map_or(0, |&(x, _)| x);
    Ok(order
        .iter()
        .enumerate()
        .map(|(rank, &(_, e))| (e, base + rank as i64))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Existence {
    /// A collision-free assignment with distinct heights.
    Yes(HeightAssignment),
    No,
}

impl Existence {
    pub fn is_yes(&self) -> bool {
        matches!(self, Existence::Yes(_))
    }
}

/// Exact decision: is there any collision-free height assignment?
///
/// Each pair `(v, e)` demands that `e` be strictly below every edge at `v` or
/// strictly above all of them. Choosing a side for every pair gives a system
/// of strict inequalities between edges, solvable over the integers iff its
/// digraph is acyclic. The search branches on pairs (vertices with more
/// edges first) and backtracks as soon as an inequality closes a cycle.
pub fn exists_arrangement(graph: &Graph, pairs: &[CollisionPair]) -> Result<Existence, PlanError> {
    let mut choices: Vec<(VertexId, EdgeId)> = resolve_pairs(graph, pairs)?
        .into_iter()
        .filter(|&(v, _)| !graph.incident_edges(v).is_empty())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    choices.sort_by_key(|&(v, _)| std::cmp::Reverse(graph.incident_edges(v).len()));

    let mut search = OrderSearch::new(graph.edge_count());
    let below_above: Vec<[Vec<(usize, usize)>; 2]> = choices
        .iter()
        .map(|&(v, e)| {
            let at_v = graph.incident_edges(v);
            [
                at_v.iter().map(|f| (e.0, f.0)).collect(),
                at_v.iter().map(|f| (f.0, e.0)).collect(),
            ]
        })
        .collect();
    if !search.run(&below_above, 0) {
        return Ok(Existence::No);
    }
    let order = search.topological_order();
    Ok(Existence::Yes(
        order
            .into_iter()
            .enumerate()
            .map(|(rank, e)| (EdgeId(e), rank as i64))
            .collect(),
    ))
}

/// Strict-inequality digraph over edges with multiplicity counts, so arcs can
/// be retracted on backtrack.
struct OrderSearch {
    count: Vec<Vec<u32>>,
}

impl OrderSearch {
    fn new(n: usize) -> Self {
        OrderSearch {
            count: vec![vec![0; n]; n],
        }
    }

    fn run(&mut self, options: &[[Vec<(usize, usize)>; 2]], step: usize) -> bool {
        let Some(option) = options.get(step) else {
            return true;
        };
        for arcs in option {
            let added = self.add_all(arcs);
            if added == arcs.len() && self.run(options, step + 1) {
                return true;
            }
            self.remove(&arcs[..added]);
        }
        false
    }

    /// Adds arcs in order until one would close a cycle; returns how many went in.
    fn add_all(&mut self, arcs: &[(usize, usize)]) -> usize {
        for (i, &(from, to)) in arcs.iter().enumerate() {
            if self.count[from][to] == 0 && self.reaches(to, from) {
                return i;
            }
            self.count[from][to] += 1;
        }
        arcs.len()
    }

    fn remove(&mut self, arcs: &[(usize, usize)]) {
        for &(from, to) in arcs {
            self.count[from][to] -= 1;
        }
    }

    fn reaches(&self, from: usize, to: usize) -> bool {
        let n = self.count.len();
        let mut seen = vec![false; n];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(x) = stack.pop() {
            if x == to {
                return true;
            }
            for (y, &arcs) in self.count[x].iter().enumerate() {
                if arcs > 0 && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        false
    }

    /// Kahn's algorithm, lowest index first among ready nodes.
    fn topological_order(&self) -> Vec<usize> {
        let n = self.count.len();
        let mut indegree: Vec<usize> = (0..n)
            .map(|y| (0..n).filter(|&x| self.count[x][y] > 0).count())
            .collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(x) = ready.pop_first() {
            order.push(x);
            for (y, &arcs) in self.count[x].iter().enumerate() {
                if arcs > 0 {
                    indegree[y] -= 1;
                    if indegree[y] == 0 {
                        ready.insert(y);
                    }
                }
            }
        }
        debug_assert_eq!(order.len(), n, "constraint digraph is acyclic");
        order
    }
}

/// Closed-form heights for the Dixon-1 graph on `K_{m,n}` (edge `q_j p_i` at
/// index `j*m + i`): `h(q_0 p_i) = i + 1` and, for `j > 0`,
/// `h(q_j p_i) = -(j - 1)(m + 1) - i`.
pub fn dixon1_heights(m: usize, n: usize) -> HeightAssignment {
    let mut h = HeightAssignment::new();
    for j in 0..n {
        for i in 0..m {
            let value = if j == 0 {
                i as i64 + 1
            } else {
                -((j as i64 - 1) * (m as i64 + 1)) - i as i64
            };
            h.insert(EdgeId(j * m + i), value);
        }
    }
    h
}

/// The Dixon-1 partition with all `q_0` edges on top.
pub fn dixon1_partition(m: usize, n: usize) -> Partition {
    Partition {
        upper: (0..m).map(EdgeId).collect(),
        lower: (m..m * n).map(EdgeId).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub upper: Vec<String>,
    pub lower: Vec<String>,
}

/// `{"heights": {"q0-p0": 1, ...}, "partition": {"upper": [...], "lower": [...]}}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightsFile {
    pub heights: IndexMap<String, i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionFile>,
}

impl HeightsFile {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("heights file serializes");
        out.push('\n');
        out
    }
}
