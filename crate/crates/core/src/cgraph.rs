//! The collision graph: one node per edge of the moving graph and an arc
//! `e -> f` whenever an endpoint of `e` collides with `f`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::collide::{CollisionPair, PairError};
use crate::motion::{EdgeId, Graph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CGraphError {
    #[error("node {0:?} is not part of the collision graph")]
    UnknownNode(EdgeId),
    #[error("self-arc on node {0:?}")]
    SelfArc(EdgeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CollisionGraph {
    nodes: Vec<EdgeId>,
    arcs: BTreeSet<(EdgeId, EdgeId)>,
}

impl CollisionGraph {
    /// Builds the collision graph of `graph` from its collision pairs.
    pub fn build(graph: &Graph, pairs: &[CollisionPair]) -> Result<Self, PairError> {
        let mut arcs = BTreeSet::new();
        for pair in pairs {
            let (v, target) = pair.resolve(graph)?;
            for &source in graph.incident_edges(v) {
                arcs.insert((source, target));
            }
        }
        Ok(CollisionGraph {
            nodes: graph.edges().collect(),
            arcs,
        })
    }

    /// A collision graph given directly by its arcs.
    pub fn from_arcs(
        nodes: impl IntoIterator<Item = EdgeId>,
        arcs: impl IntoIterator<Item = (EdgeId, EdgeId)>,
    ) -> Result<Self, CGraphError> {
        let nodes: BTreeSet<EdgeId> = nodes.into_iter().collect();
        let mut set = BTreeSet::new();
        for (u, v) in arcs {
            if u == v {
                return Err(CGraphError::SelfArc(u));
            }
            for x in [u, v] {
                if !nodes.contains(&x) {
                    return Err(CGraphError::UnknownNode(x));
                }
            }
            set.insert((u, v));
        }
        Ok(CollisionGraph {
            nodes: nodes.into_iter().collect(),
            arcs: set,
        })
    }

    pub fn nodes(&self) -> &[EdgeId] {
        &self.nodes
    }

    pub fn arcs(&self) -> impl Iterator<Item = (EdgeId, EdgeId)> + '_ {
        self.arcs.iter().copied()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn has_arc(&self, from: EdgeId, to: EdgeId) -> bool {
        self.arcs.contains(&(from, to))
    }

    pub fn contains(&self, node: EdgeId) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }

    /// Subgraph induced by `subset`; nodes keep canonical order.
    pub fn induced(&self, subset: &[EdgeId]) -> Result<CollisionGraph, CGraphError> {
        let keep: BTreeSet<EdgeId> = subset.iter().copied().collect();
        if let Some(&bad) = keep.iter().find(|n| !self.contains(**n)) {
            return Err(CGraphError::UnknownNode(bad));
        }
        let arcs = self
            .arcs
            .iter()
            .filter(|(u, v)| keep.contains(u) && keep.contains(v))
            .copied()
            .collect();
        Ok(CollisionGraph {
            nodes: keep.into_iter().collect(),
            arcs,
        })
    }

    pub(crate) fn local(&self) -> Local {
        Local::new(&self.nodes, self.arcs.iter().copied())
    }

    pub fn is_acyclic(&self) -> bool {
        self.find_cycle().is_none()
    }

    /// A directed cycle `[n0, n1, …, nk]` with arcs `n0 -> n1 -> … -> nk -> n0`,
    /// or `None` if the graph is acyclic. Two-cycles count.
    pub fn find_cycle(&self) -> Option<Vec<EdgeId>> {
        let local = self.local();
        local
            .find_cycle()
            .map(|c| c.into_iter().map(|i| self.nodes[i]).collect())
    }

    pub fn in_degree(&self, node: EdgeId) -> usize {
        self.arcs.iter().filter(|(_, v)| *v == node).count()
    }

    /// Nodes on at least one two-cycle, with one undirected edge per two-cycle.
    pub fn multi_edged_subgraph(&self) -> MultiEdgedSubgraph {
        let edges: Vec<(EdgeId, EdgeId)> = self
            .arcs
            .iter()
            .filter(|(u, v)| u < v && self.arcs.contains(&(*v, *u)))
            .copied()
            .collect();
        let nodes: BTreeSet<EdgeId> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
        MultiEdgedSubgraph {
            nodes: nodes.into_iter().collect(),
            edges,
        }
    }

    /// Graphviz rendering. Arcs become directed edges; two-cycles are drawn
    /// once more as a red undirected overlay.
    pub fn to_dot(&self, graph: &Graph) -> String {
        let name = |e: EdgeId| escape(&graph.edge_name(e));
        let mut out = String::from("digraph C {\n");
        for &n in &self.nodes {
            let _ = writeln!(out, "  \"{}\";", name(n));
        }
        for &(u, v) in &self.arcs {
            let _ = writeln!(out, "  \"{}\" -> \"{}\";", name(u), name(v));
        }
        for (u, v) in self.multi_edged_subgraph().edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [dir=none, color=red];",
                name(u),
                name(v)
            );
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Dense-index view of a node list plus arcs, used by the searches.
#[derive(Debug, Clone)]
pub(crate) struct Local {
    pub out: Vec<Vec<usize>>,
}

impl Local {
    pub fn new(nodes: &[EdgeId], arcs: impl Iterator<Item = (EdgeId, EdgeId)>) -> Self {
        let index: BTreeMap<EdgeId, usize> =
            nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut out = vec![Vec::new(); nodes.len()];
        for (u, v) in arcs {
            out[index[&u]].push(index[&v]);
        }
        for list in &mut out {
            list.sort_unstable();
        }
        Local { out }
    }

    pub fn find_cycle(&self) -> Option<Vec<usize>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Open,
            Done,
        }
        let n = self.out.len();
        let mut mark = vec![Mark::New; n];
        for root in 0..n {
            if mark[root] != Mark::New {
                continue;
            }
            // (node, next neighbour position)
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            mark[root] = Mark::Open;
            while let Some(&mut (node, ref mut pos)) = stack.last_mut() {
                if let Some(&next) = self.out[node].get(*pos) {
                    *pos += 1;
                    match mark[next] {
                        Mark::New => {
                            mark[next] = Mark::Open;
                            stack.push((next, 0));
                        }
                        Mark::Open => {
                            let start = stack.iter().position(|&(x, _)| x == next).unwrap();
                            return Some(stack[start..].iter().map(|&(x, _)| x).collect());
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[node] = Mark::Done;
                    stack.pop();
                }
            }
        }
        None
    }
}

/// Undirected graph on the nodes of the collision graph that lie on a
/// two-cycle, with one edge per two-cycle.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultiEdgedSubgraph {
    pub nodes: Vec<EdgeId>,
    /// `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(EdgeId, EdgeId)>,
}

/// Two-colouring of one connected component. `colors[i]` belongs to `nodes[i]`;
/// the lowest node always gets colour 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    pub nodes: Vec<EdgeId>,
    pub colors: Vec<u8>,
}

impl Coloring {
    pub fn side(&self, color: u8) -> Vec<EdgeId> {
        self.nodes
            .iter()
            .zip(&self.colors)
            .filter(|(_, c)| **c == color)
            .map(|(n, _)| *n)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bipartiteness {
    /// One colouring per connected component, ordered by lowest node.
    Bipartite(Vec<Coloring>),
    NotBipartite {
        /// The component that cannot be two-coloured.
        component: Vec<EdgeId>,
        /// An odd cycle inside it.
        odd_cycle: Vec<EdgeId>,
    },
}

impl Bipartiteness {
    pub fn is_bipartite(&self) -> bool {
        matches!(self, Bipartiteness::Bipartite(_))
    }
}

impl MultiEdgedSubgraph {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_bipartite(&self) -> Bipartiteness {
        let n = self.nodes.len();
        let index: BTreeMap<EdgeId, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &x)| (x, i))
            .collect();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &self.edges {
            adj[index[&u]].push(index[&v]);
            adj[index[&v]].push(index[&u]);
        }
        for list in &mut adj {
            list.sort_unstable();
        }

        let mut color: Vec<Option<u8>> = vec![None; n];
        let mut parent: Vec<Option<usize>> = vec![None; n];
        let mut components = Vec::new();
        for root in 0..n {
            if color[root].is_some() {
                continue;
            }
            color[root] = Some(0);
            let mut members = vec![root];
            let mut queue = VecDeque::from([root]);
            let mut conflict = None;
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    match color[y] {
                        None => {
                            color[y] = Some(1 - color[x].unwrap());
                            parent[y] = Some(x);
                            members.push(y);
                            queue.push_back(y);
                        }
                        Some(c) if c == color[x].unwrap() && conflict.is_none() => {
                            conflict = Some((x, y));
                        }
                        _ => {}
                    }
                }
            }
            members.sort_unstable();
            if let Some((x, y)) = conflict {
                return Bipartiteness::NotBipartite {
                    component: members.iter().map(|&i| self.nodes[i]).collect(),
                    odd_cycle: odd_cycle(&parent, x, y)
                        .into_iter()
                        .map(|i| self.nodes[i])
                        .collect(),
                };
            }
            components.push(Coloring {
                nodes: members.iter().map(|&i| self.nodes[i]).collect(),
                colors: members.iter().map(|&i| color[i].unwrap()).collect(),
            });
        }
        Bipartiteness::Bipartite(components)
    }
}

// x and y are BFS-tree nodes of equal depth parity joined by an edge; the
// tree paths to their lowest common ancestor plus that edge form an odd cycle.
fn odd_cycle(parent: &[Option<usize>], x: usize, y: usize) -> Vec<usize> {
    let path = |mut n: usize| {
        let mut p = vec![n];
        while let Some(up) = parent[n] {
            p.push(up);
            n = up;
        }
        p
    };
    let (px, py) = (path(x), path(y));
    let lca = *px.iter().find(|n| py.contains(n)).expect("same BFS tree");
    let mut cycle: Vec<usize> = px.iter().copied().take_while(|&n| n != lca).collect();
    cycle.push(lca);
    let back: Vec<usize> = py.iter().copied().take_while(|&n| n != lca).collect();
    cycle.extend(back.into_iter().rev());
    cycle
}
