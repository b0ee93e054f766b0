//! Graph and planning invariants checked against brute-force oracles.

use std::collections::BTreeSet;

use lmodel::plan::{
    assign_heights, decide_partition, exists_arrangement, heights_down, heights_up, split_layers,
    verify_collision_free, PartitionDecision,
};
use lmodel::{CollisionGraph, CollisionPair, EdgeId, Existence, Graph, HeightAssignment};
use proptest::prelude::*;

const LABELS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn digraph() -> impl Strategy<Value = CollisionGraph> {
    (1usize..=7).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..=n * 2).prop_map(move |raw| {
            let arcs = raw
                .into_iter()
                .filter(|(u, v)| u != v)
                .map(|(u, v)| (EdgeId(u), EdgeId(v)));
            CollisionGraph::from_arcs((0..n).map(EdgeId).collect::<Vec<_>>(), arcs).unwrap()
        })
    })
}

/// A small graph (at most 8 edges) with an arbitrary set of valid pairs.
fn instance() -> impl Strategy<Value = (Graph, Vec<CollisionPair>)> {
    (3usize..=6).prop_flat_map(|nv| {
        let raw_edges = prop::collection::vec((0..nv, 0..nv), 1..=10);
        let raw_pairs = prop::collection::vec((0..nv, 0usize..8), 0..=12);
        (raw_edges, raw_pairs).prop_filter_map("needs an edge", move |(raw_edges, raw_pairs)| {
            let mut edges: Vec<(usize, usize)> = Vec::new();
            for (u, v) in raw_edges {
                let key = (u.min(v), u.max(v));
                if u != v && edges.len() < 8 && !edges.contains(&key) {
                    edges.push(key);
                }
            }
            if edges.is_empty() {
                return None;
            }
            let named: Vec<(&str, &str)> =
                edges.iter().map(|&(u, v)| (LABELS[u], LABELS[v])).collect();
            let graph = Graph::new(&LABELS[..nv], &named).unwrap();
            let pairs: BTreeSet<(usize, usize)> = raw_pairs
                .into_iter()
                .map(|(v, e)| (v, e % edges.len()))
                .filter(|&(v, e)| v != edges[e].0 && v != edges[e].1)
                .collect();
            let pairs = pairs
                .into_iter()
                .map(|(v, e)| CollisionPair::new(LABELS[v], LABELS[edges[e].0], LABELS[edges[e].1]))
                .collect();
            Some((graph, pairs))
        })
    })
}

fn reachability(c: &CollisionGraph) -> Vec<Vec<bool>> {
    let n = c.nodes().len();
    let mut r = vec![vec![false; n]; n];
    for (u, v) in c.arcs() {
        r[u.0][v.0] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                r[i][j] |= r[i][k] && r[k][j];
            }
        }
    }
    r
}

fn acyclic_by_closure(c: &CollisionGraph) -> bool {
    let r = reachability(c);
    (0..r.len()).all(|i| !r[i][i])
}

/// Direct check of the closed-interval rule, independent of the library's verifier.
fn collision_free(graph: &Graph, pairs: &[CollisionPair], h: &[i64]) -> bool {
    pairs.iter().all(|p| {
        let v = graph.vertex_id(&p.vertex).unwrap();
        let e = graph.edge_id(&p.edge[0], &p.edge[1]).unwrap();
        let at_v: Vec<i64> = graph.incident_edges(v).iter().map(|f| h[f.0]).collect();
        match (at_v.iter().min(), at_v.iter().max()) {
            (Some(&lo), Some(&hi)) => h[e.0] < lo || h[e.0] > hi,
            _ => true,
        }
    })
}

fn any_permutation_works(graph: &Graph, pairs: &[CollisionPair]) -> bool {
    let n = graph.edge_count();
    let mut h: Vec<i64> = (0..n as i64).collect();
    // Heap's algorithm over all orderings.
    let mut c = vec![0usize; n];
    if collision_free(graph, pairs, &h) {
        return true;
    }
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                h.swap(0, i);
            } else {
                h.swap(c[i], i);
            }
            if collision_free(graph, pairs, &h) {
                return true;
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    false
}

fn as_vec(graph: &Graph, h: &HeightAssignment) -> Vec<i64> {
    graph.edges().map(|e| h.get(e).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn acyclicity_matches_transitive_closure(c in digraph()) {
        prop_assert_eq!(c.is_acyclic(), acyclic_by_closure(&c));
    }

    #[test]
    fn found_cycles_are_real(c in digraph()) {
        if let Some(cycle) = c.find_cycle() {
            prop_assert!(!cycle.is_empty());
            prop_assert_eq!(cycle.iter().collect::<BTreeSet<_>>().len(), cycle.len());
            for k in 0..cycle.len() {
                prop_assert!(c.has_arc(cycle[k], cycle[(k + 1) % cycle.len()]));
            }
        }
    }

    #[test]
    fn multi_edges_are_exactly_two_cycles(c in digraph()) {
        let u = c.multi_edged_subgraph();
        for &a in c.nodes() {
            for &b in c.nodes() {
                if a < b {
                    let cyclic = !c.induced(&[a, b]).unwrap().is_acyclic();
                    prop_assert_eq!(u.edges.contains(&(a, b)), cyclic);
                }
            }
        }
        let touched: BTreeSet<EdgeId> = u.edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        prop_assert_eq!(touched, u.nodes.iter().copied().collect::<BTreeSet<_>>());
    }

    #[test]
    fn layering_respects_arcs(c in digraph()) {
        match (heights_up(&c), heights_down(&c)) {
            (Ok(up), Ok(down)) => {
                prop_assert!(c.is_acyclic());
                let n = c.nodes().len() as i64;
                let ups: BTreeSet<i64> = up.iter().map(|(_, h)| h).collect();
                prop_assert_eq!(ups, (1..=n).collect::<BTreeSet<_>>());
                let downs: BTreeSet<i64> = down.iter().map(|(_, h)| h).collect();
                prop_assert_eq!(downs, (1 - n..=0).collect::<BTreeSet<_>>());
                for (a, b) in c.arcs() {
                    prop_assert!(up.get(a) < up.get(b));
                    prop_assert!(down.get(a) > down.get(b));
                }
            }
            (Err(_), Err(_)) => prop_assert!(!c.is_acyclic()),
            _ => prop_assert!(false, "up and down layering disagree"),
        }
    }

    #[test]
    fn partition_decision_matches_exhaustive_split(c in digraph()) {
        let n = c.nodes().len();
        let splittable = (0u32..1 << n).any(|mask| {
            let (upper, lower): (Vec<EdgeId>, Vec<EdgeId>) =
                c.nodes().iter().partition(|e| mask & (1 << e.0) != 0);
            c.induced(&upper).unwrap().is_acyclic() && c.induced(&lower).unwrap().is_acyclic()
        });
        match decide_partition(&c).unwrap() {
            PartitionDecision::Found(p) => {
                prop_assert!(splittable);
                prop_assert!(c.induced(&p.upper).unwrap().is_acyclic());
                prop_assert!(c.induced(&p.lower).unwrap().is_acyclic());
                prop_assert_eq!(p.upper.len() + p.lower.len(), n);
            }
            PartitionDecision::NotBipartite { odd_cycle, .. } => {
                prop_assert!(!splittable);
                prop_assert_eq!(odd_cycle.len() % 2, 1);
            }
            PartitionDecision::Exhausted => prop_assert!(!splittable),
        }
    }

    #[test]
    fn existence_matches_permutation_search((graph, pairs) in instance()) {
        let brute = any_permutation_works(&graph, &pairs);
        match exists_arrangement(&graph, &pairs).unwrap() {
            Existence::Yes(h) => {
                prop_assert!(brute);
                prop_assert!(h.is_injective());
                prop_assert!(collision_free(&graph, &pairs, &as_vec(&graph, &h)));
            }
            Existence::No => prop_assert!(!brute),
        }
    }

    #[test]
    fn partition_pipeline_is_sound((graph, pairs) in instance()) {
        let c = CollisionGraph::build(&graph, &pairs).unwrap();
        if let PartitionDecision::Found(p) = decide_partition(&c).unwrap() {
            let h = assign_heights(&graph, &pairs, &p).unwrap();
            let report = verify_collision_free(&graph, &pairs, &h).unwrap();
            prop_assert!(report.collision_free, "{:?}", report.violations);
            prop_assert!(collision_free(&graph, &pairs, &as_vec(&graph, &h)));
            prop_assert!(exists_arrangement(&graph, &pairs).unwrap().is_yes());
        }
    }

    #[test]
    fn verifier_matches_direct_check(
        (graph, pairs) in instance(),
        raw in prop::collection::vec(-3i64..=3, 8),
    ) {
        let h: HeightAssignment = graph.edges().map(|e| (e, raw[e.0])).collect();
        let report = verify_collision_free(&graph, &pairs, &h).unwrap();
        prop_assert_eq!(report.collision_free, collision_free(&graph, &pairs, &raw[..graph.edge_count()]));
        for v in &report.violations {
            prop_assert!(v.range[0] <= v.height && v.height <= v.range[1]);
        }
    }

    #[test]
    fn split_layers_keeps_order_and_verdict(
        (graph, pairs) in instance(),
        raw in prop::collection::vec(-3i64..=3, 8),
    ) {
        let h: HeightAssignment = graph.edges().map(|e| (e, raw[e.0])).collect();
        let free = verify_collision_free(&graph, &pairs, &h).unwrap().collision_free;
        match split_layers(&graph, &pairs, &h) {
            Ok(split) => {
                prop_assert!(free);
                prop_assert!(split.is_injective());
                prop_assert!(verify_collision_free(&graph, &pairs, &split).unwrap().collision_free);
                for a in graph.edges() {
                    for b in graph.edges() {
                        if h.get(a) < h.get(b) {
                            prop_assert!(split.get(a) < split.get(b));
                        }
                    }
                }
            }
            Err(_) => prop_assert!(!free),
        }
    }
}
