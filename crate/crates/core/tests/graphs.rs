use std::fs;

use place_core::graphfilt::{
    corpus_diagrams, descriptor_degree, extended_pairs, extended_persistence, load_tu_dataset,
    parse_descriptors, Graph, VertexFunction,
};
use proptest::prelude::*;

fn graph() -> impl Strategy<Value = Graph> {
    (1usize..12).prop_flat_map(|n| {
        let all: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .collect();
        let m = all.len();
        prop::collection::vec(any::<bool>(), m).prop_map(move |keep| {
            let edges = all
                .iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(e, _)| *e)
                .collect();
            Graph::new(n, edges).unwrap()
        })
    })
}

fn graph_and_values() -> impl Strategy<Value = (Graph, Vec<f64>)> {
    graph().prop_flat_map(|g| {
        let n = g.n_vertices;
        // integers in a small range so that ties occur
        (
            Just(g),
            prop::collection::vec((0u8..6).prop_map(f64::from), n),
        )
    })
}

/// Components of the subgraph induced by `keep`, by breadth-first search.
fn components(g: &Graph, keep: &[bool]) -> usize {
    let adj = g.adjacency();
    let mut seen = vec![false; g.n_vertices];
    let mut count = 0;
    for s in 0..g.n_vertices {
        if !keep[s] || seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if keep[v] && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn bar_counts_follow_the_graph((g, vals) in graph_and_values()) {
        let f = VertexFunction::new("f", vals).unwrap();
        let p = extended_pairs(&g, &f).unwrap();
        let c = components(&g, &vec![true; g.n_vertices]);
        prop_assert_eq!(g.n_components(), c);
        prop_assert_eq!(p.essential_h0.len(), c);
        prop_assert_eq!(p.ordinary_h0.len(), g.n_vertices - c);
        prop_assert_eq!(p.h1.len(), g.edges.len() + c - g.n_vertices);
    }

    #[test]
    fn bars_reproduce_sublevel_betti_numbers((g, vals) in graph_and_values(), t in 0u8..6) {
        let t = t as f64;
        let f = VertexFunction::new("f", vals.clone()).unwrap();
        let p = extended_pairs(&g, &f).unwrap();
        let keep: Vec<bool> = vals.iter().map(|v| *v <= t).collect();
        let b0 = components(&g, &keep);
        let alive0 = p.ordinary_h0.iter().filter(|(b, d)| *b <= t && t < *d).count()
            + p.essential_h0.iter().filter(|(b, _)| *b <= t).count();
        prop_assert_eq!(alive0, b0);
        let n_t = keep.iter().filter(|k| **k).count();
        let e_t = g.edges.iter().filter(|(u, v)| keep[*u] && keep[*v]).count();
        let b1 = e_t + b0 - n_t;
        prop_assert_eq!(p.h1.iter().filter(|(b, _)| *b <= t).count(), b1);
    }

    #[test]
    fn monotone_relabelling_maps_the_bars((g, vals) in graph_and_values()) {
        let h = |x: f64| x * x + 3.0 * x + 1.0;
        let f = VertexFunction::new("f", vals.clone()).unwrap();
        let fh = VertexFunction::new("h(f)", vals.iter().map(|v| h(*v)).collect()).unwrap();
        let (p, q) = (extended_pairs(&g, &f).unwrap(), extended_pairs(&g, &fh).unwrap());
        let map = |bars: &[(f64, f64)]| {
            let mut v: Vec<(f64, f64)> = bars.iter().map(|(b, d)| (h(*b), h(*d))).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        };
        let sort = |bars: &[(f64, f64)]| {
            let mut v = bars.to_vec();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        };
        prop_assert_eq!(map(&p.ordinary_h0), sort(&q.ordinary_h0));
        prop_assert_eq!(map(&p.essential_h0), sort(&q.essential_h0));
        prop_assert_eq!(map(&p.h1), sort(&q.h1));
    }

    #[test]
    fn vertex_relabelling_leaves_diagrams_unchanged(g in graph(), shift in 0usize..12) {
        let n = g.n_vertices;
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + shift) % n).collect();
        let bijective = { let mut s = perm.clone(); s.sort(); s.dedup(); s.len() == n };
        prop_assume!(bijective);
        let moved = Graph::new(n, g.edges.iter().map(|(u, v)| (perm[*u], perm[*v])).collect()).unwrap();
        let (a0, a1) = extended_persistence(&g, &descriptor_degree(&g)).unwrap();
        let (b0, b1) = extended_persistence(&moved, &descriptor_degree(&moved)).unwrap();
        let key = |d: &place_core::PersistenceDiagram| {
            let mut v: Vec<(f64, f64)> = d.points.iter().map(|p| (p.birth, p.death)).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        };
        prop_assert_eq!(key(&a0), key(&b0));
        prop_assert_eq!(key(&a1), key(&b1));
    }
}

#[test]
fn tu_fixture_loads_and_pools() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    // graph 1: triangle; graph 2: path on 3 vertices; graph 3: single edge
    fs::write(
        p.join("FIX_A.txt"),
        "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n4, 5\n5, 6\n7, 8\n8, 7\n",
    )
    .unwrap();
    fs::write(
        p.join("FIX_graph_indicator.txt"),
        "1\n1\n1\n2\n2\n2\n3\n3\n",
    )
    .unwrap();
    fs::write(p.join("FIX_graph_labels.txt"), "-1\n1\n-1\n").unwrap();
    let data = load_tu_dataset(p).unwrap();
    assert_eq!(data.name, "FIX");
    assert_eq!(data.graphs.len(), 3);
    assert_eq!(data.labels, vec![0, 1, 0]);
    assert_eq!(data.label_values, vec![-1, 1]);
    assert_eq!(data.graphs[0].edges.len(), 3);
    assert_eq!(data.graphs[1].edges.len(), 2);
    assert_eq!(data.graphs[2].n_vertices, 2);

    let diagrams =
        corpus_diagrams(&data.graphs, &parse_descriptors("degree").unwrap(), 50).unwrap();
    // triangle: constant degree 2, every bar degenerate
    assert!(diagrams[0].is_empty());
    // path: degrees 1-2-1, one essential bar (1, 2) and one ordinary bar (1, 2)
    assert_eq!(diagrams[1].len(), 2);
    assert!(diagrams[1]
        .points
        .iter()
        .all(|q| q.birth == 1.0 && q.death == 2.0));
    assert!(diagrams[2].is_empty());

    let capped = corpus_diagrams(&data.graphs, &parse_descriptors("degree").unwrap(), 1).unwrap();
    assert_eq!(capped[1].len(), 1);
}

#[test]
fn tu_loader_reports_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("BAD_A.txt"), "1, x\n").unwrap();
    fs::write(p.join("BAD_graph_indicator.txt"), "1\n1\n").unwrap();
    fs::write(p.join("BAD_graph_labels.txt"), "0\n").unwrap();
    assert!(load_tu_dataset(p).is_err());
    assert!(load_tu_dataset(p.join("missing")).is_err());
}
