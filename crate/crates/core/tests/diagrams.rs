use place_core::diagram::{bottleneck, bottleneck_single, d_inf, filter_top_n};
use place_core::{DiagramPoint, PersistenceDiagram, Site};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = (f64, f64)> {
    (0.0..10.0f64, 0.01..5.0f64).prop_map(|(b, p)| (b, b + p))
}

fn diagram(max: usize) -> impl Strategy<Value = PersistenceDiagram> {
    prop::collection::vec(point(), 0..=max)
        .prop_map(|v| PersistenceDiagram::from_pairs(&v).unwrap())
}

/// Every assignment of `a`'s points to a distinct partner in `b` or to the
/// diagonal; leftovers in `b` go to the diagonal.
fn brute(a: &[DiagramPoint], b: &[DiagramPoint]) -> f64 {
    fn go(i: usize, a: &[DiagramPoint], b: &[DiagramPoint], used: &mut [bool], cur: f64) -> f64 {
        if i == a.len() {
            let rest = b
                .iter()
                .zip(used.iter())
                .filter(|(_, u)| !**u)
                .map(|(q, _)| q.diag_cost())
                .fold(0.0, f64::max);
            return cur.max(rest);
        }
        let mut best = go(i + 1, a, b, used, cur.max(a[i].diag_cost()));
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(go(i + 1, a, b, used, cur.max(d_inf(&a[i], &b[j]))));
                used[j] = false;
            }
        }
        best
    }
    go(0, a, b, &mut vec![false; b.len()], 0.0)
}

/// Top-n by repeated selection of the best remaining point.
fn top_n_oracle(points: &[DiagramPoint], n: usize) -> Vec<DiagramPoint> {
    let mut left = points.to_vec();
    let mut out = Vec::new();
    while out.len() < n && !left.is_empty() {
        let mut best = 0;
        for i in 1..left.len() {
            let (p, q) = (&left[i], &left[best]);
            let better = p.persistence() > q.persistence()
                || (p.persistence() == q.persistence() && (p.birth, p.death) < (q.birth, q.death));
            if better {
                best = i;
            }
        }
        out.push(left.swap_remove(best));
    }
    out
}

fn sorted(mut v: Vec<DiagramPoint>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| (a.birth, a.death).partial_cmp(&(b.birth, b.death)).unwrap());
    v.into_iter().map(|p| (p.birth, p.death)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn bottleneck_matches_exhaustive_matching(a in diagram(5), b in diagram(5)) {
        let got = bottleneck(&a, &b);
        let want = brute(&a.points, &b.points);
        prop_assert!((got - want).abs() < 1e-12, "{} vs {}", got, want);
    }

    #[test]
    fn bottleneck_is_a_metric(a in diagram(7), b in diagram(7), c in diagram(7)) {
        prop_assert_eq!(bottleneck(&a, &a), 0.0);
        prop_assert_eq!(bottleneck(&a, &b), bottleneck(&b, &a));
        prop_assert!(bottleneck(&a, &c) <= bottleneck(&a, &b) + bottleneck(&b, &c) + 1e-12);
        prop_assert!(bottleneck(&a, &b) >= 0.0);
    }

    #[test]
    fn bottleneck_value_is_a_candidate(a in diagram(6), b in diagram(6)) {
        let d = bottleneck(&a, &b);
        let mut cands: Vec<f64> = a.points.iter().chain(&b.points).map(DiagramPoint::diag_cost).collect();
        cands.push(0.0);
        for p in &a.points {
            for q in &b.points {
                cands.push(d_inf(p, q));
            }
        }
        prop_assert!(cands.contains(&d));
    }

    #[test]
    fn singletons_reduce_to_single_point_formula(p in point(), q in point()) {
        let (p, q) = (DiagramPoint::new(p.0, p.1).unwrap(), DiagramPoint::new(q.0, q.1).unwrap());
        let a = PersistenceDiagram::new(vec![p]);
        let b = PersistenceDiagram::new(vec![q]);
        prop_assert_eq!(bottleneck(&a, &b), bottleneck_single(Site::Point(p), Site::Point(q)));
        prop_assert_eq!(bottleneck(&a, &PersistenceDiagram::default()), bottleneck_single(Site::Point(p), Site::Diagonal));
    }

    #[test]
    fn top_n_matches_selection_oracle(pairs in prop::collection::vec((0u8..6, 1u8..5), 0..40), n in 1usize..30) {
        // small integer grid so that persistence ties are common
        let pairs: Vec<(f64, f64)> = pairs.into_iter().map(|(b, p)| (b as f64, (b + p) as f64)).collect();
        let d = PersistenceDiagram::from_pairs(&pairs).unwrap();
        let got = filter_top_n(&d, n).unwrap();
        prop_assert_eq!(got.len(), pairs.len().min(n));
        prop_assert_eq!(sorted(got.points), sorted(top_n_oracle(&d.points, n)));
    }

    #[test]
    fn truncation_moves_at_most_the_largest_dropped_half_persistence(a in diagram(12), n in 1usize..12) {
        let t = filter_top_n(&a, n).unwrap();
        let dropped = a.len().saturating_sub(n);
        let bound = if dropped == 0 {
            0.0
        } else {
            let mut h: Vec<f64> = a.points.iter().map(DiagramPoint::diag_cost).collect();
            h.sort_by(|x, y| y.total_cmp(x));
            h[n]
        };
        prop_assert!(bottleneck(&a, &t) <= bound + 1e-12);
    }
}

#[test]
fn diagonal_points_are_free() {
    let a = PersistenceDiagram::from_pairs(&[(1.0, 4.0)]).unwrap();
    let mut b = a.clone();
    b.points.push(DiagramPoint::new(2.0, 2.0 + 1e-9).unwrap());
    assert!(bottleneck(&a, &b) <= 1e-9);
}
