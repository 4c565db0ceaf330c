use proptest::prelude::*;
use supermetric::index::is_exclusive;
use supermetric::oracle::exhaustive_range;
use supermetric::planar::{
    fit_line, hilbert_excludes, hyperbolic_excludes, planar_lower_bound, project, project_unchecked, rotate,
};
use supermetric::{Dataset, Exclusion, Index, IndexConfig, Metric, MetricSpace, PlanarPoint, Variant};

fn dataset(dim: usize) -> impl Strategy<Value = Dataset> {
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, dim), 1..120)
        .prop_map(|rows| Dataset::from_rows("p", &rows).unwrap())
}

/// Three side lengths that form a triangle with a positive base.
fn triangle() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.01f64..10.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(delta, u, v)| {
        let d1 = u * 10.0;
        let lo = (d1 - delta).abs();
        let hi = d1 + delta;
        (d1, lo + v * (hi - lo), delta)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_reproduces_pivot_distances((d1, d2, delta) in triangle()) {
        let p = project(d1, d2, delta).unwrap();
        let r1 = (p.x + delta / 2.0).hypot(p.y);
        let r2 = (p.x - delta / 2.0).hypot(p.y);
        let scale = d1.max(d2).max(delta);
        prop_assert!(p.y >= 0.0);
        prop_assert!((r1 - d1).abs() <= 1e-7 * scale, "{} vs {}", r1, d1);
        prop_assert!((r2 - d2).abs() <= 1e-7 * scale, "{} vs {}", r2, d2);
    }

    #[test]
    fn hyperbolic_exclusion_implies_hilbert_up_to_rounding((d1, d2, delta) in triangle(), t in 0.0f64..3.0) {
        let hyp = hyperbolic_excludes(d1, d2, t);
        if hyp.excludes() && (d1 - d2).abs() - 2.0 * t > 1e-9 * d1.max(d2) {
            prop_assert_eq!(hilbert_excludes(d1, d2, delta, t).unwrap(), hyp);
        }
        if is_exclusive(d1, d2, delta, t, Exclusion::Hyperbolic) && (d1 - d2).abs() - 2.0 * t > 1e-9 * d1.max(d2) {
            prop_assert!(is_exclusive(d1, d2, delta, t, Exclusion::Hilbert));
        }
    }

    #[test]
    fn rotation_is_an_isometry(
        pts in prop::collection::vec((-5.0f64..5.0, 0.0f64..5.0), 3..40),
    ) {
        let pts: Vec<PlanarPoint> = pts.into_iter().map(|(x, y)| PlanarPoint::new(x, y)).collect();
        let params = fit_line(&pts).unwrap();
        for w in pts.windows(2) {
            let (ax, ay) = rotate(w[0], &params);
            let (bx, by) = rotate(w[1], &params);
            let before = planar_lower_bound(w[0], w[1]);
            prop_assert!(((ax - bx).hypot(ay - by) - before).abs() <= 1e-9 * (1.0 + before));
        }
    }

    #[test]
    fn planar_distance_bounds_euclidean(data in dataset(5), picks in prop::collection::vec(0usize..1000, 4)) {
        let space = MetricSpace::new(&data, Metric::Euclidean).unwrap();
        let n = data.len();
        let [p1, p2, a, b] = [picks[0] % n, picks[1] % n, picks[2] % n, picks[3] % n].map(|i| i as u32);
        let delta = space.distance(p1, p2);
        prop_assume!(delta > 0.0);
        let pa = project_unchecked(space.distance(a, p1), space.distance(a, p2), delta);
        let pb = project_unchecked(space.distance(b, p1), space.distance(b, p2), delta);
        let d = space.distance(a, b);
        prop_assert!(planar_lower_bound(pa, pb) <= d + 1e-9 * d.max(1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_sets_search_exactly(
        data in dataset(4),
        q in prop::collection::vec(0.0f64..1.0, 4),
        t in 0.0f64..0.8,
        seed in any::<u64>(),
        which in 0usize..19,
    ) {
        let v = Variant::ALL[which];
        let space = MetricSpace::new(&data, Metric::Euclidean).unwrap();
        let idx = Index::build(&space, IndexConfig::new(v, seed)).unwrap();
        let truth = exhaustive_range(&data, &Metric::Euclidean, &q, t).unwrap().result_ids;
        let hyp = idx.range_query(&q, t, Exclusion::Hyperbolic).unwrap();
        let hil = idx.range_query(&q, t, Exclusion::Hilbert).unwrap();
        prop_assert_eq!(&hyp.result_ids, &truth);
        prop_assert_eq!(&hil.result_ids, &truth);
        prop_assert!(hil.distance_count <= hyp.distance_count);
        prop_assert!(idx.verify_structure().is_ok());
    }

    #[test]
    fn divergence_spaces_search_exactly(
        data in dataset(6),
        q in prop::collection::vec(0.01f64..1.0, 6),
        t in 0.0f64..0.5,
        which in 0usize..19,
    ) {
        let v = Variant::ALL[which];
        for metric in [Metric::JensenShannon, Metric::Triangular] {
            prop_assume!(data.rows().all(|r| r.iter().sum::<f64>() > 0.0));
            let space = MetricSpace::new(&data, metric.clone()).unwrap();
            let idx = Index::build(&space, IndexConfig::new(v, 5)).unwrap();
            let truth = exhaustive_range(&data, &metric, &q, t).unwrap().result_ids;
            prop_assert_eq!(idx.range_query(&q, t, Exclusion::Hilbert).unwrap().result_ids, truth);
        }
    }
}
