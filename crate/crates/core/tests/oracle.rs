mod common;

use num_bigint::BigInt;
use num_rational::BigRational;
use percolab::lattice::{build_box, BoxSpec, LatticeGraph};
use percolab::oracle::{
    connectivity_counts, eval_polynomial, eval_polynomial_exact, exact_curve, exact_polynomials,
    PolynomialExport, DEFAULT_ENUMERATION_CAP,
};
use percolab::{Error, Event, EventKind};

fn fixtures() -> Vec<(Vec<i64>, Vec<i64>)> {
    vec![
        (vec![0, 0], vec![1, 1]),
        (vec![0], vec![4]),
        (vec![-1, -1], vec![2, 1]),
        (vec![0, 0], vec![2, 1]),
        (vec![0, 0, 0], vec![1, 1, 1]),
        (vec![-1, -1], vec![1, 1]),
    ]
}

#[test]
fn counts_match_reference_enumeration() {
    for (lo, hi) in fixtures() {
        let g = LatticeGraph::from_bounds(&lo, &hi).unwrap();
        let r = common::RefBox::new(&lo, &hi);
        let d = lo.len();
        let origin = vec![0; d];
        for n in 0..=hi[0] {
            let target = common::axis_point(d, n);
            let u = g.vertex_at(&origin).unwrap();
            let v = g.vertex_at(&target).unwrap();
            for (kind, trunc) in [(EventKind::TwoPoint, false), (EventKind::Truncated, true)] {
                let poly = connectivity_counts(&g, &Event { kind, u, v }, DEFAULT_ENUMERATION_CAP)
                    .unwrap();
                assert_eq!(
                    poly.counts,
                    r.counts(&origin, &target, trunc),
                    "{lo:?} {hi:?} n={n}"
                );
                poly.check_invariants(kind.is_increasing()).unwrap();
            }
        }
    }
}

#[test]
fn seventeen_bond_box_regression() {
    // d = 2, n_max = 1, margin = 1; frozen from a reference enumeration of all
    // 2^17 configurations: exact value 162963657349 / 762939453125.
    let g = build_box(&BoxSpec::new(2, 1, 1)).unwrap();
    assert_eq!(g.bond_count(), 17);
    let curve = exact_curve(
        &g,
        0.2,
        &[0, 1],
        EventKind::TwoPoint,
        DEFAULT_ENUMERATION_CAP,
    )
    .unwrap();
    assert_eq!(curve[0].value, 1.0);
    assert!((curve[1].value - 0.213_599_724_960_481_27).abs() < 1e-14);

    let polys = exact_polynomials(&g, &[1], EventKind::TwoPoint, DEFAULT_ENUMERATION_CAP).unwrap();
    let exact = eval_polynomial_exact(
        &polys[0],
        &BigRational::new(BigInt::from(1), BigInt::from(5)),
    );
    assert_eq!(
        exact,
        BigRational::new(
            BigInt::from(162_963_657_349i64),
            BigInt::from(762_939_453_125i64)
        )
    );
    assert_eq!(
        polys[0].counts,
        vec![
            0, 1, 16, 122, 586, 1980, 4979, 9614, 14487, 17118, 15778, 11178, 5955, 2356, 679, 136,
            17, 1
        ]
    );

    // Truncated proxy: only (0,0) and (1,0) are interior, so the event is
    // "bond between them open, its six neighbours closed": p (1-p)^6.
    let t = exact_curve(&g, 0.2, &[1], EventKind::Truncated, DEFAULT_ENUMERATION_CAP).unwrap();
    assert!((t[0].value - 0.2 * 0.8f64.powi(6)).abs() < 1e-15);
}

#[test]
fn fully_open_is_certain() {
    let g = build_box(&BoxSpec::new(2, 2, 1)).unwrap();
    let curve = exact_curve(&g, 1.0, &[0, 1, 2, 3], EventKind::TwoPoint, 24).unwrap();
    assert!(curve.iter().all(|c| c.value == 1.0));
}

#[test]
fn value_at_zero_is_constant_coefficient() {
    for (lo, hi) in fixtures() {
        let g = LatticeGraph::from_bounds(&lo, &hi).unwrap();
        let polys =
            exact_polynomials(&g, &[0, 1], EventKind::TwoPoint, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(eval_polynomial(&polys[0], 0.0).unwrap(), 1.0);
        assert_eq!(eval_polynomial(&polys[1], 0.0).unwrap(), 0.0);
    }
}

#[test]
fn log_space_evaluation_matches_power_sum() {
    let g = build_box(&BoxSpec::new(2, 2, 1)).unwrap();
    let polys = exact_polynomials(&g, &[1, 2, 3], EventKind::TwoPoint, 24).unwrap();
    for poly in &polys {
        for i in 0..=50 {
            let p = i as f64 / 50.0;
            let a = eval_polynomial(poly, p).unwrap();
            let b = common::poly_value(&poly.counts, p);
            assert!((a - b).abs() < 1e-13, "p={p}: {a} vs {b}");
        }
    }
}

#[test]
fn probability_curve_properties() {
    let grid: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
    for (lo, hi) in fixtures() {
        let g = LatticeGraph::from_bounds(&lo, &hi).unwrap();
        let ns: Vec<u32> = (0..=hi[0] as u32).collect();
        let two = exact_polynomials(&g, &ns, EventKind::TwoPoint, 24).unwrap();
        let trunc = exact_polynomials(&g, &ns, EventKind::Truncated, 24).unwrap();
        for (tp, tr) in two.iter().zip(&trunc) {
            let mut prev = 0.0;
            for &p in &grid {
                let v = eval_polynomial(tp, p).unwrap();
                assert!((0.0..=1.0).contains(&v));
                assert!(v >= prev - 1e-15, "two-point value decreased in p");
                prev = v;
                assert!(eval_polynomial(tr, p).unwrap() <= v + 1e-15);
            }
        }
    }
}

#[test]
fn values_grow_with_margin() {
    // d=2, n_max=1: margin 0 has 1 bond, margin 1 has 17; margin 2 (more than
    // 24 bonds) is out of enumeration reach, so compare strips of increasing width.
    let strips = [
        LatticeGraph::from_bounds(&[0, 0], &[2, 0]).unwrap(),
        LatticeGraph::from_bounds(&[0, 0], &[2, 1]).unwrap(),
        LatticeGraph::from_bounds(&[0, -1], &[2, 1]).unwrap(),
        LatticeGraph::from_bounds(&[-1, -1], &[3, 1]).unwrap(),
    ];
    let polys: Vec<_> = strips
        .iter()
        .map(|g| exact_polynomials(g, &[1, 2], EventKind::TwoPoint, 24).unwrap())
        .collect();
    for i in 0..=20 {
        let p = i as f64 / 20.0;
        for w in polys.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                assert!(eval_polynomial(a, p).unwrap() <= eval_polynomial(b, p).unwrap() + 1e-15);
            }
        }
    }
}

#[test]
fn cap_is_enforced() {
    let g = build_box(&BoxSpec::new(2, 3, 1)).unwrap();
    assert!(g.bond_count() > 24);
    let err = exact_curve(&g, 0.5, &[1], EventKind::TwoPoint, DEFAULT_ENUMERATION_CAP).unwrap_err();
    assert!(matches!(err, Error::EnumerationCap { .. }));
}

#[test]
fn export_shape() {
    let g = LatticeGraph::from_bounds(&[0, 0], &[1, 1]).unwrap();
    let ev = Event::two_point(g.vertex_at(&[0, 0]).unwrap(), g.vertex_at(&[1, 0]).unwrap());
    let poly = connectivity_counts(&g, &ev, 24).unwrap();
    let json = serde_json::to_value(PolynomialExport::new(&g, &ev, &poly)).unwrap();
    assert_eq!(json["M"], 4);
    assert_eq!(json["counts"], serde_json::json!([0, 1, 3, 4, 1]));
    assert_eq!(json["event"], "two_point");
    assert_eq!(json["graph"]["bond_count"], 4);
}
