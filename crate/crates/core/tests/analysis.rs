use percolab::analysis::{
    check_bounds, check_monotone, fit_oz, lemma2_bounds, lemma4_bounds, lemma4_exponent,
    lemma6_bounds, ratio_diagnostic, scan_monotonicity, BoundKind, BoundParams, BoundVerdict,
    Lambda, MonoVerdict, OzForm, RatioVerdict, ScanOptions,
};
use percolab::estimators::{CurvePoint, PairedCurve};
use percolab::lattice::LatticeGraph;
use percolab::oracle::exact_curve;
use percolab::{Error, EventKind};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn points(f: impl Fn(f64) -> f64, ns: impl Iterator<Item = u32>, noise: f64) -> Vec<CurvePoint> {
    ns.map(|n| {
        let v = f(f64::from(n));
        CurvePoint {
            n,
            value: v,
            stderr: noise * v,
        }
    })
    .collect()
}

#[test]
fn lemma2_frozen_values() {
    let params = BoundParams {
        c1: 2.0,
        c2: 1.0,
        c: 8.0,
    };
    let (lo, hi) = lemma2_bounds(0.1, 3, &params).unwrap();
    // 0.001 * 0.9^6 and 0.001 * 1.1^1.5
    assert!(rel(lo, 5.31441e-4) < 1e-12);
    assert!(rel(hi, 1.153_689_732_987e-3) < 1e-12);
}

#[test]
fn lemma4_frozen_values() {
    let params = BoundParams {
        c1: 1.0,
        c2: 1.0,
        c: 8.0,
    };
    assert_eq!(lemma4_exponent(1, 3), 10.0);
    let (lo, _) = lemma4_bounds(0.9, 1, 3, &params).unwrap();
    // (0.9 * 0.1)^10
    assert!(rel(lo, 3.486_784_401e-11) < 1e-12);
    assert!(matches!(
        lemma4_bounds(0.9, 1, 2, &params),
        Err(Error::Scope(_))
    ));
    let zero_c = BoundParams { c: 0.0, ..params };
    let (_, hi) = lemma4_bounds(0.9, 1, 3, &zero_c).unwrap();
    assert!(rel(hi, 2.0 * (1.0f64 / 9.0).powi(10)) < 1e-12);
}

#[test]
fn lemma6_values() {
    let b = lemma6_bounds(0.99, 1).unwrap();
    // lambda = 1/99: lambda^4 p^2
    assert!(rel(b.lower, 1.020_304_05e-8) < 1e-6);
    assert!(b.upper.is_some());
    // 64 lambda >= 1 leaves the upper side undefined
    assert!(lemma6_bounds(0.9, 1).unwrap().upper.is_none());
}

proptest! {
    #[test]
    fn bounds_are_ordered(p in 1e-4f64..0.9999, n in 0u32..40, c1 in 0.1f64..10.0, c2 in 0.1f64..10.0, c in 0.0f64..20.0, d in 3usize..6) {
        let params = BoundParams { c1, c2, c };
        let (lo, hi) = lemma2_bounds(p, n, &params).unwrap();
        prop_assert!(lo <= hi);
        let (lo, hi) = lemma4_bounds(p, n, d, &params).unwrap();
        prop_assert!(lo <= hi);
        let b = lemma6_bounds(p, n).unwrap();
        if let Some(u) = b.upper {
            prop_assert!(b.lower <= u);
        }
    }

    #[test]
    fn lambda_odds_identity(p in 1e-6f64..0.999999) {
        let l = Lambda::from_p(p).unwrap();
        prop_assert!((l.odds_weight() - p * (1.0 - p)).abs() < 1e-12);
        prop_assert!((1.0 / (1.0 + l.value()) - p).abs() < 1e-12);
    }
}

#[test]
fn lambda_on_rationals() {
    for (num, den) in [(1u32, 2u32), (1, 3), (2, 5), (7, 8), (99, 100)] {
        let p = f64::from(num) / f64::from(den);
        let l = Lambda::from_p(p).unwrap();
        assert!((l.value() - f64::from(den - num) / f64::from(num)).abs() < 1e-12);
    }
}

#[test]
fn path_sits_inside_lemma2() {
    // tau(n) = p^n on a path: equal to the bare power, inside any C1, C2 > 0.
    let g = LatticeGraph::from_bounds(&[0], &[8]).unwrap();
    let pts: Vec<CurvePoint> = exact_curve(
        &g,
        0.05,
        &(0..=8).collect::<Vec<_>>(),
        EventKind::TwoPoint,
        24,
    )
    .unwrap()
    .iter()
    .map(|e| CurvePoint {
        n: e.n,
        value: e.value,
        stderr: 0.0,
    })
    .collect();
    let r = check_bounds(
        &pts,
        0.05,
        1,
        BoundKind::Lemma2,
        &BoundParams::defaults_for(1),
        3.0,
    )
    .unwrap();
    assert!(r.all_inside(), "{r:?}");
    assert_eq!(r.summary.inside, 9);
}

#[test]
fn bound_verdicts() {
    let params = BoundParams {
        c1: 2.0,
        c2: 2.0,
        c: 8.0,
    };
    let p = 0.1;
    let (lo, hi) = lemma2_bounds(p, 2, &params).unwrap();
    let at = |value, stderr| CurvePoint {
        n: 2,
        value,
        stderr,
    };
    let verdict = |c: CurvePoint| {
        check_bounds(&[c], p, 2, BoundKind::Lemma2, &params, 3.0)
            .unwrap()
            .entries[0]
            .verdict
    };
    assert_eq!(verdict(at(0.5 * lo, 0.0)), BoundVerdict::BelowLower);
    assert_eq!(verdict(at(2.0 * hi, 0.0)), BoundVerdict::AboveUpper);
    assert_eq!(verdict(at(0.5 * (lo + hi), 0.0)), BoundVerdict::Inside);
    assert_eq!(verdict(at(lo, lo)), BoundVerdict::Inconclusive);
    assert!(matches!(
        check_bounds(&[at(0.1, 0.0)], 0.9, 2, BoundKind::Lemma4, &params, 3.0),
        Err(Error::Scope(_))
    ));
    assert!(matches!(
        check_bounds(&[at(0.1, 0.0)], 0.99, 3, BoundKind::Lemma6, &params, 3.0),
        Err(Error::Scope(_))
    ));
}

#[test]
fn oz_fits_recover_parameters() {
    let d2 = points(|n| 5.0 * (-n / 4.0).exp() / n.sqrt(), 1..=20, 0.0);
    let f = fit_oz(&d2, 2, OzForm::Lemma1, None).unwrap();
    assert!(rel(f.xi, 4.0) < 1e-6 && rel(f.amplitude, 5.0) < 1e-6);
    assert_eq!(f.nu, 0.5);
    assert!(!f.diagnostics.trend_flagged);

    let planar = points(|n| 0.3 * (-n / 1.5).exp() / (n * n), 1..=15, 0.0);
    let f = fit_oz(&planar, 2, OzForm::Lemma5, None).unwrap();
    assert!(rel(f.xi, 1.5) < 1e-6 && rel(f.amplitude, 0.3) < 1e-6);

    // the wrong power leaves a structured residual
    let wrong = fit_oz(&planar, 2, OzForm::Lemma1, None).unwrap();
    assert!(wrong.diagnostics.trend_flagged);
}

#[test]
fn oz_scope_and_size() {
    let pts = points(|n| (-n).exp(), 1..=10, 0.0);
    assert!(matches!(
        fit_oz(&pts, 2, OzForm::Lemma3, None),
        Err(Error::Scope(_))
    ));
    assert!(matches!(
        fit_oz(&pts, 3, OzForm::Lemma5, None),
        Err(Error::Scope(_))
    ));
    assert!(fit_oz(&pts, 3, OzForm::Lemma3, None).is_ok());
    assert!(matches!(
        fit_oz(&pts, 2, OzForm::Lemma1, Some((1, 3))),
        Err(Error::InsufficientPoints { need: 4, got: 3 })
    ));
}

#[test]
fn ratio_on_pure_power() {
    let p: f64 = 0.3;
    let curve =
        PairedCurve::from_points(0.3, EventKind::TwoPoint, &points(|n| p.powf(n), 1..=8, 0.0));
    let r = ratio_diagnostic(&curve, -1.0 / p.ln(), 1, 3.0).unwrap();
    for e in &r.entries {
        assert!(rel(e.ratio, 1.0 / p) < 1e-12);
        assert_eq!(e.verdict, RatioVerdict::ExceedsOne);
        assert!(e.residual.unwrap().abs() < 1e-12);
    }
    assert!(r.all_exceed_one);
}

#[test]
fn ratio_follows_oz_prediction() {
    let xi = 2.0;
    let pts = points(|n| 0.8 * (-n / xi).exp() / n.sqrt(), 1..=10, 0.0);
    let curve = PairedCurve::from_points(0.2, EventKind::TwoPoint, &pts);
    let r = ratio_diagnostic(&curve, xi, 2, 3.0).unwrap();
    for e in &r.entries {
        let want = (f64::from(e.n + 1) / f64::from(e.n)).sqrt() * (0.5f64).exp();
        assert!(rel(e.ratio, want) < 1e-12);
    }
    assert!(r.residuals_shrinking);
}

#[test]
fn ratio_flags_injected_violation() {
    let mut pts = points(|n| 0.5f64.powf(n), 1..=8, 0.001);
    pts[5].value = pts[4].value * 1.2;
    let curve = PairedCurve::from_points(0.5, EventKind::TwoPoint, &pts);
    let r = ratio_diagnostic(&curve, 1.0 / 2f64.ln(), 1, 3.0).unwrap();
    assert_eq!(r.violations, vec![5]);
    assert!(!r.all_exceed_one);

    let mut zero = points(|n| 0.5f64.powf(n), 1..=4, 0.0);
    zero[2].value = 0.0;
    let curve = PairedCurve::from_points(0.5, EventKind::TwoPoint, &zero);
    assert_eq!(
        ratio_diagnostic(&curve, 1.0, 1, 3.0).unwrap_err(),
        Error::ZeroMean(3)
    );
}

#[test]
fn monotone_verdicts() {
    let dec = PairedCurve::from_points(
        0.3,
        EventKind::TwoPoint,
        &points(|n| 0.3f64.powf(n), 1..=5, 0.01),
    );
    assert_eq!(
        check_monotone(&dec, 3.0).overall,
        MonoVerdict::DecreasingConfirmed
    );

    let mut pts = points(|n| 0.3f64.powf(n), 1..=5, 0.01);
    pts[3].value = pts[2].value * 1.5;
    let bad = PairedCurve::from_points(0.3, EventKind::TwoPoint, &pts);
    let r = check_monotone(&bad, 3.0);
    assert_eq!(r.overall, MonoVerdict::ViolationConfirmed);
    assert_eq!(r.entries[2].verdict, MonoVerdict::ViolationConfirmed);

    let flat = PairedCurve::from_points(0.3, EventKind::TwoPoint, &points(|_| 0.1, 1..=5, 0.01));
    assert_eq!(
        check_monotone(&flat, 3.0).overall,
        MonoVerdict::Inconclusive
    );
}

#[test]
fn monotone_is_scale_invariant() {
    let base = points(
        |n| 0.4f64.powf(n) * (1.0 + 0.05 * (n * 1.7).sin()),
        1..=8,
        0.03,
    );
    let a = check_monotone(
        &PairedCurve::from_points(0.4, EventKind::TwoPoint, &base),
        3.0,
    );
    for scale in [1e-9, 0.5, 37.0] {
        let scaled: Vec<CurvePoint> = base
            .iter()
            .map(|c| CurvePoint {
                n: c.n,
                value: c.value * scale,
                stderr: c.stderr * scale,
            })
            .collect();
        let b = check_monotone(
            &PairedCurve::from_points(0.4, EventKind::TwoPoint, &scaled),
            3.0,
        );
        let va: Vec<_> = a.entries.iter().map(|e| e.verdict).collect();
        let vb: Vec<_> = b.entries.iter().map(|e| e.verdict).collect();
        assert_eq!(va, vb);
        assert_eq!(a.overall, b.overall);
    }
}

#[test]
fn scan_on_a_path_confirms_the_whole_grid() {
    let g = LatticeGraph::from_bounds(&[0], &[6]).unwrap();
    let grid = vec![0.2, 0.4, 0.6, 0.8];
    let opts = ScanOptions::new(EventKind::TwoPoint, grid, (0..=4).collect(), 20_000, 1);
    let scan = scan_monotonicity(&g, &opts).unwrap();
    assert_eq!(scan.empirical_threshold, Some(0.8));
    assert!(scan
        .reports
        .iter()
        .all(|r| r.overall == MonoVerdict::DecreasingConfirmed));
    assert_eq!(scan, scan_monotonicity(&g, &opts).unwrap());
}

#[test]
fn scan_rejects_bad_grid() {
    let g = LatticeGraph::from_bounds(&[0], &[3]).unwrap();
    for grid in [vec![], vec![0.5, 0.4], vec![0.5, 1.5]] {
        let opts = ScanOptions::new(EventKind::TwoPoint, grid, vec![1, 2], 100, 1);
        assert!(scan_monotonicity(&g, &opts).is_err());
    }
}
