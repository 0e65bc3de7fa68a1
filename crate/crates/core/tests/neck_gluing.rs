use neckforge::line::{apply_multiplier, LineFunction};
use neckforge::neck::*;
use neckforge::symbol::{theta, ModeSpec};
use num_complex::Complex64;

const SWEEP: [f64; 5] = [1e-1, 5e-2, 2.5e-2, 1.25e-2, 6.25e-3];

#[test]
fn glued_factor_shape() {
    let cfg = NeckConfig::new(1e-3).unwrap();
    let g = build_glued_factor(&cfg, 3).unwrap();
    let half = 0.5 * cfg.s_eps();
    for k in 0..g.factor.len() {
        let s = g.factor.s(k);
        let u = g.factor.values[k];
        // f(x) + f(1 - x) dips below 1 near the band edges, but stays positive
        assert!(u > 0.5);
        if s.abs() >= 1.0 + 1e-12 {
            // away from the central band both pieces are exactly cylindrical
            assert!((u - 1.0).abs() < 1e-15, "s = {s}: {u}");
        }
    }
    // The gluing band raises the factor: the profile is not a partition of unity.
    let mid = g.metric.values[g.metric.len() / 2];
    assert!(mid > 1.2 && mid < 1.5, "{mid}");
    // bounded second differences
    let d2 = g
        .factor
        .values
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs() / g.factor.ds.powi(2))
        .fold(0.0, f64::max);
    assert!(d2 < 10.0, "{d2}");
    assert!(half > 3.0);
}

#[test]
fn summand_metric_away_from_neck() {
    // beyond the chart station the modified summand is the flat metric r² ḡ_0
    for s in [-3.0, -1.5, -0.7] {
        let r: f64 = (-s as f64).exp();
        assert!((summand_geometric_factor(s) - r * r).abs() < 1e-12);
    }
    // inside r <= 1 it is the cylinder
    for s in [0.0, 0.5, 4.0] {
        assert_eq!(summand_geometric_factor(s), 1.0);
    }
}

#[test]
fn exact_cylinder_has_no_error() {
    // u ≡ 1: the covariance formula reduces to P(1) = c
    let spec = ModeSpec::half(3, 0).unwrap();
    let c = spec.constants().c;
    let ones = vec![1.0; 128];
    let p = apply_multiplier(&ones, 0.1, |xi| Ok(Complex64::new(theta(&spec, xi)?, 0.0))).unwrap();
    for v in p {
        assert!((v - c).abs() < 1e-13);
    }
}

#[test]
fn weighted_norm_basics() {
    let cfg = NeckConfig::new(1e-2).unwrap();
    let norm = WeightedNormSpec::new(-0.5, 0).unwrap();
    let w = cfg.sample(0, |s| weight(&cfg, s).powf(-0.5)).unwrap();
    assert!((weighted_norm(&norm, &cfg, &w) - 1.0).abs() < 1e-14);
    let zero = w.zeros_like();
    assert_eq!(weighted_norm(&norm, &cfg, &zero), 0.0);
    let v = cfg.sample(0, |s| (-s * s).exp()).unwrap();
    let twice = v.map(|_, x| 2.0 * x);
    for k in [0, 1] {
        let nm = WeightedNormSpec::new(-0.5, k).unwrap();
        assert!((weighted_norm(&nm, &cfg, &twice) - 2.0 * weighted_norm(&nm, &cfg, &v)).abs() < 1e-14);
    }
    // weight <= 1 in the neck, so a more negative exponent damps more
    let a = weighted_norm(&WeightedNormSpec::new(-0.7, 0).unwrap(), &cfg, &v);
    let b = weighted_norm(&WeightedNormSpec::new(-0.3, 0).unwrap(), &cfg, &v);
    assert!(a <= b);
}

#[test]
fn error_concentrates_in_gluing_band() {
    let cfg = NeckConfig::new(1e-3).unwrap();
    let norm = WeightedNormSpec::new(-0.5, 0).unwrap();
    let e = approximate_curvature_error(&cfg, 3, &norm).unwrap();
    let inside = (0..e.error.len())
        .filter(|&k| e.error.s(k).abs() <= 1.0)
        .map(|k| e.error.values[k].abs())
        .fold(0.0, f64::max);
    let outside = (0..e.error.len())
        .filter(|&k| e.error.s(k).abs() >= 3.0)
        .map(|k| e.error.values[k].abs())
        .fold(0.0, f64::max);
    assert!(inside > 0.05);
    assert!(outside < 0.05 * inside, "{outside} vs {inside}");
}

#[test]
fn error_decays_along_dyadic_sweep() {
    let norm = WeightedNormSpec::new(-0.5, 0).unwrap();
    for n in [2, 3] {
        for conv in [WeightConvention::Uncentered, WeightConvention::Centered] {
            let rows = error_sweep(n, &SWEEP, &norm, conv).unwrap();
            let e: Vec<f64> = rows.iter().map(|r| r.e_norm).collect();
            assert!(e.windows(2).all(|w| w[1] < w[0]), "n={n} {conv:?}: {e:?}");
            let ratio = e[4] / e[0];
            eprintln!("n={n} {conv:?}: ratio {ratio:.4}");
            if conv == WeightConvention::Uncentered {
                assert!(ratio < 0.5);
            }
        }
    }
}

#[test]
fn covariance_agrees_with_bulk_dtn() {
    let mut cfg = NeckConfig::new(5e-2).unwrap();
    cfg.ds = 0.05;
    cfg.pad = 4.0;
    for n in [2, 3] {
        let norm = WeightedNormSpec::new(-0.5, 0).unwrap();
        let by_symbol = approximate_curvature_error(&cfg, n, &norm).unwrap().q;
        let by_bulk = curvature_via_extension(&cfg, n, 2048).unwrap();
        let diff = by_symbol
            .values
            .iter()
            .zip(&by_bulk.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-6, "n={n}: {diff}");
    }
}

#[test]
fn round_sphere_profile_has_ball_curvature() {
    // The round sphere is cosh(s)^{-2} times the cylinder, so its factor is
    // cosh^{-(n-1)/2} and its curvature is the ball value (n-1)/2.
    for n in 2..=5 {
        let spec = ModeSpec::half(n, 0).unwrap();
        let a = (n as f64 - 1.0) / 2.0;
        let f = LineFunction::sample(-40.0, 40.0, 4096, 0, |s| s.cosh().powf(-a)).unwrap();
        let pf = apply_multiplier(&f.values, f.ds, |xi| Ok(Complex64::new(theta(&spec, xi)?, 0.0)))
            .unwrap();
        for k in f.interior() {
            let want = a * f.s(k).cosh().powf(-(n as f64 + 1.0) / 2.0);
            assert!((pf[k] - want).abs() < 1e-8, "n={n} s={}: {} vs {want}", f.s(k), pf[k]);
        }
    }
}
