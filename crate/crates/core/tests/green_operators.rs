use neckforge::indicial::first_root;
use neckforge::line::LineFunction;
use neckforge::modegreen::*;
use neckforge::symbol::ModeSpec;
use neckforge::Error;

fn grid(m: usize, f: impl Fn(f64) -> f64) -> LineFunction {
    LineFunction::sample(-30.0, 30.0, 4096, m, f).unwrap()
}

fn gaussian_roundtrip(n: usize, m: usize, points: usize) -> f64 {
    let spec = ModeSpec::half(n, m).unwrap();
    let kappa = spec.constants().kappa;
    let fine = LineFunction::sample(-30.0, 30.0, 8192, m, |s| (-s * s).exp()).unwrap();
    let h_fine = apply_l0(&spec, &fine, kappa).unwrap();
    let stride = 8192 / points;
    let h = LineFunction::new(
        -30.0,
        60.0 / points as f64,
        h_fine.values.iter().step_by(stride).copied().collect(),
        m,
    )
    .unwrap();
    let v = green_solve(&spec, &h, DecayProfile::symmetric(0.5)).unwrap();
    let exact = v.map(|s, _| (-s * s).exp());
    v.interior_distance(&exact)
}

#[test]
fn roundtrip_recovers_gaussian() {
    for n in [2, 3] {
        for m in 0..=3 {
            let err = gaussian_roundtrip(n, m, 4096);
            assert!(err <= 1e-6, "n={n} m={m}: {err:e}");
        }
    }
}

#[test]
fn roundtrip_improves_under_refinement() {
    for m in [0, 2] {
        let coarse = gaussian_roundtrip(3, m, 64);
        let fine = gaussian_roundtrip(3, m, 128);
        assert!(fine <= coarse / 2.0, "m={m}: {coarse:e} -> {fine:e}");
    }
}

#[test]
fn multiplier_consistency() {
    let spec = ModeSpec::half(3, 2).unwrap();
    let kappa = spec.constants().kappa;
    let h = grid(2, |s| (s / 2.0).sin() / (0.8 * s).cosh());
    let v = green_solve(&spec, &h, DecayProfile::symmetric(0.7)).unwrap();
    let back = apply_l0(&spec, &v, kappa).unwrap();
    assert!(back.interior_distance(&h) <= 1e-6);
}

#[test]
fn particular_solution_inherits_declared_decay() {
    let cases = [(3, 1, 0.5), (3, 2, 0.8), (2, 1, 0.4), (4, 3, 1.2)];
    for (n, m, delta) in cases {
        let spec = ModeSpec::half(n, m).unwrap();
        assert!(delta < first_root(&spec).unwrap().sigma);
        let h = LineFunction::sample(-60.0, 60.0, 8192, m, |s| 1.0 / (delta * s).cosh()).unwrap();
        let v = green_solve(&spec, &h, DecayProfile::symmetric(delta)).unwrap();
        let right = fit_log_slope(&v, 12.0, 30.0).unwrap();
        let left = fit_log_slope(&v, -30.0, -12.0).unwrap();
        assert!((right + delta).abs() <= 0.05 * delta, "n={n} m={m}: {right}");
        assert!((left - delta).abs() <= 0.05 * delta, "n={n} m={m}: {left}");
    }
}

#[test]
fn fast_rhs_decays_at_first_indicial_rate() {
    // h decays faster than the kernel: the solution decays at sigma_0.
    let spec = ModeSpec::half(3, 1).unwrap();
    let h = LineFunction::sample(-60.0, 60.0, 8192, 1, |s| (-s * s).exp()).unwrap();
    let v = green_solve(&spec, &h, DecayProfile::symmetric(0.9)).unwrap();
    let right = fit_log_slope(&v, 10.0, 25.0).unwrap();
    assert!((right + 1.0).abs() <= 0.05, "{right}");
}

#[test]
fn case_two_allows_growth_on_the_left() {
    // delta between sigma_0 = 1 and sigma_1: faster decay on the right is
    // bought with growth e^{sigma_0 |s|} on the left.
    let spec = ModeSpec::half(3, 1).unwrap();
    let h = LineFunction::sample(-20.0, 40.0, 8192, 1, |s| (-s * s).exp()).unwrap();
    let v = green_solve(&spec, &h, DecayProfile { delta: 2.0, delta0: -1.5 }).unwrap();
    let right = fit_log_slope(&v, 4.0, 9.0).unwrap();
    let left = fit_log_slope(&v, -12.0, -4.0).unwrap();
    assert!((right + 3.7787).abs() < 0.1, "{right}");
    assert!((left + 1.0).abs() < 0.05, "{left}");
}

#[test]
fn particular_solutions_are_unique_within_a_gap() {
    // Two case-i profiles lead to different contours in the same gap; the
    // solutions must coincide up to a homogeneous part, which here vanishes.
    let spec = ModeSpec::half(3, 1).unwrap();
    let kappa = spec.constants().kappa;
    let h = grid(1, |s| (-s * s / 4.0).exp() * (0.3 * s).cos());
    let a = green_solve(&spec, &h, DecayProfile::symmetric(0.5)).unwrap();
    let b = green_solve(&spec, &h, DecayProfile { delta: 0.9, delta0: 0.1 }).unwrap();
    let cat = catalog_covering(&spec, kappa, 8.0).unwrap();
    let basis = homogeneous_basis(&cat, 1, &h).unwrap();
    let diff = a.map(|_, x| x).with_values(
        a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
    );
    let window: Vec<usize> = diff.interior().collect();
    let fitted = best_fit_residual(&diff, &basis, &window);
    assert!(fitted <= 1e-6, "{fitted:e}");
    assert!(a.interior_distance(&b) <= 1e-6);
}

/// Sup of `d - Σ c_i b_i` over `window`, with `c` from least squares there.
fn best_fit_residual(d: &LineFunction, basis: &[BasisElement], window: &[usize]) -> f64 {
    use nalgebra::{DMatrix, DVector};
    let a = DMatrix::from_fn(window.len(), basis.len(), |i, j| basis[j].samples.values[window[i]]);
    let rhs = DVector::from_fn(window.len(), |i, _| d.values[window[i]]);
    let c = a.clone().svd(true, true).solve(&rhs, 1e-14).unwrap();
    (a * c - rhs).amax()
}

#[test]
fn homogeneous_solutions_are_annihilated() {
    for (n, m) in [(3, 0), (3, 1), (2, 0), (2, 2), (4, 1)] {
        let spec = ModeSpec::half(n, m).unwrap();
        let kappa = spec.constants().kappa;
        let cat = catalog_covering(&spec, kappa, 8.0).unwrap();
        let template = grid(m, |_| 0.0);
        let basis = homogeneous_basis(&cat, 2, &template).unwrap();
        for b in &basis {
            let r = annihilation_residual(&spec, kappa, b).unwrap();
            assert!(r <= 1e-6, "n={n} m={m} {}: {r:e}", b.label());
        }
    }
}

#[test]
fn unit_rate_mode_one() {
    let spec = ModeSpec::half(3, 1).unwrap();
    let kappa = spec.constants().kappa;
    let cat = catalog_covering(&spec, kappa, 2.0).unwrap();
    let template = grid(1, |_| 0.0);
    let basis = homogeneous_basis(&cat, 0, &template).unwrap();
    assert_eq!(basis.len(), 2);
    for b in basis {
        assert!((b.rate.abs() - 1.0).abs() < 1e-12);
        assert!(annihilation_residual(&spec, kappa, &b).unwrap() <= 1e-6);
    }
}

#[test]
fn resonant_cosine_is_annihilated() {
    let spec = ModeSpec::half(3, 0).unwrap();
    let kappa = spec.constants().kappa;
    let tau = first_root(&spec).unwrap().tau;
    let period = 2.0 * std::f64::consts::PI / tau * 10.0;
    let v = LineFunction::sample(0.0, period, 2048, 0, |s| (tau * s).cos()).unwrap();
    let out = apply_l0(&spec, &v, kappa).unwrap();
    assert!(out.sup_norm() <= 1e-8);
}

#[test]
fn residue_kernel_matches_fft_kernel() {
    for (m, beta) in [(0usize, 1.0), (1, 0.0), (2, 0.0), (1, 1.5)] {
        let spec = ModeSpec::half(3, m).unwrap();
        let kappa = spec.constants().kappa;
        let cat = catalog_covering(&spec, kappa, 16.0).unwrap();
        let rk = residue_kernel(&spec, &cat, beta, 6).unwrap();
        let fk = fft_kernel(&spec, kappa, beta, 60.0 / 8192.0, 8192).unwrap();
        // compared in the conjugated frame e^{βs} G_β, where both decay
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for k in 0..fk.len() {
            let s = fk.s(k);
            if s.abs() >= 1.0 && s.abs() <= 6.0 {
                let w = (beta * s).exp();
                worst = worst.max(w * (rk.eval(s) - fk.values[k]).abs());
                scale = scale.max(w * rk.eval(s).abs());
            }
        }
        worst /= scale;
        assert!(worst <= 1e-4, "m={m} beta={beta}: {worst:e}");
    }
}

#[test]
fn mode_zero_sine_coefficient() {
    let spec = ModeSpec::half(3, 0).unwrap();
    let kappa = spec.constants().kappa;
    let cat = catalog_covering(&spec, kappa, 10.0).unwrap();
    let tau = cat.roots[0].tau;
    let d0 = oscillatory_coefficient(&spec, tau).unwrap();
    assert!(d0 > 0.0);
    let rk = residue_kernel(&spec, &cat, 0.25, 6).unwrap();
    for &s in &[-0.7, -2.0, -5.3] {
        let finite = rk.finite_part(s);
        assert!((finite - d0 * (tau * s).sin()).abs() < 1e-12);
    }
    for &s in &[0.7, 2.0] {
        assert_eq!(rk.finite_part(s), 0.0);
    }
}

#[test]
fn case_two_even_kernel_is_even() {
    for (n, m, beta) in [(3, 1, 2.0), (3, 0, 3.5), (2, 2, 3.0)] {
        let spec = ModeSpec::half(n, m).unwrap();
        let kappa = spec.constants().kappa;
        let cat = catalog_covering(&spec, kappa, 16.0).unwrap();
        let rk = residue_kernel(&spec, &cat, beta, 6).unwrap();
        for k in 1..200 {
            let s = 0.05 * k as f64;
            let (a, b) = (rk.even_part(s), rk.even_part(-s));
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-300), "n={n} m={m} s={s}");
        }
    }
}

#[test]
fn coefficients_match_real_root_formula() {
    let spec = ModeSpec::half(3, 1).unwrap();
    let kappa = spec.constants().kappa;
    let cat = catalog_covering(&spec, kappa, 8.0).unwrap();
    let rk = residue_kernel(&spec, &cat, 0.0, 6).unwrap();
    let d0 = real_root_coefficient(&spec, 1.0).unwrap();
    let s = 3.0;
    let lead = rk.right.iter().find(|t| (t.lambda.re + 1.0).abs() < 1e-12).unwrap();
    assert!((lead.coeff.re - d0).abs() < 1e-12 && lead.coeff.im == 0.0);
    assert!(rk.eval(s) > 0.0 || d0 < 0.0);
}

#[test]
fn growth_classification() {
    let spec1 = ModeSpec::half(3, 1).unwrap();
    let kappa = spec1.constants().kappa;
    let cat1 = catalog_covering(&spec1, kappa, 8.0).unwrap();
    let template = LineFunction::sample(-60.0, 60.0, 481, 1, |_| 0.0).unwrap();
    let basis = homogeneous_basis(&cat1, 2, &template).unwrap();

    let zero = template.clone();
    let r = classify_growth(&spec1, &basis, &zero, -0.5, 1e-6).unwrap();
    assert_eq!(r.verdict, GrowthVerdict::Trivial);

    let decaying = template.map(|s, _| (-s).exp());
    let r = classify_growth(&spec1, &basis, &decaying, -0.5, 1e-6).unwrap();
    assert_eq!(r.verdict, GrowthVerdict::NonAdmissible);

    let spec0 = ModeSpec::half(3, 0).unwrap();
    let cat0 = catalog_covering(&spec0, kappa, 8.0).unwrap();
    let basis0 = homogeneous_basis(&cat0, 2, &template.map(|_, _| 0.0)).unwrap();
    let tau = cat0.roots[0].tau;
    let osc = template.map(|s, _| (tau * s).cos());
    let r = classify_growth(&spec0, &basis0, &osc, -0.3, 1e-6).unwrap();
    assert_eq!(r.verdict, GrowthVerdict::NonAdmissible);
}

#[test]
fn short_window_rejected() {
    let spec = ModeSpec::half(3, 0).unwrap();
    let kappa = spec.constants().kappa;
    let cat = catalog_covering(&spec, kappa, 8.0).unwrap();
    let template = LineFunction::sample(-5.0, 5.0, 101, 0, |_| 0.0).unwrap();
    let basis = homogeneous_basis(&cat, 1, &template).unwrap();
    let r = classify_growth(&spec, &basis, &template, -0.3, 1e-6);
    assert!(matches!(r, Err(Error::WindowTooShort { .. })));
}
