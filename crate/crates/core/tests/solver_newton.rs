use neckforge::neck::WeightedNormSpec;
use neckforge::solver::*;
use neckforge::symbol::{theta, ModeSpec};
use neckforge::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(n: usize) -> ModeModel {
    ModeModel::cylinder(n, ModeModel::default_period(n).unwrap(), 8, 64).unwrap()
}

fn sup() -> WeightedNormSpec {
    WeightedNormSpec::new(-0.5, 0).unwrap()
}

#[test]
fn q_of_constants() {
    let m = model(3);
    let q = apply_q(&PeriodicCylinderState::constant(m.clone(), 1.0)).unwrap();
    let grid = m.to_grid(&q);
    assert!(grid.iter().all(|v| (v - m.c).abs() < 1e-13));
    let t: f64 = 1.7;
    let q = apply_q(&PeriodicCylinderState::constant(m.clone(), t)).unwrap();
    let want = m.c * t.powf(-2.0 / 2.0);
    assert!(m.to_grid(&q).iter().all(|v| (v - want).abs() < 1e-13));
    // only mode 0, frequency 0 is populated
    for mm in 0..q.modes {
        for k in 0..q.freqs {
            if (mm, k) != (0, 0) {
                assert!(q.get(mm, k).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn nonpositive_factor_rejected() {
    let m = model(3);
    let state = PeriodicCylinderState::perturbed(m, 1.5, 1).unwrap();
    assert!(matches!(apply_q(&state), Err(Error::NonPositiveConformalFactor { .. })));
}

#[test]
fn linearized_is_diagonal_and_invertible() {
    let m = model(3);
    let mut v = ModeTable::zeros(m.m_max + 1, m.n_s);
    v.set(0, 0, Complex64::new(2.0, 0.0));
    let lv = apply_linearized(&m, &v);
    assert!((lv.get(0, 0).re - (m.c - m.kappa) * 2.0).abs() < 1e-13);
    let mut w = ModeTable::zeros(m.m_max + 1, m.n_s);
    w.set(1, 1, Complex64::new(1.0, 0.5));
    w.set(1, m.n_s - 1, Complex64::new(1.0, -0.5));
    let lw = apply_linearized(&m, &w);
    let xi = 2.0 * std::f64::consts::PI / m.period;
    let want = theta(&ModeSpec::half(3, 1).unwrap(), xi).unwrap() - m.kappa;
    assert!((lw.get(1, 1) - w.get(1, 1) * want).norm() < 1e-13);
    let back = solve_linearized(&m, &lw).unwrap();
    assert!(back.max_abs_diff(&w) < 1e-12);
    let zero = ModeTable::zeros(m.m_max + 1, m.n_s);
    assert_eq!(solve_linearized(&m, &zero).unwrap(), zero);
}

#[test]
fn default_period_is_not_resonant() {
    for n in [2, 3, 4] {
        let (gap, _, _) = model(n).resonance_gap();
        assert!(gap > RESONANCE_GAP, "n={n}: {gap}");
    }
    // a period that is an exact multiple of the mode-0 wavelength resonates
    let tau0 = neckforge::indicial::first_root(&ModeSpec::half(3, 0).unwrap()).unwrap().tau;
    let bad = ModeModel::cylinder(3, 2.0 * 2.0 * std::f64::consts::PI / tau0, 4, 64).unwrap();
    let h = ModeTable::zeros(5, 64);
    assert!(matches!(solve_linearized(&bad, &h), Err(Error::Resonance(_))));
}

#[test]
fn derivative_of_q_matches_linearization() {
    let m = model(3);
    let dir = m.product_grid(2, |s| (2.0 * std::f64::consts::PI * s / m.period).sin());
    let lin = m.to_grid(&apply_linearized(&m, &m.to_table(&dir)));
    let err = |h: f64| {
        let plus: Vec<f64> = dir.iter().map(|d| 1.0 + h * d).collect();
        let minus: Vec<f64> = dir.iter().map(|d| 1.0 - h * d).collect();
        let qp = apply_q_grid(&m, &plus).unwrap();
        let qm = apply_q_grid(&m, &minus).unwrap();
        (0..lin.len()).map(|i| ((qp[i] - qm[i]) / (2.0 * h) - lin[i]).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1e-2), err(5e-3));
    assert!(e1 < 1e-3 && e2 < e1, "{e1} {e2}");
}

#[test]
fn covariance_consistency() {
    let m = model(3);
    let f = m.product_grid(1, |s| (2.0 * std::f64::consts::PI * s / m.period).cos());
    let f: Vec<f64> = f.iter().map(|v| 1.0 + 0.3 * v).collect();
    let q = apply_q_grid(&m, &f).unwrap();
    let pf = m.to_grid(&m.apply_p(&m.to_table(&f)));
    let p = conformal_power(3);
    for i in 0..f.len() {
        assert!((pf[i] - f[i].powf(p) * q[i]).abs() < 1e-10);
    }
}

#[test]
fn trivial_start_converges_immediately() {
    let state = PeriodicCylinderState::constant(model(3), 1.0);
    let r = newton_solve(&state, &sup(), IterationMethod::Newton, 1e-10, 20).unwrap();
    assert!(r.converged);
    assert_eq!(r.iterations, 0);
}

#[test]
fn newton_is_quadratic() {
    for mode in [1, 2] {
        let state = PeriodicCylinderState::perturbed(model(3), 0.01, mode).unwrap();
        let r = newton_solve(&state, &sup(), IterationMethod::Newton, 1e-10, 20).unwrap();
        assert!(r.converged, "{:?}", r.residual_history);
        assert!(*r.residual_history.last().unwrap() <= 1e-10);
        let final_grid = r.final_f.grid();
        assert!(final_grid.iter().all(|f| (f - 1.0).abs() < 1e-9));
        let ratios = r.quadratic_ratios(1e-13);
        eprintln!("mode {mode}: {:?} ratios {ratios:?}", r.residual_history);
        assert!(ratios.len() >= 2);
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo <= 3.0);
    }
}

#[test]
fn fixed_point_is_linear_and_contracting() {
    for mode in [1, 2] {
        let state = PeriodicCylinderState::perturbed(model(3), 0.01, mode).unwrap();
        let r = newton_solve(&state, &sup(), IterationMethod::FixedPoint, 1e-10, 60).unwrap();
        assert!(r.converged);
        let ratios = r.linear_ratios();
        eprintln!("mode {mode}: ratios {ratios:?}");
        assert!(ratios.iter().all(|&q| q < 0.5));
    }
}

#[test]
fn remainder_is_quadratic() {
    let m = model(3);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let mut t = ModeTable::zeros(m.m_max + 1, m.n_s);
        for mm in 0..=3 {
            for k in 0..=3usize {
                let z = Complex64::new(rng.gen_range(-1.0..1.0), if k == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) });
                t.set(mm, k, z);
                if k > 0 {
                    t.set(mm, m.n_s - k, z.conj());
                }
            }
        }
        let dir = m.to_grid(&t);
        let scale = dir.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&amp| {
                let v: Vec<f64> = dir.iter().map(|d| amp * d / scale).collect();
                let f: Vec<f64> = v.iter().map(|v| 1.0 + v).collect();
                let q = apply_q_grid(&m, &f).unwrap();
                let lv = m.to_grid(&apply_linearized(&m, &m.to_table(&v)));
                let rem = (0..v.len()).map(|i| (q[i] - m.c - lv[i]).abs()).fold(0.0, f64::max);
                rem / (amp * amp)
            })
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo < 3.0, "{ratios:?}");
    }
}

#[test]
fn ball_kernel_is_detected() {
    let (eig, kernel) = ball_spectrum(3, 8).unwrap();
    for (k, e) in eig.iter().enumerate() {
        assert_eq!(*e, k as f64 - 1.0);
    }
    assert_eq!(kernel, vec![1]);
    let ball = ModeModel::ball(3, 6).unwrap();
    let state = PeriodicCylinderState::perturbed(ball, 0.01, 1).unwrap();
    for method in [IterationMethod::FixedPoint, IterationMethod::Newton] {
        let r = newton_solve(&state, &sup(), method, 1e-10, 20);
        assert!(matches!(r, Err(Error::Resonance(_))), "{method:?}: {r:?}");
    }
    // The smallest nonzero singular value away from the kernel is 1.
    let nonzero = eig.iter().filter(|e| **e != 0.0).fold(f64::INFINITY, |a, e| a.min(e.abs()));
    assert_eq!(nonzero, 1.0);
}

#[test]
fn plain_cylinder_singular_values_are_the_symbol() {
    use neckforge::line::LineFunction;
    let n = 3;
    let len = 64;
    let period = ModeModel::default_period(n).unwrap();
    let ds = period / len as f64;
    let u = LineFunction::new(0.0, ds, vec![1.0; len], 0).unwrap();
    let c = ModeSpec::half(n, 0).unwrap().constants().c;
    let q = vec![c; len];
    let w = vec![1.0; len];
    let m = ModeModel::cylinder(n, period, 2, len).unwrap();
    for mode in 0..=2 {
        let a = assemble_linearized(n, mode, &u, &q, &w, 0.0).unwrap();
        let want = (0..len).map(|k| m.linearized_symbol(mode, k).abs()).fold(f64::INFINITY, f64::min);
        assert!((smallest_singular_value(&a) - want).abs() < 1e-10);
    }
}

#[test]
fn invertibility_is_uniform_in_epsilon() {
    let eps = [1e-1, 5e-2, 2.5e-2, 1.25e-2, 6.25e-3];
    for n in [2, 3] {
        let r = uniform_invertibility_study(n, &eps, -0.5, &[1, 2, 3]).unwrap();
        assert!(r.slope.abs() <= 0.1, "n={n}: {:?} slope {}", r.rows, r.slope);
        assert!(r.rows.iter().all(|row| row.sigma_min > 0.1));
    }
}

#[test]
fn mode_zero_is_not_uniformly_controlled() {
    // The weighted lines Re λ = ±μ straddle the oscillatory pair ±iτ_0, so
    // mode 0 carries a deficiency and its smallest singular value wanders.
    let eps = [1e-1, 5e-2, 2.5e-2, 1.25e-2, 6.25e-3];
    let r = uniform_invertibility_study(3, &eps, -0.5, &[0]).unwrap();
    let floor = r.rows.iter().map(|row| row.sigma_min).fold(f64::INFINITY, f64::min);
    assert!(floor < 0.1);
}
