//! The acceptance suite: ten numbered checks, each reported as one
//! `[PASS]`/`[FAIL]` line.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::extension::{dtn_cylinder, HalfCylinderProblem};
use crate::indicial::{check_lemma, first_root};
use crate::line::LineFunction;
use crate::modegreen::{
    annihilation_residual, apply_l0, catalog_covering, classify_growth, fit_log_slope, green_solve,
    homogeneous_basis, residue_kernel, DecayProfile, GrowthVerdict,
};
use crate::neck::{error_sweep, WeightConvention, WeightedNormSpec};
use crate::solver::{
    apply_linearized, apply_q_grid, ball_spectrum, newton_solve, uniform_invertibility_study,
    IterationMethod, ModeModel, ModeTable, PeriodicCylinderState,
};
use crate::symbol::{constants, theta, ModeSpec};

/// The dyadic sweep shared by criteria 6 and 10.
pub const EPSILON_SWEEP: [f64; 5] = [1e-1, 5e-2, 2.5e-2, 1.25e-2, 6.25e-3];
pub const CRITERIA: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {} ({:.1}s)", self.id, self.name, self.detail, self.seconds)
    }
}

pub fn name(id: u8) -> &'static str {
    match id {
        1 => "constant anchor",
        2 => "indicial roots",
        3 => "extension vs symbol",
        4 => "green operator",
        5 => "liouville",
        6 => "glue error decay",
        7 => "nonlinear solve",
        8 => "quadratic remainder",
        9 => "ball degeneracy",
        10 => "uniform invertibility",
        _ => "unknown",
    }
}

/// Runs one criterion. Numerical failures inside the check are reported as
/// a failed criterion, not as an error.
pub fn run(id: u8) -> Result<CriterionResult> {
    let check: fn() -> Result<(bool, String)> = match id {
        1 => constant_anchor,
        2 => indicial_suite,
        3 => extension_equivalence,
        4 => green_suite,
        5 => liouville,
        6 => glue_decay,
        7 => nonlinear_solve,
        8 => quadratic_remainder,
        9 => ball_degeneracy,
        10 => uniform_invertibility,
        _ => return Err(Error::invalid(format!("no criterion {id}"))),
    };
    let start = Instant::now();
    let (passed, detail) = match check() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Ok(CriterionResult { id, name: name(id), passed, detail, seconds: start.elapsed().as_secs_f64() })
}

pub fn run_all(ids: &[u8]) -> Result<Vec<CriterionResult>> {
    ids.iter().map(|&id| run(id)).collect()
}

fn sup(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

fn constant_anchor() -> Result<(bool, String)> {
    let c3 = constants(3, 0.5)?.c;
    let anchor = (c3 - 2.0 / std::f64::consts::PI).abs();
    let mut worst = 0.0_f64;
    for n in 2..=6 {
        let c = constants(n, 0.5)?.c;
        worst = worst.max((c - theta(&ModeSpec::half(n, 0)?, 0.0)?).abs());
    }
    Ok((
        anchor <= 1e-10 && worst <= 1e-12,
        format!("|c(3) - 2/pi| = {anchor:.2e}, max |c - theta_0(0)| = {worst:.2e}"),
    ))
}

fn indicial_suite() -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    for n in 2..=5 {
        let report = check_lemma(n, 6, 3)?;
        // clauses a-c come straight from the report; the higher-root bound is
        // asserted on m = 0..4
        let abc = report.clauses.iter().filter(|c| c.clause != 'd').all(|c| c.passed);
        let bound = (n as f64 - 1.0) / 2.0;
        let lowest = report.catalogs[..=4]
            .iter()
            .flat_map(|c| c.roots.iter().skip(1).take(3))
            .map(|r| r.sigma)
            .fold(f64::INFINITY, f64::min);
        let s1 = report.catalogs[1].roots[0].sigma;
        ok &= abc && lowest > bound;
        notes.push(format!("n={n}: sigma_0(1)-1 = {:.1e}, min sigma_j = {lowest:.4}", s1 - 1.0));
    }
    Ok((ok, notes.join("; ")))
}

fn extension_equivalence() -> Result<(bool, String)> {
    let xis = [0.0, 0.5, 1.0, 2.0, 4.0];
    let mut worst = 0.0_f64;
    let mut worst_ratio = f64::INFINITY;
    for n in [2, 3] {
        for m in 0..=4 {
            let spec = ModeSpec::half(n, m)?;
            for xi in xis {
                let want = theta(&spec, xi)?;
                let got = dtn_cylinder(&HalfCylinderProblem::new(spec, xi))?;
                worst = worst.max((got - want).abs() / want.abs());
                let err = |g| -> Result<f64> {
                    Ok((dtn_cylinder(&HalfCylinderProblem::new(spec, xi).with_grid(g))? - want).abs())
                };
                let (e1, e2) = (err(128)?, err(256)?);
                worst_ratio = worst_ratio.min(e1 / e2);
            }
        }
    }
    Ok((
        worst <= 1e-4 && worst_ratio >= 3.0,
        format!("max relative error {worst:.2e}, min refinement ratio {worst_ratio:.2}"),
    ))
}

fn green_suite() -> Result<(bool, String)> {
    // (i) roundtrip: v = G L v for a Gaussian, sampled from a finer grid
    let mut roundtrip = 0.0_f64;
    for n in [2, 3] {
        for m in 0..=3 {
            let spec = ModeSpec::half(n, m)?;
            let kappa = spec.constants().kappa;
            let fine = LineFunction::sample(-30.0, 30.0, 8192, m, |s| (-s * s).exp())?;
            let h_fine = apply_l0(&spec, &fine, kappa)?;
            let h = LineFunction::new(-30.0, 60.0 / 4096.0, h_fine.values.iter().step_by(2).copied().collect(), m)?;
            let v = green_solve(&spec, &h, DecayProfile::symmetric(0.5))?;
            roundtrip = roundtrip.max(v.interior_distance(&v.map(|s, _| (-s * s).exp())));
        }
    }
    // (ii) decay of particular solutions below the first root
    let mut decay = 0.0_f64;
    for (n, m, delta) in [(3, 1, 0.5), (3, 2, 0.8), (2, 1, 0.4), (4, 3, 1.2)] {
        let spec = ModeSpec::half(n, m)?;
        if delta >= first_root(&spec)?.sigma {
            return Err(Error::invalid("decay case above the first root"));
        }
        let h = LineFunction::sample(-60.0, 60.0, 8192, m, |s| 1.0 / (delta * s).cosh())?;
        let v = green_solve(&spec, &h, DecayProfile::symmetric(delta))?;
        let right = fit_log_slope(&v, 12.0, 30.0).ok_or_else(|| Error::NonConvergence("fit".into()))?;
        let left = fit_log_slope(&v, -30.0, -12.0).ok_or_else(|| Error::NonConvergence("fit".into()))?;
        decay = decay.max((right + delta).abs() / delta).max((left - delta).abs() / delta);
    }
    // (iii) homogeneous basis annihilated
    let mut annihilated = 0.0_f64;
    for (n, m) in [(3, 0), (3, 1), (2, 0), (2, 2), (4, 1)] {
        let spec = ModeSpec::half(n, m)?;
        let kappa = spec.constants().kappa;
        let cat = catalog_covering(&spec, kappa, 8.0)?;
        let template = LineFunction::sample(-30.0, 30.0, 4096, m, |_| 0.0)?;
        for b in homogeneous_basis(&cat, 2, &template)? {
            annihilated = annihilated.max(annihilation_residual(&spec, kappa, &b)?);
        }
    }
    // (iv) the even kernel is symmetric
    let mut asym = 0.0_f64;
    for (n, m, beta) in [(3, 1, 2.0), (3, 0, 3.5), (2, 2, 3.0)] {
        let spec = ModeSpec::half(n, m)?;
        let cat = catalog_covering(&spec, spec.constants().kappa, 16.0)?;
        let rk = residue_kernel(&spec, &cat, beta, 6)?;
        for k in 1..200 {
            let s = 0.05 * k as f64;
            let (a, b) = (rk.even_part(s), rk.even_part(-s));
            asym = asym.max((a - b).abs() / a.abs().max(1e-300));
        }
    }
    Ok((
        roundtrip <= 1e-6 && decay <= 0.05 && annihilated <= 1e-6 && asym <= 1e-8,
        format!(
            "roundtrip {roundtrip:.2e}, decay deviation {:.2}%, annihilation {annihilated:.2e}, asymmetry {asym:.2e}",
            100.0 * decay
        ),
    ))
}

/// Annihilated candidates are differences of particular solutions from two
/// contours, plus zero. Every homogeneous basis element must be rejected as
/// non-admissible.
fn liouville() -> Result<(bool, String)> {
    let n = 3;
    let mut worst = 0.0_f64;
    let mut basis_rejected = true;
    let mut tested = 0;
    for mu in [-0.3, -0.7] {
        if !(mu > -(n as f64 - 1.0) / 2.0) {
            continue;
        }
        for m in 0..=2 {
            let spec = ModeSpec::half(n, m)?;
            let kappa = spec.constants().kappa;
            let cat = catalog_covering(&spec, kappa, 8.0)?;
            let template = LineFunction::sample(-40.0, 40.0, 4096, m, |_| 0.0)?;
            let basis = homogeneous_basis(&cat, 1, &template)?;
            let h = template.map(|s, _| (-s * s / 4.0).exp() * (0.3 * s).cos());
            let sigma0 = cat.roots[0].sigma;
            // two decay profiles inside the first gap (or straddling mode 0's pair)
            let (p1, p2) = if sigma0 > 0.0 {
                (DecayProfile::symmetric(0.4 * sigma0), DecayProfile { delta: 0.9 * sigma0, delta0: 0.1 * sigma0 })
            } else {
                (DecayProfile::symmetric(0.3), DecayProfile { delta: 0.6, delta0: 0.2 })
            };
            let a = green_solve(&spec, &h, p1)?;
            let b = green_solve(&spec, &h, p2)?;
            let diff = a.with_values(a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect());
            for cand in [diff, template.clone()] {
                let r = classify_growth(&spec, &basis, &cand, mu, 1e-6)?;
                // only weight-bounded candidates are in scope; for mode 0 the
                // difference picks up the oscillatory pair and is rejected
                if r.verdict != GrowthVerdict::NonAdmissible {
                    tested += 1;
                    worst = worst.max(sup(r.coefficients.iter().copied()));
                }
            }
            for el in &basis {
                let r = classify_growth(&spec, &basis, &el.samples, mu, 1e-6)?;
                basis_rejected &= r.verdict == GrowthVerdict::NonAdmissible;
            }
        }
    }
    Ok((
        tested > 0 && worst <= 1e-6 && basis_rejected,
        format!("{tested} bounded candidates, max coefficient {worst:.2e}, basis elements non-admissible: {basis_rejected}"),
    ))
}

fn glue_decay() -> Result<(bool, String)> {
    let norm = WeightedNormSpec::new(-0.5, 0)?;
    let mut ok = true;
    let mut notes = Vec::new();
    for n in [2, 3] {
        let ratio_of = |conv| -> Result<(bool, f64)> {
            let e: Vec<f64> = error_sweep(n, &EPSILON_SWEEP, &norm, conv)?.iter().map(|r| r.e_norm).collect();
            Ok((e.windows(2).all(|w| w[1] < w[0]), e[e.len() - 1] / e[0]))
        };
        let (dec, ratio) = ratio_of(WeightConvention::Uncentered)?;
        let (cdec, cratio) = ratio_of(WeightConvention::Centered)?;
        ok &= dec && ratio < 0.5;
        notes.push(format!(
            "n={n}: ratio {ratio:.4} (decreasing {dec}); centered weight ratio {cratio:.4} (decreasing {cdec})"
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn cylinder_model() -> Result<ModeModel> {
    ModeModel::cylinder(3, ModeModel::default_period(3)?, 8, 256)
}

fn nonlinear_solve() -> Result<(bool, String)> {
    let model = cylinder_model()?;
    let norm = WeightedNormSpec::new(-0.5, 0)?;
    let mut ok = true;
    let mut notes = Vec::new();
    for mode in [1, 2] {
        let state = PeriodicCylinderState::perturbed(model.clone(), 0.01, mode)?;
        let nr = newton_solve(&state, &norm, IterationMethod::Newton, 1e-10, 30)?;
        let last = nr.residual_history.last().copied().unwrap_or(f64::INFINITY);
        let dist = sup(nr.final_f.grid().iter().map(|f| f - 1.0));
        let q = nr.quadratic_ratios(1e-13);
        let (lo, hi) = q.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &x| (a.min(x), b.max(x)));
        let quadratic = q.len() >= 2 && hi / lo <= 3.0;
        let fp = newton_solve(&state, &norm, IterationMethod::FixedPoint, 1e-10, 100)?;
        let worst_lin = fp.linear_ratios().into_iter().fold(0.0_f64, f64::max);
        ok &= nr.converged && last <= 1e-10 && dist < 1e-8 && quadratic && fp.converged && worst_lin < 0.5;
        notes.push(format!(
            "mode {mode}: newton {} steps, residual {last:.1e}, C spread {:.2}; fixed point ratio {worst_lin:.3}",
            nr.iterations,
            hi / lo
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn quadratic_remainder() -> Result<(bool, String)> {
    let model = cylinder_model()?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let mut t = ModeTable::zeros(model.m_max + 1, model.n_s);
        for m in 0..=3 {
            for k in 0..=4usize {
                let im = if k == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) };
                let z = num_complex::Complex64::new(rng.gen_range(-1.0..1.0), im);
                t.set(m, k, z);
                if k > 0 {
                    t.set(m, model.n_s - k, z.conj());
                }
            }
        }
        let dir = model.to_grid(&t);
        let scale = sup(dir.iter().copied());
        let mut ratios = Vec::new();
        for amp in [1e-2, 1e-3, 1e-4] {
            let v: Vec<f64> = dir.iter().map(|d| amp * d / scale).collect();
            let f: Vec<f64> = v.iter().map(|v| 1.0 + v).collect();
            let q = apply_q_grid(&model, &f)?;
            let lv = model.to_grid(&apply_linearized(&model, &model.to_table(&v)));
            let rem = sup((0..v.len()).map(|i| q[i] - model.c - lv[i]));
            ratios.push(rem / (amp * amp));
        }
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &x| (a.min(x), b.max(x)));
        worst = worst.max(hi / lo);
    }
    Ok((worst < 3.0, format!("worst spread over 20 directions {worst:.3}")))
}

fn ball_degeneracy() -> Result<(bool, String)> {
    let k_max = 8;
    let mut ok = true;
    for n in [2, 3, 4] {
        let (eig, kernel) = ball_spectrum(n, k_max)?;
        ok &= eig.iter().enumerate().all(|(k, &e)| e == k as f64 - 1.0) && kernel == vec![1];
    }
    let ball = ModeModel::ball(3, 6)?;
    let state = PeriodicCylinderState::perturbed(ball, 0.01, 1)?;
    let norm = WeightedNormSpec::new(-0.5, 0)?;
    let mut flagged = true;
    for method in [IterationMethod::FixedPoint, IterationMethod::Newton] {
        flagged &= matches!(newton_solve(&state, &norm, method, 1e-10, 20), Err(Error::Resonance(_)));
    }
    Ok((
        ok && flagged,
        format!("spectrum k-1 with kernel {{1}}: {ok}; solver reports resonance: {flagged}"),
    ))
}

fn uniform_invertibility() -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    for n in [2, 3] {
        let r = uniform_invertibility_study(n, &EPSILON_SWEEP, -0.5, &[1, 2, 3])?;
        let floor = r.rows.iter().map(|x| x.sigma_min).fold(f64::INFINITY, f64::min);
        ok &= r.slope.abs() <= 0.1;
        notes.push(format!("n={n}: slope {:.4}, min sigma {floor:.4}", r.slope));
    }
    Ok((ok, notes.join("; ")))
}
