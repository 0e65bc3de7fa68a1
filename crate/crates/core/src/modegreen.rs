//! Green operators and homogeneous solutions of `L_m = Θ_m(D) - κ` on the line.
//!
//! A decaying solution of `L_m v = h` is obtained by conjugating with an
//! exponential weight: writing `v = e^{-βs} w`, `h = e^{-βs} g`, the equation
//! becomes `M_β(D) w = g` with `M_β(ξ) = Θ_m(ξ + iβ) - κ`. The choice of `β`
//! between two consecutive indicial rates decides which exponentials the
//! solution may carry at each end; it is taken from the decay profile the
//! caller declares.
//!
//! The same kernel is available as a residue series over the indicial roots,
//!
//! ```text
//! G_β(s) =  Σ_{Re λ < -β}  e^{λs} / F'(λ)     (s > 0)
//! G_β(s) = -Σ_{Re λ > -β}  e^{λs} / F'(λ)     (s < 0)
//! ```
//!
//! with `F(λ) = Θ_m(-iλ)`; for a real root `σ_j > 0` the coefficient of
//! `e^{-σ_j |s|}` is `d_j = -1 / F'(σ_j)`, and for mode 0 the purely
//! oscillatory pair contributes `d_0 sin(τ_0 s)` on `s < 0` with
//! `d_0 = 2 / Θ_0'(τ_0)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::indicial::{find_roots_with_kappa, RootCatalog, SearchBox};
use crate::line::{apply_multiplier, top_band_energy, LineFunction};
use crate::symbol::{symbol_at_rate_derivative, theta_analytic, ModeSpec};

/// Declared exponential decay of a right-hand side: `O(e^{-δ s})` as
/// `s -> +∞` and `O(e^{δ_0 s})` as `s -> -∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayProfile {
    pub delta: f64,
    pub delta0: f64,
}

impl DecayProfile {
    pub fn symmetric(rate: f64) -> Self {
        DecayProfile { delta: rate, delta0: rate }
    }
}

/// `Θ_m(ξ + iβ) - κ`.
pub fn shifted_multiplier(spec: &ModeSpec, kappa: f64, beta: f64, xi: f64) -> Result<Complex64> {
    Ok(theta_analytic(spec, Complex64::new(xi, beta))? - kappa)
}

/// Applies `Θ_m(D) - κ` to periodic (or end-negligible) samples.
pub fn apply_l0(spec: &ModeSpec, v: &LineFunction, kappa: f64) -> Result<LineFunction> {
    let fraction = top_band_energy(&v.values, v.ds);
    if fraction > 0.01 {
        return Err(Error::AliasWarning { fraction });
    }
    apply_l0_shifted(spec, v, kappa, 0.0)
}

/// Applies `M_β(D)`; equivalently `e^{βs} L_m (e^{-βs} w)`.
pub fn apply_l0_shifted(
    spec: &ModeSpec,
    w: &LineFunction,
    kappa: f64,
    beta: f64,
) -> Result<LineFunction> {
    let out = apply_multiplier(&w.values, w.ds, |xi| shifted_multiplier(spec, kappa, beta, xi))?;
    Ok(w.with_values(out))
}

/// Catalog holding every root with `σ <= bound`.
pub fn catalog_covering(spec: &ModeSpec, kappa: f64, bound: f64) -> Result<RootCatalog> {
    let mut sigma_max = spec.n as f64 + 0.1;
    while sigma_max < bound + 1.0 {
        sigma_max += 2.37;
    }
    find_roots_with_kappa(spec, kappa, SearchBox::new((0.0, sigma_max), (0.0, 20.0))?, 1e-11)
}

/// The real parts `±σ` of all roots in the catalog, sorted and deduplicated.
pub fn root_rates(catalog: &RootCatalog) -> Vec<f64> {
    let mut r: Vec<f64> = catalog.roots.iter().flat_map(|x| [x.sigma, -x.sigma]).collect();
    r.sort_by(f64::total_cmp);
    r.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    r
}

/// Contour offset `β` and the indicial gap containing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourChoice {
    pub beta: f64,
    pub gap: (f64, f64),
}

/// Picks `β` inside the gap of indicial rates containing `δ`, within
/// `(-δ_0, δ)`.
pub fn choose_contour(catalog: &RootCatalog, profile: DecayProfile) -> Result<ContourChoice> {
    let DecayProfile { delta, delta0 } = profile;
    if !delta.is_finite() || !delta0.is_finite() {
        return Err(Error::invalid("decay rates must be finite"));
    }
    let rates = root_rates(catalog);
    if let Some(r) = rates.iter().find(|r| (**r - delta).abs() <= 1e-9) {
        return Err(Error::Resonance(format!("declared rate {delta} equals indicial rate {r}")));
    }
    let lo_root = rates.iter().rev().find(|r| **r < delta).copied().unwrap_or(f64::NEG_INFINITY);
    let hi_root = rates.iter().find(|r| **r > delta).copied().unwrap_or(f64::INFINITY);
    let lo = lo_root.max(-delta0);
    let hi = delta;
    if !(lo < hi) || !lo.is_finite() {
        return Err(Error::Resonance(format!(
            "no contour between {lo} and {hi}: the rates (delta = {delta}, delta0 = {delta0}) \
             straddle the indicial rate {lo_root}"
        )));
    }
    // The solution decays like e^{-a_r s} on the right and e^{-a_l |s|} on
    // the left. On a periodic grid of half-length H each tail wraps onto the
    // opposite end, scaled by e^{±2βH}; balancing the two exponents
    // 2β - a_r and -2β - a_l gives β = (a_r - a_l) / 4.
    let a_r = delta.min(hi_root);
    let a_l = delta0.min(-lo_root);
    let margin = 0.1 * (hi - lo);
    let beta = (0.25 * (a_r - a_l)).clamp(lo + margin, hi - margin);
    Ok(ContourChoice { beta, gap: (lo_root, hi_root) })
}

/// Empirical decay rate of the right (`+1`) or left (`-1`) tail, from the
/// ratio of sup norms over two outer windows. `None` when the outer window
/// is already at the noise floor.
pub fn tail_rate(f: &LineFunction, side: i8) -> Option<f64> {
    let c = f.center();
    let h = f.half_length();
    let floor = 1e-12 * f.sup_norm();
    let window_sup = |a: f64, b: f64| {
        let mut m: f64 = 0.0;
        for k in 0..f.len() {
            let x = (f.s(k) - c) * side as f64;
            if x >= a && x <= b {
                m = m.max(f.values[k].abs());
            }
        }
        m
    };
    let inner = window_sup(0.25 * h, 0.5 * h);
    let outer = window_sup(0.75 * h, h);
    if outer <= floor || inner <= floor {
        return None;
    }
    Some((inner / outer).ln() / (0.5 * h))
}

/// Least-squares slope of `ln |v|` over `s ∈ [a, b]` (zeros skipped).
pub fn fit_log_slope(v: &LineFunction, a: f64, b: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = (0..v.len())
        .filter(|&k| v.s(k) >= a && v.s(k) <= b && v.values[k] != 0.0)
        .map(|k| (v.s(k), v.values[k].abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

fn check_tails(h: &LineFunction, profile: DecayProfile) -> Result<()> {
    let slack = |rate: f64| 0.05 * rate.abs() + 0.05;
    if let Some(r) = tail_rate(h, 1) {
        if r < profile.delta - slack(profile.delta) {
            return Err(Error::TailMismatch(format!(
                "right tail decays at {r:.4}, declared {}",
                profile.delta
            )));
        }
    }
    if let Some(r) = tail_rate(h, -1) {
        if r < profile.delta0 - slack(profile.delta0) {
            return Err(Error::TailMismatch(format!(
                "left tail decays at {r:.4}, declared {}",
                profile.delta0
            )));
        }
    }
    Ok(())
}

/// Particular solution of `L_m v = h` with the decay the profile selects.
pub fn green_solve(spec: &ModeSpec, h: &LineFunction, profile: DecayProfile) -> Result<LineFunction> {
    let kappa = spec.constants().kappa;
    let bound = profile.delta.abs().max(profile.delta0.abs());
    let catalog = catalog_covering(spec, kappa, bound)?;
    green_solve_with(spec, h, profile, &catalog)
}

pub fn green_solve_with(
    spec: &ModeSpec,
    h: &LineFunction,
    profile: DecayProfile,
    catalog: &RootCatalog,
) -> Result<LineFunction> {
    let choice = choose_contour(catalog, profile)?;
    if h.sup_norm() == 0.0 {
        return Ok(h.zeros_like());
    }
    check_tails(h, profile)?;
    green_solve_shifted(spec, h, catalog.kappa, choice.beta)
}

/// Solves along the contour `Im ζ = β`.
pub fn green_solve_shifted(
    spec: &ModeSpec,
    h: &LineFunction,
    kappa: f64,
    beta: f64,
) -> Result<LineFunction> {
    let g: Vec<f64> = (0..h.len()).map(|k| h.values[k] * (beta * h.s(k)).exp()).collect();
    let mut smallest = f64::INFINITY;
    let w = apply_multiplier(&g, h.ds, |xi| {
        let m = match shifted_multiplier(spec, kappa, beta, xi) {
            Ok(m) => m,
            Err(Error::Pole { .. }) => return Ok(Complex64::new(0.0, 0.0)),
            Err(e) => return Err(e),
        };
        smallest = smallest.min(m.norm());
        Ok(m.inv())
    })?;
    if smallest <= 1e-12 {
        return Err(Error::Resonance(format!(
            "shifted multiplier vanishes on the grid (min |M| = {smallest:.3e}) at beta = {beta}"
        )));
    }
    let v = (0..h.len()).map(|k| w[k] * (-beta * h.s(k)).exp()).collect();
    Ok(h.with_values(v))
}

/// Samples of `G_β` computed by inverse FFT of `1 / M_β` on a grid of `n`
/// points with spacing `ds`, centered at `s = 0`.
pub fn fft_kernel(
    spec: &ModeSpec,
    kappa: f64,
    beta: f64,
    ds: f64,
    n: usize,
) -> Result<LineFunction> {
    let mut delta = vec![0.0; n];
    delta[0] = 1.0 / ds;
    let w = apply_multiplier(&delta, ds, |xi| match shifted_multiplier(spec, kappa, beta, xi) {
        Ok(m) => Ok(m.inv()),
        Err(Error::Pole { .. }) => Ok(Complex64::new(0.0, 0.0)),
        Err(e) => Err(e),
    })?;
    let half = n / 2;
    let values = (0..n)
        .map(|k| {
            let idx = (k + n - half) % n;
            let s = (k as f64 - half as f64) * ds;
            w[idx] * (-beta * s).exp()
        })
        .collect();
    LineFunction::new(-(half as f64) * ds, ds, values, spec.m)
}

/// One term `coeff · e^{λ s}` of a residue expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueTerm {
    pub lambda: Complex64,
    pub coeff: Complex64,
}

impl ResidueTerm {
    fn eval(&self, s: f64) -> Complex64 {
        self.coeff * (self.lambda * s).exp()
    }
}

/// Residue-series representation of `G_β`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueKernel {
    pub beta: f64,
    /// Terms used for `s > 0`.
    pub right: Vec<ResidueTerm>,
    /// Terms used for `s < 0`.
    pub left: Vec<ResidueTerm>,
}

impl ResidueKernel {
    /// `G_β(s)` for `s != 0`.
    pub fn eval(&self, s: f64) -> f64 {
        let terms = if s > 0.0 { &self.right } else { &self.left };
        terms.iter().map(|t| t.eval(s)).sum::<Complex64>().re
    }

    /// The even part built from roots with `|Re λ| > β`: on each side only
    /// the terms that decay away from the origin.
    pub fn even_part(&self, s: f64) -> f64 {
        let b = self.beta.abs();
        let terms = if s > 0.0 { &self.right } else { &self.left };
        terms
            .iter()
            .filter(|t| t.lambda.re.abs() > b + 1e-12)
            .map(|t| t.eval(s))
            .sum::<Complex64>()
            .re
    }

    /// `G_β - even_part`: the finitely many exponentials (and, for mode 0,
    /// the sine term) carried on one side only.
    pub fn finite_part(&self, s: f64) -> f64 {
        self.eval(s) - self.even_part(s)
    }

    /// Magnitude bound of the first omitted term at `s`.
    pub fn truncation_estimate(&self, s: f64, next_rate: f64, next_coeff: f64) -> f64 {
        next_coeff.abs() * (-next_rate * s.abs()).exp()
    }
}

fn orbit(sigma: f64, tau: f64) -> Vec<Complex64> {
    let mut pts = vec![Complex64::new(sigma, tau)];
    if tau != 0.0 {
        pts.push(Complex64::new(sigma, -tau));
    }
    if sigma != 0.0 {
        let mirrored: Vec<Complex64> = pts.iter().map(|z| Complex64::new(-z.re, z.im)).collect();
        pts.extend(mirrored);
    }
    pts
}

/// Residue expansion of `G_β` using roots `j <= j_max` beyond the gap on
/// each side of `β`. Each residue is evaluated at its own root; no
/// symmetry between `λ` and `-λ` is assumed.
pub fn residue_kernel(
    spec: &ModeSpec,
    catalog: &RootCatalog,
    beta: f64,
    j_max: usize,
) -> Result<ResidueKernel> {
    let mut right = Vec::new();
    let mut left = Vec::new();
    for r in &catalog.roots {
        for lambda in orbit(r.sigma, r.tau) {
            let d = symbol_at_rate_derivative(spec, lambda)?;
            if (lambda.re + beta).abs() <= 1e-12 {
                return Err(Error::Resonance(format!("beta = {beta} lies on an indicial rate")));
            }
            if lambda.re < -beta {
                right.push(ResidueTerm { lambda, coeff: d.inv() });
            } else {
                left.push(ResidueTerm { lambda, coeff: -d.inv() });
            }
        }
    }
    // Terms decaying away from the origin faster than e^{-|β| |s|} form the
    // even part and are truncated after j_max + 1 distinct rates; the
    // finitely many others are always kept.
    let b = beta.abs();
    let keep = |terms: &mut Vec<ResidueTerm>, sign: f64| {
        let mut rates: Vec<f64> =
            terms.iter().map(|t| sign * t.lambda.re).filter(|r| *r > b + 1e-12).collect();
        rates.sort_by(f64::total_cmp);
        rates.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        if let Some(&cut) = rates.get(j_max + 1) {
            terms.retain(|t| sign * t.lambda.re < cut - 1e-12);
        }
    };
    keep(&mut right, -1.0);
    keep(&mut left, 1.0);
    Ok(ResidueKernel { beta, right, left })
}

/// The coefficient `d_j` of `e^{-σ_j |s|}` for a real root `σ_j > 0`.
pub fn real_root_coefficient(spec: &ModeSpec, sigma: f64) -> Result<f64> {
    Ok(-1.0 / symbol_at_rate_derivative(spec, Complex64::new(sigma, 0.0))?.re)
}

/// `d_0 = 2 / Θ_0'(τ_0)` for the oscillatory pair of mode 0.
pub fn oscillatory_coefficient(spec: &ModeSpec, tau: f64) -> Result<f64> {
    let d = crate::symbol::theta_analytic_derivative(spec, Complex64::new(tau, 0.0))?;
    Ok(2.0 / d.re)
}

/// Shape of a homogeneous solution `e^{ρ s} trig(τ s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trig {
    Cos,
    Sin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisElement {
    pub rate: f64,
    pub freq: f64,
    pub trig: Trig,
    pub samples: LineFunction,
}

impl BasisElement {
    pub fn eval(&self, s: f64) -> f64 {
        let t = match self.trig {
            Trig::Cos => (self.freq * s).cos(),
            Trig::Sin => (self.freq * s).sin(),
        };
        (self.rate * s).exp() * t
    }

    pub fn label(&self) -> String {
        let t = match self.trig {
            Trig::Cos => "cos",
            Trig::Sin => "sin",
        };
        format!("exp({:+.6} s) {t}({:.6} s)", self.rate, self.freq)
    }
}

/// Homogeneous solutions sampled on the grid of `template`: for mode 0
/// `sin, cos(τ_0 s)` and `e^{±σ_j s} cos(τ_j s)` for `j = 1..j_max`; for
/// `m >= 1`, `e^{±σ_j s} cos(τ_j s)` for `j = 0..j_max` (plus the sine
/// partner whenever `τ_j > 0`).
pub fn homogeneous_basis(
    catalog: &RootCatalog,
    j_max: usize,
    template: &LineFunction,
) -> Result<Vec<BasisElement>> {
    if catalog.roots.len() < j_max + 1 {
        return Err(Error::invalid(format!(
            "catalog holds {} roots, need {}",
            catalog.roots.len(),
            j_max + 1
        )));
    }
    let mut out = Vec::new();
    let mut push = |rate: f64, freq: f64, trig: Trig| {
        let proto = BasisElement { rate, freq, trig, samples: template.clone() };
        let samples = template.map(|s, _| proto.eval(s));
        out.push(BasisElement { samples, ..proto });
    };
    for r in &catalog.roots[..=j_max] {
        let rates: Vec<f64> = if r.sigma == 0.0 { vec![0.0] } else { vec![r.sigma, -r.sigma] };
        for rate in rates {
            push(rate, r.tau, Trig::Cos);
            if r.tau != 0.0 {
                push(rate, r.tau, Trig::Sin);
            }
        }
    }
    Ok(out)
}

/// Relative residual `sup |L_m b| / sup |b|` of a basis element.
///
/// The exponential factor is removed by the conjugation `β = -ρ`, leaving a
/// pure oscillation that is sampled on a grid whose period is an exact
/// multiple of `2π/τ`; the shifted multiplier is then applied by FFT.
pub fn annihilation_residual(spec: &ModeSpec, kappa: f64, element: &BasisElement) -> Result<f64> {
    let n = 1024;
    let period = if element.freq == 0.0 {
        64.0
    } else {
        let base = 2.0 * PI / element.freq;
        base * (64.0 / base).ceil()
    };
    let proto = BasisElement { rate: 0.0, ..element.clone() };
    let w = LineFunction::sample(-period / 2.0, period / 2.0, n, spec.m, |s| proto.eval(s))?;
    let out = apply_l0_shifted(spec, &w, kappa, -element.rate)?;
    Ok(out.sup_norm() / w.sup_norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthVerdict {
    /// Numerically zero.
    Trivial,
    /// Violates `|v| <= C e^{μ|s|}` on the window.
    NonAdmissible,
    /// Obeys the bound yet has a non-negligible fit; contradicts the
    /// Liouville property.
    AdmissibleNontrivial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub verdict: GrowthVerdict,
    /// Least-squares coefficients of `v` against the basis.
    pub coefficients: Vec<f64>,
    /// Any basis combination with `sup |v| e^{-μ|s|} <= 1` on the window has
    /// coefficient 2-norm at most this.
    pub coefficient_bound: f64,
    /// `max_outer |v| e^{-μ|s|} / max_inner |v| e^{-μ|s|}`.
    pub weighted_growth: f64,
}

fn scaled_norm(col: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = col.clone().fold(0.0_f64, |a, x| a.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * col.map(|x| (x / m).powi(2)).sum::<f64>().sqrt()
}

/// Decides whether an annihilated `v` is compatible with the weight bound
/// `|v| <= C e^{μ|s|}` and fits it against the homogeneous basis.
pub fn classify_growth(
    spec: &ModeSpec,
    basis: &[BasisElement],
    v: &LineFunction,
    mu: f64,
    tol: f64,
) -> Result<GrowthReport> {
    let n = spec.n as f64;
    if !(mu > -(n - 1.0) / 2.0 && mu < 0.0) {
        return Err(Error::invalid(format!("mu = {mu} outside (-(n-1)/2, 0)")));
    }
    if basis.iter().any(|b| b.samples.len() != v.len() || !b.samples.same_grid(v)) {
        return Err(Error::invalid("basis and candidate must share a grid"));
    }
    let slowest = basis
        .iter()
        .map(|b| b.rate.abs())
        .filter(|r| *r > 0.0)
        .fold(mu.abs(), f64::min);
    let half = v.s0.abs().min((v.s(v.len() - 1)).abs());
    let required = 4.0 / slowest;
    if half < required {
        return Err(Error::WindowTooShort { half_length: half, required });
    }

    let weighted: Vec<f64> =
        (0..v.len()).map(|k| v.values[k].abs() * (-mu * v.s(k).abs()).exp()).collect();
    let (mut inner, mut outer) = (0.0_f64, 0.0_f64);
    for k in 0..v.len() {
        let x = v.s(k).abs();
        if x <= 0.25 * half {
            inner = inner.max(weighted[k]);
        } else if x >= 0.75 * half && x <= half {
            outer = outer.max(weighted[k]);
        }
    }
    let growth = if inner > 0.0 { outer / inner } else if outer > 0.0 { f64::INFINITY } else { 0.0 };

    // Weighted, column-scaled least squares.
    let rows = v.len();
    let cols = basis.len();
    let wt: Vec<f64> = (0..rows).map(|k| (-mu * v.s(k).abs()).exp()).collect();
    let norms: Vec<f64> = basis
        .iter()
        .map(|b| scaled_norm((0..rows).map(|k| b.samples.values[k] * wt[k])))
        .collect();
    let a = DMatrix::from_fn(rows, cols, |i, j| basis[j].samples.values[i] * wt[i] / norms[j]);
    let rhs = nalgebra::DVector::from_fn(rows, |i, _| weighted[i].copysign(v.values[i]));
    let svd = a.svd(true, true);
    let smin = svd.singular_values.iter().fold(f64::INFINITY, |a, &x| a.min(x));
    let scaled = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::NonConvergence(format!("least squares failed: {e}")))?;
    let coefficients: Vec<f64> = (0..cols).map(|j| scaled[j] / norms[j]).collect();
    let min_norm = norms.iter().fold(f64::INFINITY, |a, &x| a.min(x));
    let coefficient_bound = (rows as f64).sqrt() / (smin * min_norm);

    let verdict = if v.sup_norm() <= tol {
        GrowthVerdict::Trivial
    } else if growth > 10.0 {
        GrowthVerdict::NonAdmissible
    } else if coefficients.iter().all(|c| c.abs() <= tol) {
        GrowthVerdict::Trivial
    } else {
        GrowthVerdict::AdmissibleNontrivial
    };
    Ok(GrowthReport { verdict, coefficients, coefficient_bound, weighted_growth: growth })
}
