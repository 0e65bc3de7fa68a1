//! Indicial roots of the mode operator `Θ_m(-iλ) - κ`.
//!
//! Roots are located with the argument principle applied to the entire
//! function
//!
//! ```text
//! H(λ) = 2^{2γ} / (Γ(B+λ/2) Γ(B-λ/2)) - κ / (Γ(A+λ/2) Γ(A-λ/2)),
//! ```
//!
//! which has the same zeros as `F(λ) - κ` but none of its poles, so the
//! winding number of `H` around a rectangle is exactly the number of roots
//! inside. Rectangles are split until each holds one root, which is then
//! polished by Newton's method on `F - κ`.
//!
//! `F` is even and real on the real axis, so roots come in orbits
//! `±σ ± iτ`. A search box touching an axis is mirrored across it before
//! counting; the catalog keeps only the representatives with `σ, τ >= 0`.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::specfun::{is_pole, log_gamma};
use crate::symbol::{symbol_at_rate, symbol_at_rate_derivative, ModeSpec};

/// Rectangle `[sigma_min, sigma_max] x [tau_min, tau_max]` in the root plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub tau_min: f64,
    pub tau_max: f64,
}

impl SearchBox {
    pub fn new(sigma: (f64, f64), tau: (f64, f64)) -> Result<Self> {
        let b = SearchBox {
            sigma_min: sigma.0,
            sigma_max: sigma.1,
            tau_min: tau.0,
            tau_max: tau.1,
        };
        let ok = [b.sigma_min, b.sigma_max, b.tau_min, b.tau_max]
            .iter()
            .all(|x| x.is_finite())
            && b.sigma_min >= 0.0
            && b.tau_min >= 0.0
            && b.sigma_max > b.sigma_min
            && b.tau_max > b.tau_min;
        if !ok {
            return Err(Error::invalid(format!(
                "search box must be a non-empty rectangle in the closed quarter-plane: {b:?}"
            )));
        }
        Ok(b)
    }

    /// `σ ∈ [0, n + 0.1]`, `τ ∈ [0, 20]`. The small offset keeps the right
    /// edge off the integer and half-integer lattice where roots cluster.
    pub fn default_for(n: usize) -> Self {
        SearchBox {
            sigma_min: 0.0,
            sigma_max: n as f64 + 0.1,
            tau_min: 0.0,
            tau_max: 20.0,
        }
    }

    fn contains(&self, sigma: f64, tau: f64, slack: f64) -> bool {
        sigma >= self.sigma_min - slack
            && sigma <= self.sigma_max + slack
            && tau >= self.tau_min - slack
            && tau <= self.tau_max + slack
    }

    fn mirrored(&self) -> Rect {
        let (x0, x1) = if self.sigma_min == 0.0 {
            (-self.sigma_max, self.sigma_max)
        } else {
            (self.sigma_min, self.sigma_max)
        };
        let (y0, y1) = if self.tau_min == 0.0 {
            (-self.tau_max, self.tau_max)
        } else {
            (self.tau_min, self.tau_max)
        };
        Rect { x0, x1, y0, y1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicialRoot {
    pub m: usize,
    pub j: usize,
    pub sigma: f64,
    pub tau: f64,
    /// `dΘ/dζ` at `ζ = -i(σ + iτ)`.
    pub dtheta: Complex64,
    /// Greater than one only when a cluster could not be separated.
    pub multiplicity: usize,
}

impl IndicialRoot {
    pub fn lambda(&self) -> Complex64 {
        Complex64::new(self.sigma, self.tau)
    }

    /// `F'(λ) = d/dλ Θ(-iλ)` at the root.
    pub fn dfdlambda(&self) -> Complex64 {
        -Complex64::i() * self.dtheta
    }

    /// Number of distinct points in the orbit `±σ ± iτ`.
    pub fn orbit_size(&self) -> usize {
        match (self.sigma == 0.0, self.tau == 0.0) {
            (true, true) => 1,
            (true, false) | (false, true) => 2,
            (false, false) => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootCatalog {
    pub spec: ModeSpec,
    pub kappa: f64,
    pub roots: Vec<IndicialRoot>,
    pub search_box: SearchBox,
    /// Winding number of `H` around the (mirrored) search rectangle.
    pub winding_count: usize,
}

impl RootCatalog {
    /// Roots with `j <= j_max`, or `None` if the catalog is too short.
    pub fn first(&self, count: usize) -> Option<&[IndicialRoot]> {
        self.roots.get(..count)
    }

    /// Sum of orbit sizes of the representatives, counting every root the
    /// mirrored rectangle holds. Equals `winding_count` when the box is
    /// anchored at both axes.
    pub fn orbit_total(&self) -> usize {
        self.roots.iter().map(|r| r.orbit_size() * r.multiplicity).sum()
    }

    /// Smallest positive real root, if any.
    pub fn first_real_positive(&self) -> Option<&IndicialRoot> {
        self.roots.iter().find(|r| r.tau == 0.0 && r.sigma > 0.0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn diameter(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }

    fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.x0 - slack
            && z.re <= self.x1 + slack
            && z.im >= self.y0 - slack
            && z.im <= self.y1 + slack
    }

    fn split(&self, fraction: f64) -> (Rect, Rect) {
        if self.x1 - self.x0 >= self.y1 - self.y0 {
            let x = self.x0 + fraction * (self.x1 - self.x0);
            (Rect { x1: x, ..*self }, Rect { x0: x, ..*self })
        } else {
            let y = self.y0 + fraction * (self.y1 - self.y0);
            (Rect { y1: y, ..*self }, Rect { y0: y, ..*self })
        }
    }
}

/// Split positions tried in turn; none is 1/2, so repeated halving of a
/// symmetric rectangle never lands on an axis.
const SPLITS: [f64; 4] = [0.4737, 0.5411, 0.4218, 0.5873];

fn reciprocal_gamma_pair(w1: Complex64, w2: Complex64) -> Complex64 {
    if is_pole(w1) || is_pole(w2) {
        return Complex64::new(0.0, 0.0);
    }
    (-(log_gamma(w1).unwrap() + log_gamma(w2).unwrap())).exp()
}

fn entire_characteristic(spec: &ModeSpec, kappa: f64, lambda: Complex64) -> Complex64 {
    let h = lambda * 0.5;
    let (a, b) = (spec.a(), spec.b());
    let den = reciprocal_gamma_pair(b + h, b - h);
    let num = reciprocal_gamma_pair(a + h, a - h);
    den * (2.0 * spec.gamma * LN_2).exp() - num * kappa
}

fn edge_phase(spec: &ModeSpec, kappa: f64, p: Complex64, q: Complex64) -> Result<f64> {
    let scale = (q - p).norm();
    let min_dt = 1e-11;
    let mut t: f64 = 0.0;
    let mut dt: f64 = 1.0 / 64.0;
    let mut prev = entire_characteristic(spec, kappa, p);
    let mut total = 0.0;
    let through = |z: Complex64| {
        Error::ContourThroughRoot(format!(
            "characteristic function vanishes near {:.6}{:+.6}i",
            z.re, z.im
        ))
    };
    if prev.norm() == 0.0 || !prev.norm().is_finite() {
        return Err(through(p));
    }
    while t < 1.0 {
        let step = dt.min(1.0 - t);
        let z = p + (q - p) * (t + step);
        let next = entire_characteristic(spec, kappa, z);
        if next.norm() == 0.0 || !next.norm().is_finite() {
            return Err(through(z));
        }
        let ratio = next / prev;
        let dphi = ratio.arg();
        let jump = ratio.norm().ln().abs();
        if (dphi.abs() > 0.4 || jump > 1.0) && step * scale > min_dt {
            dt = step / 2.0;
            continue;
        }
        if dphi.abs() > 0.4 {
            return Err(through(z));
        }
        total += dphi;
        prev = next;
        t += step;
        if dphi.abs() < 0.1 && jump < 0.25 {
            dt = (step * 1.5).min(0.125);
        }
    }
    Ok(total)
}

fn winding(spec: &ModeSpec, kappa: f64, r: &Rect) -> Result<usize> {
    let corners = [
        Complex64::new(r.x0, r.y0),
        Complex64::new(r.x1, r.y0),
        Complex64::new(r.x1, r.y1),
        Complex64::new(r.x0, r.y1),
    ];
    let mut phase = 0.0;
    for k in 0..4 {
        phase += edge_phase(spec, kappa, corners[k], corners[(k + 1) % 4])?;
    }
    let w = phase / (2.0 * PI);
    let rounded = w.round();
    if (w - rounded).abs() > 0.1 || rounded < 0.0 {
        return Err(Error::ContourThroughRoot(format!(
            "winding number {w:.3} is not a non-negative integer on {r:?}"
        )));
    }
    Ok(rounded as usize)
}

fn newton(spec: &ModeSpec, kappa: f64, start: Complex64, tol: f64) -> Result<Complex64> {
    let mut z = start;
    for _ in 0..50 {
        let f = symbol_at_rate(spec, z)? - kappa;
        let df = symbol_at_rate_derivative(spec, z)?;
        if df.norm() == 0.0 || !df.norm().is_finite() {
            break;
        }
        let step = f / df;
        z -= step;
        if !z.re.is_finite() || !z.im.is_finite() {
            break;
        }
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            let res = (symbol_at_rate(spec, z)? - kappa).norm();
            if res <= tol {
                return Ok(z);
            }
            break;
        }
    }
    let res = (symbol_at_rate(spec, z)? - kappa).norm();
    if res <= tol * 1e-2 {
        return Ok(z);
    }
    Err(Error::NonConvergence(format!(
        "Newton stalled near {:.6}{:+.6}i (residual {res:.3e})",
        z.re, z.im
    )))
}

struct Found {
    lambda: Complex64,
    multiplicity: usize,
}

fn isolate(
    spec: &ModeSpec,
    kappa: f64,
    rect: Rect,
    count: usize,
    tol: f64,
    depth: usize,
    out: &mut Vec<Found>,
) -> Result<()> {
    if count == 0 {
        return Ok(());
    }
    let slack = 1e-12 * rect.diameter().max(1.0);
    if count == 1 {
        let center = Complex64::new(0.5 * (rect.x0 + rect.x1), 0.5 * (rect.y0 + rect.y1));
        if let Ok(z) = newton(spec, kappa, center, tol) {
            if rect.contains(z, slack) {
                out.push(Found { lambda: z, multiplicity: 1 });
                return Ok(());
            }
        }
        if rect.diameter() < 1e-10 {
            return Err(Error::NonConvergence(format!(
                "could not polish the root isolated in {rect:?}"
            )));
        }
    } else if rect.diameter() < 1e-7 || depth > 200 {
        let center = Complex64::new(0.5 * (rect.x0 + rect.x1), 0.5 * (rect.y0 + rect.y1));
        out.push(Found { lambda: center, multiplicity: count });
        return Ok(());
    }
    let mut last_err = None;
    for &f in &SPLITS {
        let (left, right) = rect.split(f);
        match winding(spec, kappa, &left) {
            Ok(c_left) if c_left <= count => {
                isolate(spec, kappa, left, c_left, tol, depth + 1, out)?;
                return isolate(spec, kappa, right, count - c_left, tol, depth + 1, out);
            }
            Ok(c_left) => {
                last_err = Some(Error::ContourThroughRoot(format!(
                    "sub-rectangle count {c_left} exceeds parent count {count}"
                )))
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one split attempted"))
}

fn snap(x: f64, scale: f64) -> f64 {
    if x.abs() <= 1e-9 * scale {
        0.0
    } else {
        x
    }
}

fn make_root(spec: &ModeSpec, kappa: f64, lambda: Complex64, tol: f64, mult: usize) -> Result<IndicialRoot> {
    let scale = lambda.norm().max(1.0);
    let mut z = Complex64::new(snap(lambda.re, scale), snap(lambda.im, scale));
    // Re-polish on the axis the root was snapped to: F is real there, so
    // Newton never leaves it.
    if mult == 1 && (z.re == 0.0 || z.im == 0.0) {
        if let Ok(p) = newton(spec, kappa, z, tol) {
            z = Complex64::new(
                if z.re == 0.0 { 0.0 } else { p.re },
                if z.im == 0.0 { 0.0 } else { p.im },
            );
        }
    }
    let dtheta = crate::symbol::theta_analytic_derivative(spec, -Complex64::i() * z)?;
    Ok(IndicialRoot {
        m: spec.m,
        j: 0,
        sigma: z.re,
        tau: z.im,
        dtheta,
        multiplicity: mult,
    })
}

/// All roots of `Θ_m(-iλ) = κ` in `search_box`, with the default `κ`.
pub fn find_roots(spec: &ModeSpec, search_box: SearchBox, tol: f64) -> Result<RootCatalog> {
    find_roots_with_kappa(spec, spec.constants().kappa, search_box, tol)
}

pub fn find_roots_with_kappa(
    spec: &ModeSpec,
    kappa: f64,
    search_box: SearchBox,
    tol: f64,
) -> Result<RootCatalog> {
    if !(tol > 1e-12 && tol < 1e-4) {
        return Err(Error::invalid(format!("tolerance {tol} outside (1e-12, 1e-4)")));
    }
    let rect = search_box.mirrored();
    let count = winding(spec, kappa, &rect)?;
    let mut found = Vec::new();
    isolate(spec, kappa, rect, count, tol, 0, &mut found)?;

    let mut roots = Vec::new();
    for f in found {
        let root = make_root(spec, kappa, f.lambda, tol, f.multiplicity)?;
        if root.sigma >= 0.0 && root.tau >= 0.0 && search_box.contains(root.sigma, root.tau, 1e-12) {
            roots.push(root);
        }
    }
    roots.sort_by(|a, b| a.sigma.total_cmp(&b.sigma).then(a.tau.total_cmp(&b.tau)));
    roots.dedup_by(|a, b| (a.lambda() - b.lambda()).norm() <= 1e-9);
    for (j, r) in roots.iter_mut().enumerate() {
        r.j = j;
    }
    Ok(RootCatalog {
        spec: *spec,
        kappa,
        roots,
        search_box,
        winding_count: count,
    })
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut flo = f(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The root with the smallest `σ`: purely oscillatory for `m = 0`, real
/// for `m >= 1`. Found by one-dimensional bisection.
pub fn first_root(spec: &ModeSpec) -> Result<IndicialRoot> {
    let kappa = spec.constants().kappa;
    if spec.m == 0 {
        let g = |t: f64| Ok(crate::symbol::theta(spec, t)? - kappa);
        let mut hi = 1.0;
        while g(hi)? <= 0.0 {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::NonConvergence("mode-0 symbol never reaches kappa".into()));
            }
        }
        let tau = bisect(g, 0.0, hi)?;
        let lambda = Complex64::new(0.0, tau);
        let dtheta = crate::symbol::theta_analytic_derivative(spec, -Complex64::i() * lambda)?;
        return Ok(IndicialRoot { m: 0, j: 0, sigma: 0.0, tau, dtheta, multiplicity: 1 });
    }
    let g = |l: f64| Ok(symbol_at_rate(spec, Complex64::new(l, 0.0))?.re - kappa);
    let top = 2.0 * spec.b();
    let samples = 400;
    let mut prev_x = 0.0;
    let mut prev = g(0.0)?;
    for k in 1..samples {
        let x = top * k as f64 / samples as f64;
        let v = g(x)?;
        if (v > 0.0) != (prev > 0.0) {
            let sigma = bisect(g, prev_x, x)?;
            let lambda = Complex64::new(sigma, 0.0);
            let dtheta =
                crate::symbol::theta_analytic_derivative(spec, -Complex64::i() * lambda)?;
            return Ok(IndicialRoot { m: spec.m, j: 0, sigma, tau: 0.0, dtheta, multiplicity: 1 });
        }
        prev_x = x;
        prev = v;
    }
    Err(Error::NonConvergence(format!(
        "no sign change of the characteristic function on (0, {top})"
    )))
}

/// Catalog with at least `count` roots, growing the `σ` range as needed.
pub fn catalog_with(spec: &ModeSpec, count: usize, tol: f64) -> Result<RootCatalog> {
    let mut sigma_max = spec.n as f64 + 0.1;
    for _ in 0..20 {
        let b = SearchBox::new((0.0, sigma_max), (0.0, 20.0))?;
        let cat = find_roots(spec, b, tol)?;
        if cat.roots.len() >= count {
            return Ok(cat);
        }
        sigma_max += 2.37;
    }
    Err(Error::NonConvergence(format!(
        "fewer than {count} roots with sigma below {sigma_max}"
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClauseResult {
    pub clause: char,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub n: usize,
    pub m_max: usize,
    pub j_max: usize,
    pub clauses: Vec<ClauseResult>,
    pub catalogs: Vec<RootCatalog>,
    /// Whether every root with `j >= 1` that was examined has `τ = 0`.
    pub higher_roots_real: bool,
}

impl LemmaReport {
    pub fn all_passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "indicial lemma check: n = {}, m_max = {}, j_max = {}\n",
            self.n, self.m_max, self.j_max
        );
        for c in &self.clauses {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            s.push_str(&format!("clause ({}): {tag}  {}\n", c.clause, c.detail));
        }
        s.push_str(&format!(
            "observed: higher roots (j >= 1) all real = {}\n",
            self.higher_roots_real
        ));
        s
    }
}

/// Checks the four structural properties of the indicial roots for
/// `m <= m_max`, `j <= j_max`.
pub fn check_lemma(n: usize, m_max: usize, j_max: usize) -> Result<LemmaReport> {
    if m_max > 10 || j_max > 4 {
        return Err(Error::invalid("check_lemma is limited to m_max <= 10, j_max <= 4"));
    }
    let tol = 1e-10;
    let catalogs: Vec<RootCatalog> = (0..=m_max)
        .into_par_iter()
        .map(|m| catalog_with(&ModeSpec::half(n, m)?, j_max + 1, tol))
        .collect::<Result<_>>()?;
    let mut clauses = Vec::new();

    let r00 = &catalogs[0].roots[0];
    let first0 = first_root(&ModeSpec::half(n, 0)?)?;
    clauses.push(ClauseResult {
        clause: 'a',
        passed: r00.sigma == 0.0 && r00.tau > 0.0 && (r00.tau - first0.tau).abs() <= 1e-10,
        detail: format!("mode-0 first root sigma = {}, tau = {:.12}", r00.sigma, r00.tau),
    });

    if m_max >= 1 {
        let real = catalogs[1..].iter().all(|c| c.roots[0].tau == 0.0);
        let s1 = catalogs[1].roots[0].sigma;
        clauses.push(ClauseResult {
            clause: 'b',
            passed: real && (s1 - 1.0).abs() <= 1e-8,
            detail: format!("first roots real for m >= 1: {real}; sigma_0(1) = {s1:.12}"),
        });
        let sig: Vec<f64> = catalogs[1..].iter().map(|c| c.roots[0].sigma).collect();
        let increasing = sig.windows(2).all(|w| w[1] > w[0]);
        clauses.push(ClauseResult {
            clause: 'c',
            passed: increasing,
            detail: format!("sigma_0(m), m = 1..{m_max}: {sig:.6?}"),
        });
    }

    let bound = (n as f64 - 1.0) / 2.0;
    let mut worst = f64::INFINITY;
    let mut higher_real = true;
    for c in &catalogs {
        for r in c.roots.iter().skip(1).take(j_max) {
            worst = worst.min(r.sigma);
            higher_real &= r.tau == 0.0;
        }
    }
    clauses.push(ClauseResult {
        clause: 'd',
        passed: j_max == 0 || worst > bound,
        detail: if j_max == 0 {
            "no higher roots requested".to_string()
        } else {
            format!("min sigma_j over j = 1..{j_max}: {worst:.6} vs (n-1)/2 = {bound}")
        },
    });
    Ok(LemmaReport { n, m_max, j_max, clauses, catalogs, higher_roots_real: higher_real })
}
