//! Nonlinear solve of `Q(f) = c` on compact model boundaries, and the
//! discrete counterpart of uniform invertibility on the glued neck.
//!
//! Functions are zonal in the cross-section (depend on one polar angle
//! through `x = cos ϑ`) and periodic in `s`. The representation alternates
//! between a collocation grid (`s_j`, Gauss–Jacobi nodes `x_i`) and a mode
//! table (zonal degree `m`, Fourier index `k`), on which `P` is diagonal.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::line::{forward, frequency, inverse_real, LineFunction};
use crate::neck::{approximate_curvature_error, build_glued_factor, weight, NeckConfig, WeightedNormSpec};
use crate::specfun::log_gamma;
use crate::symbol::{theta, ModeSpec};

pub const RESONANCE_GAP: f64 = 1e-3;

/// Orthonormal zonal polynomials on `S^d` and their Gauss quadrature, for
/// the weight `(1 - x²)^{(d-2)/2}` on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct ZonalBasis {
    pub sphere_dim: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `p[m][i] = p_m(x_i)`.
    pub p: Vec<Vec<f64>>,
}

impl ZonalBasis {
    pub fn new(sphere_dim: usize, count: usize) -> Result<Self> {
        if sphere_dim < 1 || count < 1 {
            return Err(Error::invalid(format!("zonal basis on S^{sphere_dim} with {count} nodes")));
        }
        let a = (sphere_dim as f64 - 2.0) / 2.0;
        let b = |k| jacobi_b(a, k);
        let mu0 = (PI.ln() / 2.0 + lgamma_real(a + 1.0)? - lgamma_real(a + 1.5)?).exp();
        let jac = DMatrix::from_fn(count, count, |i, j| {
            if i + 1 == j || j + 1 == i {
                b(i.max(j)).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(jac);
        let mut order: Vec<usize> = (0..count).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let nodes: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let weights: Vec<f64> =
            order.iter().map(|&i| mu0 * eig.eigenvectors[(0, i)].powi(2)).collect();
        let mut p = vec![vec![1.0 / mu0.sqrt(); count]];
        for m in 1..count {
            let row = (0..count)
                .map(|i| {
                    let prev2 = if m >= 2 { b(m - 1).sqrt() * p[m - 2][i] } else { 0.0 };
                    (nodes[i] * p[m - 1][i] - prev2) / b(m).sqrt()
                })
                .collect();
            p.push(row);
        }
        Ok(ZonalBasis { sphere_dim, nodes, weights, p })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn project(&self, values: &[f64]) -> Vec<f64> {
        self.p
            .iter()
            .map(|pm| pm.iter().zip(&self.weights).zip(values).map(|((p, w), v)| p * w * v).sum())
            .collect()
    }

    pub fn evaluate(&self, coeffs: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| coeffs.iter().zip(&self.p).map(|(c, pm)| c * pm[i]).sum())
            .collect()
    }

    /// Degree-`m` zonal harmonic scaled to sup norm 1 (attained at the pole).
    pub fn unit_harmonic(&self, m: usize) -> Vec<f64> {
        let mut coeffs = vec![0.0; self.len()];
        coeffs[m] = 1.0;
        let at_pole = self.value_at(m, 1.0);
        self.evaluate(&coeffs).iter().map(|v| v / at_pole).collect()
    }

    /// `p_m(x)` by the three-term recurrence.
    pub fn value_at(&self, m: usize, x: f64) -> f64 {
        let a = (self.sphere_dim as f64 - 2.0) / 2.0;
        let b = |k| jacobi_b(a, k);
        let (mut prev, mut cur) = (0.0, self.p[0][0]);
        for k in 1..=m {
            let next = (x * cur - if k >= 2 { b(k - 1).sqrt() * prev } else { 0.0 }) / b(k).sqrt();
            prev = cur;
            cur = next;
        }
        cur
    }
}

/// Squared off-diagonal of the Jacobi matrix for `(1 - x²)^a`; the
/// Chebyshev limit `a = -1/2` is taken explicitly at `k = 1`.
fn jacobi_b(a: f64, k: usize) -> f64 {
    let k = k as f64;
    if k == 1.0 && (a + 0.5).abs() < 1e-14 {
        0.5
    } else {
        k * (k + 2.0 * a) / ((2.0 * k + 2.0 * a + 1.0) * (2.0 * k + 2.0 * a - 1.0))
    }
}

fn lgamma_real(x: f64) -> Result<f64> {
    Ok(log_gamma(Complex64::new(x, 0.0))?.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// `R/LZ × S^{n-1}` with the cylinder symbol.
    PeriodicCylinder,
    /// Round `S^n` bounding the flat unit ball; no `s` direction.
    BallBoundary,
}

/// A diagonalized model boundary: collocation grid plus the symbol of `P`.
#[derive(Debug, Clone)]
pub struct ModeModel {
    pub kind: ModelKind,
    pub n: usize,
    pub period: f64,
    pub m_max: usize,
    pub n_s: usize,
    pub basis: ZonalBasis,
    /// `symbol[m][k]`, the eigenvalue of `P` on degree `m`, Fourier index `k`.
    pub symbol: Vec<Vec<f64>>,
    /// `Q` of the model, `P(1)`.
    pub c: f64,
    /// `(n+1)/(n-1) c`.
    pub kappa: f64,
}

/// Coefficients indexed by zonal degree and Fourier index.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTable {
    pub modes: usize,
    pub freqs: usize,
    pub data: Vec<Complex64>,
}

impl ModeTable {
    pub fn zeros(modes: usize, freqs: usize) -> Self {
        ModeTable { modes, freqs, data: vec![Complex64::new(0.0, 0.0); modes * freqs] }
    }

    pub fn get(&self, m: usize, k: usize) -> Complex64 {
        self.data[m * self.freqs + k]
    }

    pub fn set(&mut self, m: usize, k: usize, z: Complex64) {
        self.data[m * self.freqs + k] = z;
    }

    pub fn max_abs_diff(&self, other: &ModeTable) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

pub fn conformal_power(n: usize) -> f64 {
    (n as f64 + 1.0) / (n as f64 - 1.0)
}

impl ModeModel {
    pub fn cylinder(n: usize, period: f64, m_max: usize, n_s: usize) -> Result<Self> {
        if n < 2 || !(period > 0.0 && period.is_finite()) || n_s < 4 {
            return Err(Error::invalid(format!("cylinder n={n}, L={period}, N_s={n_s}")));
        }
        let basis = ZonalBasis::new(n - 1, m_max + 1)?;
        let ds = period / n_s as f64;
        let symbol = (0..=m_max)
            .map(|m| {
                let spec = ModeSpec::half(n, m)?;
                (0..n_s).map(|k| theta(&spec, frequency(k, n_s, ds))).collect()
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let c = ModeSpec::half(n, 0)?.constants().c;
        Ok(ModeModel {
            kind: ModelKind::PeriodicCylinder,
            n,
            period,
            m_max,
            n_s,
            basis,
            symbol,
            c,
            kappa: conformal_power(n) * c,
        })
    }

    /// Default period `2π/τ_0 (1 + 1/√2)`, an irrational multiple of the
    /// resonant wavelength of mode 0.
    pub fn default_period(n: usize) -> Result<f64> {
        let tau0 = crate::indicial::first_root(&ModeSpec::half(n, 0)?)?.tau;
        Ok(2.0 * PI / tau0 * (1.0 + 1.0 / 2f64.sqrt()))
    }

    pub fn ball(n: usize, k_max: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("dimension n = {n} must be at least 2")));
        }
        let basis = ZonalBasis::new(n, k_max + 1)?;
        let h = (n as f64 - 1.0) / 2.0;
        let symbol = (0..=k_max).map(|k| vec![k as f64 + h]).collect();
        Ok(ModeModel {
            kind: ModelKind::BallBoundary,
            n,
            period: 0.0,
            m_max: k_max,
            n_s: 1,
            basis,
            symbol,
            c: h,
            kappa: conformal_power(n) * h,
        })
    }

    pub fn grid_len(&self) -> usize {
        self.n_s * self.basis.len()
    }

    pub fn ds(&self) -> f64 {
        if self.n_s > 1 {
            self.period / self.n_s as f64
        } else {
            1.0
        }
    }

    pub fn s(&self, j: usize) -> f64 {
        j as f64 * self.ds()
    }

    /// Eigenvalue of the linearization `P - κ` on `(m, k)`.
    pub fn linearized_symbol(&self, m: usize, k: usize) -> f64 {
        self.symbol[m][k] - self.kappa
    }

    /// `min |P - κ|` over the truncated basis and where it is attained.
    pub fn resonance_gap(&self) -> (f64, usize, usize) {
        let mut best = (f64::INFINITY, 0, 0);
        for m in 0..=self.m_max {
            for k in 0..self.n_s {
                let g = self.linearized_symbol(m, k).abs();
                if g < best.0 {
                    best = (g, m, k);
                }
            }
        }
        best
    }

    /// Grid values `g[j n_x + i] = f(s_j, x_i)` to the mode table.
    pub fn to_table(&self, grid: &[f64]) -> ModeTable {
        let nx = self.basis.len();
        let modes = self.m_max + 1;
        let mut along_s = vec![vec![0.0; self.n_s]; modes];
        for j in 0..self.n_s {
            let c = self.basis.project(&grid[j * nx..(j + 1) * nx]);
            for m in 0..modes {
                along_s[m][j] = c[m];
            }
        }
        let mut table = ModeTable::zeros(modes, self.n_s);
        for (m, row) in along_s.iter().enumerate() {
            for (k, z) in forward(row).into_iter().enumerate() {
                table.set(m, k, z);
            }
        }
        table
    }

    pub fn to_grid(&self, table: &ModeTable) -> Vec<f64> {
        let nx = self.basis.len();
        let modes = self.m_max + 1;
        let along_s: Vec<Vec<f64>> = (0..modes)
            .map(|m| inverse_real((0..self.n_s).map(|k| table.get(m, k)).collect()))
            .collect();
        let mut grid = vec![0.0; self.grid_len()];
        for j in 0..self.n_s {
            let coeffs: Vec<f64> = (0..modes).map(|m| along_s[m][j]).collect();
            grid[j * nx..(j + 1) * nx].copy_from_slice(&self.basis.evaluate(&coeffs));
        }
        grid
    }

    fn diagonal(&self, table: &ModeTable, f: impl Fn(usize, usize) -> f64) -> ModeTable {
        let mut out = table.clone();
        for m in 0..table.modes {
            for k in 0..table.freqs {
                out.set(m, k, table.get(m, k) * f(m, k));
            }
        }
        out
    }

    pub fn apply_p(&self, table: &ModeTable) -> ModeTable {
        self.diagonal(table, |m, k| self.symbol[m][k])
    }

    /// Grid function `a(s) E(x)` with `E` the sup-normalized degree-`m` harmonic.
    pub fn product_grid(&self, m: usize, a: impl Fn(f64) -> f64) -> Vec<f64> {
        let e = self.basis.unit_harmonic(m);
        let nx = self.basis.len();
        (0..self.grid_len()).map(|g| a(self.s(g / nx)) * e[g % nx]).collect()
    }
}

/// `f = 1 + v` on a model boundary.
#[derive(Debug, Clone)]
pub struct PeriodicCylinderState {
    pub model: ModeModel,
    pub f: ModeTable,
}

impl PeriodicCylinderState {
    pub fn from_grid(model: ModeModel, grid: &[f64]) -> Self {
        let f = model.to_table(grid);
        PeriodicCylinderState { model, f }
    }

    pub fn constant(model: ModeModel, t: f64) -> Self {
        let grid = vec![t; model.grid_len()];
        Self::from_grid(model, &grid)
    }

    /// `1 + amp cos(2π s/L) E_m` (no `s` dependence on the ball).
    pub fn perturbed(model: ModeModel, amp: f64, m: usize) -> Result<Self> {
        if m > model.m_max {
            return Err(Error::invalid(format!("mode {m} above m_max = {}", model.m_max)));
        }
        let period = model.period;
        let kind = model.kind;
        let v = model.product_grid(m, |s| match kind {
            ModelKind::PeriodicCylinder => (2.0 * PI * s / period).cos(),
            ModelKind::BallBoundary => 1.0,
        });
        let grid: Vec<f64> = v.iter().map(|v| 1.0 + amp * v).collect();
        Ok(Self::from_grid(model, &grid))
    }

    pub fn grid(&self) -> Vec<f64> {
        self.model.to_grid(&self.f)
    }
}

/// `Q(f) = f^{-(n+1)/(n-1)} P f`, evaluated on the grid.
pub fn apply_q_grid(model: &ModeModel, f_grid: &[f64]) -> Result<Vec<f64>> {
    let min = f_grid.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        return Err(Error::NonPositiveConformalFactor { min });
    }
    let p = conformal_power(model.n);
    let pf = model.to_grid(&model.apply_p(&model.to_table(f_grid)));
    Ok(f_grid.iter().zip(pf).map(|(f, pf)| f.powf(-p) * pf).collect())
}

pub fn apply_q(state: &PeriodicCylinderState) -> Result<ModeTable> {
    let q = apply_q_grid(&state.model, &state.grid())?;
    Ok(state.model.to_table(&q))
}

/// `(P - κ) v`, diagonal on the truncated basis.
pub fn apply_linearized(model: &ModeModel, v: &ModeTable) -> ModeTable {
    model.diagonal(v, |m, k| model.linearized_symbol(m, k))
}

pub fn solve_linearized(model: &ModeModel, h: &ModeTable) -> Result<ModeTable> {
    let (gap, m, k) = model.resonance_gap();
    if gap <= RESONANCE_GAP {
        return Err(Error::Resonance(format!(
            "linearized symbol {gap:.3e} at degree {m}, frequency index {k}"
        )));
    }
    Ok(model.diagonal(h, |m, k| 1.0 / model.linearized_symbol(m, k)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IterationMethod {
    /// `v ← v - L^{-1}(Q(1+v) - c)` with the linearization frozen at 1.
    #[default]
    FixedPoint,
    /// Full Newton, the Jacobian inverted by preconditioned GMRES.
    Newton,
}

impl std::str::FromStr for IterationMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-point" => Ok(IterationMethod::FixedPoint),
            "newton" => Ok(IterationMethod::Newton),
            _ => Err(Error::invalid(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub method: IterationMethod,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub final_f: PeriodicCylinderState,
}

impl NewtonReport {
    /// Ratios `r_{k+1} / r_k²` over the last three steps above the
    /// round-off floor.
    pub fn quadratic_ratios(&self, floor: f64) -> Vec<f64> {
        let r = &self.residual_history;
        let ratios: Vec<f64> = r
            .windows(2)
            .filter(|w| w[1] > floor)
            .map(|w| w[1] / (w[0] * w[0]))
            .collect();
        ratios[ratios.len().saturating_sub(3)..].to_vec()
    }

    pub fn linear_ratios(&self) -> Vec<f64> {
        self.residual_history.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Sup norm on the periodic grid (the weight is 1 on the model cylinder),
/// plus the `s` difference quotient for `k = 1`.
pub fn grid_norm(model: &ModeModel, grid: &[f64], norm: &WeightedNormSpec) -> f64 {
    let sup = grid.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if norm.k == 0 || model.n_s < 2 {
        return sup;
    }
    let nx = model.basis.len();
    let mut lip = 0.0_f64;
    for j in 0..model.n_s {
        let jn = (j + 1) % model.n_s;
        for i in 0..nx {
            lip = lip.max((grid[jn * nx + i] - grid[j * nx + i]).abs() / model.ds());
        }
    }
    sup + lip
}

pub fn newton_solve(
    state0: &PeriodicCylinderState,
    norm: &WeightedNormSpec,
    method: IterationMethod,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonReport> {
    let model = &state0.model;
    let p = conformal_power(model.n);
    let mut f = state0.grid();
    let mut history = Vec::new();
    let mut growth = 0;
    for it in 0..=max_iter {
        let q = apply_q_grid(model, &f)?;
        let r: Vec<f64> = q.iter().map(|q| q - model.c).collect();
        let res = grid_norm(model, &r, norm);
        if let Some(&last) = history.last() {
            growth = if res > last { growth + 1 } else { 0 };
        }
        history.push(res);
        if res <= tol {
            return Ok(report(state0, method, it, history, true, &f));
        }
        if growth >= 3 || !res.is_finite() {
            return Err(Error::Diverged(format!("residual history {history:?}")));
        }
        if it == max_iter {
            break;
        }
        let step = match method {
            IterationMethod::FixedPoint => {
                model.to_grid(&solve_linearized(model, &model.to_table(&r))?)
            }
            IterationMethod::Newton => {
                let pf = model.to_grid(&model.apply_p(&model.to_table(&f)));
                // J v = f^{-p} P v - p f^{-p-1} (P f) v
                let a: Vec<f64> = f.iter().map(|f| f.powf(-p)).collect();
                let b: Vec<f64> = f.iter().zip(&pf).map(|(f, pf)| p * f.powf(-p - 1.0) * pf).collect();
                let jac = |v: &[f64]| -> Vec<f64> {
                    let pv = model.to_grid(&model.apply_p(&model.to_table(v)));
                    (0..v.len()).map(|i| a[i] * pv[i] - b[i] * v[i]).collect()
                };
                let precond = |v: &[f64]| -> Result<Vec<f64>> {
                    Ok(model.to_grid(&solve_linearized(model, &model.to_table(v))?))
                };
                gmres(jac, precond, &r, 1e-13, 60, 10)?
            }
        };
        for (fi, di) in f.iter_mut().zip(step) {
            *fi -= di;
        }
    }
    Ok(report(state0, method, max_iter, history, false, &f))
}

fn report(
    state0: &PeriodicCylinderState,
    method: IterationMethod,
    iterations: usize,
    residual_history: Vec<f64>,
    converged: bool,
    f: &[f64],
) -> NewtonReport {
    NewtonReport {
        method,
        iterations,
        residual_history,
        converged,
        final_f: PeriodicCylinderState::from_grid(state0.model.clone(), f),
    }
}

/// Right-preconditioned restarted GMRES for `A x = b`.
fn gmres(
    a: impl Fn(&[f64]) -> Vec<f64>,
    m_inv: impl Fn(&[f64]) -> Result<Vec<f64>>,
    b: &[f64],
    tol: f64,
    restart: usize,
    cycles: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    for _ in 0..cycles {
        let ax = a(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
        let beta = norm(&r);
        if beta <= tol * b_norm {
            return Ok(x);
        }
        let mut basis = vec![r.iter().map(|v| v / beta).collect::<Vec<f64>>()];
        let mut h = DMatrix::<f64>::zeros(restart + 1, restart);
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..restart {
            let mut w = a(&m_inv(&basis[j])?);
            for (i, q) in basis.iter().enumerate() {
                let hij: f64 = w.iter().zip(q).map(|(w, q)| w * q).sum();
                h[(i, j)] = hij;
                for (wk, qk) in w.iter_mut().zip(q) {
                    *wk -= hij * qk;
                }
            }
            let wn = norm(&w);
            h[(j + 1, j)] = wn;
            for i in 0..j {
                let t = cs[i] * h[(i, j)] + sn[i] * h[(i + 1, j)];
                h[(i + 1, j)] = -sn[i] * h[(i, j)] + cs[i] * h[(i + 1, j)];
                h[(i, j)] = t;
            }
            let d = h[(j, j)].hypot(h[(j + 1, j)]);
            cs[j] = h[(j, j)] / d;
            sn[j] = h[(j + 1, j)] / d;
            h[(j, j)] = d;
            h[(j + 1, j)] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            if g[j + 1].abs() <= tol * b_norm || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let s: f64 = (i + 1..used).map(|k| h[(i, k)] * y[k]).sum();
            y[i] = (g[i] - s) / h[(i, i)];
        }
        let mut z = vec![0.0; n];
        for (yi, q) in y.iter().zip(&basis) {
            for (zk, qk) in z.iter_mut().zip(q) {
                *zk += yi * qk;
            }
        }
        for (xk, zk) in x.iter_mut().zip(m_inv(&z)?) {
            *xk += zk;
        }
    }
    let ax = a(&x);
    let res = b.iter().zip(&ax).map(|(b, ax)| (b - ax).powi(2)).sum::<f64>().sqrt();
    if res <= 1e3 * tol * b_norm {
        Ok(x)
    } else {
        Err(Error::NonConvergence(format!("GMRES residual {res:.3e} of {b_norm:.3e}")))
    }
}

/// Dense `W^{-μ} (u^{-p} P_m u - p Q) W^{μ}` on a periodic line grid, the
/// linearization of `Q` at 1 for the metric with boundary factor `u`.
pub fn assemble_linearized(
    n: usize,
    m: usize,
    factor: &LineFunction,
    curvature: &[f64],
    weight: &[f64],
    mu: f64,
) -> Result<DMatrix<f64>> {
    let len = factor.len();
    let spec = ModeSpec::half(n, m)?;
    let mult = (0..len)
        .map(|k| Ok(Complex64::new(theta(&spec, frequency(k, len, factor.ds))?, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    let column = inverse_real(mult);
    let p = conformal_power(n);
    Ok(DMatrix::from_fn(len, len, |i, j| {
        let conv = column[(i + len - j) % len];
        let mut a = factor.values[i].powf(-p) * conv * factor.values[j];
        if i == j {
            a -= p * curvature[i];
        }
        weight[i].powf(-mu) * a * weight[j].powf(mu)
    }))
}

pub fn smallest_singular_value(a: &DMatrix<f64>) -> f64 {
    a.clone().singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertibilityRow {
    pub epsilon: f64,
    pub sigma_min: f64,
    pub mode: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertibilityReport {
    pub mu: f64,
    pub modes: Vec<usize>,
    pub rows: Vec<InvertibilityRow>,
    /// Least-squares slope of `log σ_min` against `log ε`.
    pub slope: f64,
}

/// Grid used by the invertibility study.
pub fn study_config(epsilon: f64) -> Result<NeckConfig> {
    let mut cfg = NeckConfig::new(epsilon)?;
    cfg.ds = 0.1;
    cfg.pad = 4.0;
    Ok(cfg)
}

pub fn uniform_invertibility_study(
    n: usize,
    eps_list: &[f64],
    mu: f64,
    modes: &[usize],
) -> Result<InvertibilityReport> {
    if eps_list.len() < 2 || modes.is_empty() {
        return Err(Error::invalid("need at least two epsilons and one mode"));
    }
    let norm = WeightedNormSpec::new(mu, 0)?;
    let rows = eps_list
        .par_iter()
        .map(|&epsilon| {
            let cfg = study_config(epsilon)?;
            let glued = build_glued_factor(&cfg, n)?;
            let curv = approximate_curvature_error(&cfg, n, &WeightedNormSpec::new(mu.min(-1e-3), 0)?)?;
            let w: Vec<f64> = (0..glued.factor.len()).map(|k| weight(&cfg, glued.factor.s(k))).collect();
            let mut best = InvertibilityRow { epsilon, sigma_min: f64::INFINITY, mode: 0 };
            for &m in modes {
                let a = assemble_linearized(n, m, &glued.factor, &curv.q.values, &w, norm.mu)?;
                let s = smallest_singular_value(&a);
                if s < best.sigma_min {
                    best = InvertibilityRow { epsilon, sigma_min: s, mode: m };
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.epsilon.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.sigma_min.ln()).collect();
    let slope = linear_slope(&xs, &ys);
    Ok(InvertibilityReport { mu, modes: modes.to_vec(), rows, slope })
}

pub fn linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Singular values of the ball linearization on the truncated spectrum,
/// with the exact kernel degrees reported separately.
pub fn ball_spectrum(n: usize, k_max: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    let model = ModeModel::ball(n, k_max)?;
    let eig: Vec<f64> = (0..=k_max).map(|k| model.linearized_symbol(k, 0)).collect();
    let kernel = (0..=k_max).filter(|&k| eig[k] == 0.0).collect();
    Ok((eig, kernel))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_quadrature() {
        // S^2: weight 1 on [-1, 1]
        let b = ZonalBasis::new(2, 5).unwrap();
        let total: f64 = b.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-13);
        // p_1 = sqrt(3/2) x
        for (i, x) in b.nodes.iter().enumerate() {
            assert!((b.p[1][i] - (1.5f64).sqrt() * x).abs() < 1e-13);
        }
    }

    #[test]
    fn discrete_orthonormality() {
        for d in 1..=5 {
            let b = ZonalBasis::new(d, 7).unwrap();
            for m in 0..7 {
                for l in 0..7 {
                    let ip: f64 = (0..7).map(|i| b.weights[i] * b.p[m][i] * b.p[l][i]).sum();
                    let want = if m == l { 1.0 } else { 0.0 };
                    assert!((ip - want).abs() < 1e-12, "d={d} m={m} l={l}: {ip}");
                }
            }
        }
    }

    #[test]
    fn chebyshev_case_for_circle() {
        // S^1: zonal degree m is cos(m ϑ), so p_2 ∝ T_2 = 2x² - 1
        let b = ZonalBasis::new(1, 4).unwrap();
        let e = b.unit_harmonic(2);
        for (i, x) in b.nodes.iter().enumerate() {
            assert!((e[i] - (2.0 * x * x - 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn grid_table_roundtrip() {
        let model = ModeModel::cylinder(3, 7.0, 4, 32).unwrap();
        let g: Vec<f64> = (0..model.grid_len()).map(|i| ((i * 37) % 11) as f64 * 0.1).collect();
        let back = model.to_grid(&model.to_table(&g));
        for (a, b) in g.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gmres_small_system() {
        let a = |v: &[f64]| vec![4.0 * v[0] + v[1], v[0] + 3.0 * v[1]];
        let x = gmres(a, |v| Ok(v.to_vec()), &[1.0, 2.0], 1e-14, 5, 2).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-12);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-12);
    }
}
