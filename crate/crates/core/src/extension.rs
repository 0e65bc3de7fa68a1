//! Dirichlet-to-Neumann maps computed from the bulk extension problem.
//!
//! On the model cylinder the extension of `e^{iξs} Y_m` is
//! `ψ(φ) e^{iξs} Y_m`, where `φ ∈ (0, π/2]` is the polar angle on the
//! hemisphere cross-section and
//!
//! ```text
//! -(sin^{n-1}φ ψ')' + sin^{n-1}φ (μ_m / sin²φ + ξ² + (n-1)²/4) ψ = 0,
//! ψ(π/2) = 1, ψ regular at 0.
//! ```
//!
//! The DtN value is `ψ'(π/2)`; the equator is totally geodesic, so there is
//! no mean-curvature term. The equation is discretized in flux form with
//! exact cell integrals of the coefficients, which is second order and
//! keeps the coordinate singularity at `φ = 0` out of every quotient.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::symbol::ModeSpec;

pub const DEFAULT_PHI_GRID: usize = 2048;
pub const MIN_PHI_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Second-order finite volumes on a uniform grid.
    FiniteVolume,
    /// Richardson extrapolation of the finite-volume values at `N` and `2N`.
    Extrapolated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfCylinderProblem {
    pub spec: ModeSpec,
    pub xi: f64,
    pub phi_grid: usize,
    pub scheme: Scheme,
}

impl HalfCylinderProblem {
    pub fn new(spec: ModeSpec, xi: f64) -> Self {
        HalfCylinderProblem { spec, xi, phi_grid: DEFAULT_PHI_GRID, scheme: Scheme::FiniteVolume }
    }

    pub fn with_grid(self, phi_grid: usize) -> Self {
        HalfCylinderProblem { phi_grid, ..self }
    }

    pub fn with_scheme(self, scheme: Scheme) -> Self {
        HalfCylinderProblem { scheme, ..self }
    }

    /// `(n-1)²/4`, the potential of the product metric in the extension
    /// equation.
    pub fn potential(&self) -> f64 {
        let n = self.spec.n as f64;
        (n - 1.0).powi(2) / 4.0
    }
}

const GAUSS_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS_W: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

fn integrate(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    GAUSS_X.iter().zip(GAUSS_W).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// `∫_a^b sin^p φ dφ`; exact for `p = -1, 0`.
fn sin_power_integral(p: i32, a: f64, b: f64) -> f64 {
    match p {
        0 => b - a,
        -1 => ((b / 2.0).tan() / (a / 2.0).tan()).ln(),
        _ => integrate(a, b, |x| x.sin().powi(p)),
    }
}

/// Solves a tridiagonal system in place (Thomas algorithm).
fn thomas(lower: &[f64], diag: &mut [f64], upper: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    for i in 1..n {
        if diag[i - 1] == 0.0 || !diag[i - 1].is_finite() {
            return Err(Error::SingularBvp(format!("zero pivot at row {}", i - 1)));
        }
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    if diag[n - 1] == 0.0 || !diag[n - 1].is_finite() {
        return Err(Error::SingularBvp("zero pivot in the last row".into()));
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
    Ok(())
}

/// The radial profile `ψ` on the nodes `φ_i = i π/(2N)` and the DtN value.
pub fn solve_profile(prob: &HalfCylinderProblem) -> Result<(Vec<f64>, f64)> {
    let n_cells = prob.phi_grid;
    if n_cells < MIN_PHI_GRID {
        return Err(Error::ResolutionTooCoarse(format!(
            "phi_grid = {n_cells} < {MIN_PHI_GRID}"
        )));
    }
    if !prob.xi.is_finite() {
        return Err(Error::invalid("frequency must be finite"));
    }
    let dim = prob.spec.n as i32;
    let mu = prob.spec.mu();
    let q = prob.xi * prob.xi + prob.potential();
    let h = FRAC_PI_2 / n_cells as f64;
    let face_w = |i: usize| ((i as f64 + 0.5) * h).sin().powi(dim - 1) / h;
    let reaction = |a: f64, b: f64| {
        let mut r = q * sin_power_integral(dim - 1, a, b);
        if mu != 0.0 {
            r += mu * sin_power_integral(dim - 3, a, b);
        }
        r
    };

    // Unknowns ψ_0 .. ψ_{N-1}; ψ_N = 1.
    let n = n_cells;
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    if prob.spec.m == 0 {
        let w = face_w(0);
        diag[0] = w + reaction(0.0, 0.5 * h);
        upper[0] = -w;
    } else {
        diag[0] = 1.0;
    }
    for i in 1..n {
        let (wl, wr) = (face_w(i - 1), face_w(i));
        let a = (i as f64 - 0.5) * h;
        lower[i] = -wl;
        diag[i] = wl + wr + reaction(a, a + h);
        if i + 1 < n {
            upper[i] = -wr;
        } else {
            rhs[i] = wr;
        }
    }
    thomas(&lower, &mut diag, &upper, &mut rhs)?;
    let mut psi = rhs;
    psi.push(1.0);
    let last = FRAC_PI_2 - 0.5 * h;
    let dtn = face_w(n - 1) * (psi[n] - psi[n - 1]) + reaction(last, FRAC_PI_2) * psi[n];
    if !dtn.is_finite() {
        return Err(Error::SingularBvp("non-finite boundary flux".into()));
    }
    Ok((psi, dtn))
}

/// `P_{g_0}` on the mode `(m, ξ)`, computed from the extension problem.
pub fn dtn_cylinder(prob: &HalfCylinderProblem) -> Result<f64> {
    match prob.scheme {
        Scheme::FiniteVolume => Ok(solve_profile(prob)?.1),
        Scheme::Extrapolated => {
            let coarse = solve_profile(prob)?.1;
            let fine = solve_profile(&prob.with_grid(2 * prob.phi_grid))?.1;
            Ok((4.0 * fine - coarse) / 3.0)
        }
    }
}

/// Secondary path for `n = 2`: the full two-dimensional extension problem on
/// the hemisphere in `(φ, θ)` with boundary data `cos(mθ)`, solved by
/// finite volumes and conjugate gradients, then projected back on `cos(mθ)`.
pub fn dtn_hemisphere_2d(m: usize, xi: f64, n_phi: usize, n_theta: usize) -> Result<f64> {
    if n_phi < 16 || n_theta < 8 {
        return Err(Error::ResolutionTooCoarse(format!("{n_phi} x {n_theta} grid")));
    }
    let q = xi * xi + 0.25;
    let h = FRAC_PI_2 / n_phi as f64;
    let dt = 2.0 * PI / n_theta as f64;
    let boundary: Vec<f64> = (0..n_theta).map(|j| (m as f64 * j as f64 * dt).cos()).collect();
    // Unknowns: pole (index 0) then rings i = 1..n_phi-1, each with n_theta nodes.
    let rings = n_phi - 1;
    let size = 1 + rings * n_theta;
    let idx = |i: usize, j: usize| 1 + (i - 1) * n_theta + (j % n_theta);
    let face_phi = |i: usize| ((i as f64 + 0.5) * h).sin() * dt / h;
    let face_theta = |i: usize| sin_power_integral(-1, (i as f64 - 0.5) * h, (i as f64 + 0.5) * h) / dt;
    let cell_q = |i: usize| q * sin_power_integral(1, (i as f64 - 0.5) * h, (i as f64 + 0.5) * h) * dt;
    let pole_q = q * n_theta as f64 * dt * (1.0 - (0.5 * h).cos());

    // A x for the symmetric positive definite operator on interior unknowns.
    let apply = |x: &[f64], y: &mut [f64]| {
        let f0 = face_phi(0);
        y[0] = pole_q * x[0];
        for j in 0..n_theta {
            y[0] += f0 * (x[0] - x[idx(1, j)]);
        }
        for i in 1..=rings {
            let (fl, fr, ft, r) = (face_phi(i - 1), face_phi(i), face_theta(i), cell_q(i));
            for j in 0..n_theta {
                let c = x[idx(i, j)];
                let inner = if i == 1 { x[0] } else { x[idx(i - 1, j)] };
                let outer = if i < rings { x[idx(i + 1, j)] } else { 0.0 };
                let west = x[idx(i, j + n_theta - 1)];
                let east = x[idx(i, j + 1)];
                y[idx(i, j)] = r * c + fl * (c - inner) + fr * (c - outer)
                    + ft * (2.0 * c - west - east);
            }
        }
    };
    let mut b = vec![0.0; size];
    for j in 0..n_theta {
        b[idx(rings, j)] = face_phi(rings) * boundary[j];
    }
    let x = conjugate_gradient(apply, &b, 1e-13, 20 * size)?;

    // Boundary flux per node, then projection on cos(mθ).
    let (last, fr) = (FRAC_PI_2 - 0.5 * h, face_phi(rings));
    let half_cell = q * sin_power_integral(1, last, FRAC_PI_2) * dt;
    let half_theta = sin_power_integral(-1, last, FRAC_PI_2) / dt;
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..n_theta {
        let u = boundary[j];
        let lap_theta = half_theta * (2.0 * u - boundary[(j + n_theta - 1) % n_theta] - boundary[(j + 1) % n_theta]);
        let flux = fr * (u - x[idx(rings, j)]) + half_cell * u + lap_theta;
        num += flux * u;
        den += u * u * dt;
    }
    Ok(num / den)
}

fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let target = tol * tol * rr.max(f64::MIN_POSITIVE);
    for _ in 0..max_iter {
        if rr <= target {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::SingularBvp(format!("conjugate gradients did not converge in {max_iter} steps")))
}

/// The flat unit ball in `R^{n+1}`, whose boundary is the round `S^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BallModel {
    pub n: usize,
    pub k_max: usize,
}

impl BallModel {
    pub fn new(n: usize, k_max: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("dimension n = {n} must be at least 2")));
        }
        Ok(BallModel { n, k_max })
    }

    /// Boundary curvature of the ball, the degree-0 eigenvalue.
    pub fn q_curvature(&self) -> f64 {
        (self.n as f64 - 1.0) / 2.0
    }
}

/// `k + (n-1)/2`: normal derivative of `r^k Y_k` plus the mean-curvature term.
pub fn dtn_ball_eigenvalue(model: &BallModel, k: usize) -> Result<f64> {
    if k > model.k_max {
        return Err(Error::invalid(format!("degree {k} above k_max = {}", model.k_max)));
    }
    Ok(k as f64 + (model.n as f64 - 1.0) / 2.0)
}

/// Eigenvalue of the linearization `P - (n+1)/(n-1) Q` at degree `k`.
pub fn ball_linearized_eigenvalue(model: &BallModel, k: usize) -> Result<f64> {
    let n = model.n as f64;
    Ok(dtn_ball_eigenvalue(model, k)? - (n + 1.0) / (n - 1.0) * model.q_curvature())
}

/// Degrees at which the linearization on the ball boundary vanishes.
pub fn ball_kernel_degrees(model: &BallModel) -> Vec<usize> {
    (0..=model.k_max)
        .filter(|&k| ball_linearized_eigenvalue(model, k).map(|e| e == 0.0).unwrap_or(false))
        .collect()
}
