//! Fourier symbol of the conformal half-Laplacian on the model cylinder.
//!
//! On the degree-`m` spherical-harmonic mode of `R x S^{n-1}` the operator
//! acts as the multiplier
//!
//! ```text
//! Θ_m(ξ) = 2^{2γ} |Γ(A + iξ/2)|² / |Γ(B + iξ/2)|²
//! ```
//!
//! and `theta_analytic` is its continuation off the real axis. Throughout the
//! crate the exponent convention is `v = e^{λ s}  <=>  ξ = -iλ`, so that the
//! characteristic function of the mode operator is `F(λ) = Θ_m(-iλ) - κ`.

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::{digamma, is_pole, log_gamma};

/// `(n, γ, m)`: boundary dimension, order of the operator, harmonic degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    pub n: usize,
    pub gamma: f64,
    pub m: usize,
}

impl ModeSpec {
    pub fn new(n: usize, gamma: f64, m: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("dimension n = {n} must be at least 2")));
        }
        if !(gamma > 0.0 && gamma < n as f64 / 2.0) {
            return Err(Error::invalid(format!(
                "order gamma = {gamma} must lie in (0, {})",
                n as f64 / 2.0
            )));
        }
        Ok(ModeSpec { n, gamma, m })
    }

    /// The half-Laplacian case used by the gluing pipeline.
    pub fn half(n: usize, m: usize) -> Result<Self> {
        Self::new(n, 0.5, m)
    }

    pub fn with_mode(self, m: usize) -> Self {
        ModeSpec { m, ..self }
    }

    pub fn a(&self) -> f64 {
        0.5 + self.gamma / 2.0 + (self.n as f64 / 2.0 + self.m as f64 - 1.0) / 2.0
    }

    pub fn b(&self) -> f64 {
        0.5 - self.gamma / 2.0 + (self.n as f64 / 2.0 + self.m as f64 - 1.0) / 2.0
    }

    /// Eigenvalue `m(m+n-2)` of the Laplacian on `S^{n-1}`.
    pub fn mu(&self) -> f64 {
        (self.m * (self.m + self.n - 2)) as f64
    }

    pub fn constants(&self) -> Constants {
        constants(self.n, self.gamma).expect("validated spec has finite constants")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub c: f64,
    pub kappa: f64,
}

/// `c = Θ_0(0)` and `κ = (n+1)/(n-1) c`.
pub fn constants(n: usize, gamma: f64) -> Result<Constants> {
    let spec = ModeSpec::new(n, gamma, 0)?;
    let c = theta(&spec, 0.0)?;
    let kappa = (n as f64 + 1.0) / (n as f64 - 1.0) * c;
    Ok(Constants { c, kappa })
}

/// `Θ_m(ξ)` on the real axis.
pub fn theta(spec: &ModeSpec, xi: f64) -> Result<f64> {
    if !xi.is_finite() {
        return Err(Error::invalid(format!("non-finite frequency {xi}")));
    }
    let num = Complex64::new(spec.a(), xi / 2.0);
    let den = Complex64::new(spec.b(), xi / 2.0);
    if is_pole(den) {
        return Err(Error::DegenerateSpec(format!(
            "B = {} is a non-positive integer",
            spec.b()
        )));
    }
    let log = 2.0 * spec.gamma * LN_2 + 2.0 * (log_gamma(num)?.re - log_gamma(den)?.re);
    Ok(log.exp())
}

fn arguments(spec: &ModeSpec, zeta: Complex64) -> [Complex64; 4] {
    let h = Complex64::i() * zeta * 0.5;
    let (a, b) = (spec.a(), spec.b());
    [a + h, a - h, b + h, b - h]
}

/// `2^{2γ} Γ(A+iζ/2)Γ(A-iζ/2) / (Γ(B+iζ/2)Γ(B-iζ/2))`.
///
/// Returns an exact zero where one of the denominator Gammas has a pole.
pub fn theta_analytic(spec: &ModeSpec, zeta: Complex64) -> Result<Complex64> {
    let [w1, w2, w3, w4] = arguments(spec, zeta);
    if is_pole(w1) || is_pole(w2) {
        let w = if is_pole(w1) { w1 } else { w2 };
        return Err(Error::Pole { re: w.re, im: w.im });
    }
    if is_pole(w3) || is_pole(w4) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let log = (log_gamma(w1)? + log_gamma(w2)?) - (log_gamma(w3)? + log_gamma(w4)?);
    Ok((log + 2.0 * spec.gamma * LN_2).exp())
}

/// `dΘ/dζ` of the continued symbol.
pub fn theta_analytic_derivative(spec: &ModeSpec, zeta: Complex64) -> Result<Complex64> {
    let [w1, w2, w3, w4] = arguments(spec, zeta);
    for w in [w3, w4] {
        if is_pole(w) {
            return Err(Error::Pole { re: w.re, im: w.im });
        }
    }
    let value = theta_analytic(spec, zeta)?;
    let psi = (digamma(w1)? - digamma(w2)?) - (digamma(w3)? - digamma(w4)?);
    Ok(value * Complex64::i() * 0.5 * psi)
}

/// `F(λ) = Θ_m(-iλ)`, even in `λ` and real on the real axis.
pub fn symbol_at_rate(spec: &ModeSpec, lambda: Complex64) -> Result<Complex64> {
    theta_analytic(spec, -Complex64::i() * lambda)
}

/// `F'(λ)`.
pub fn symbol_at_rate_derivative(spec: &ModeSpec, lambda: Complex64) -> Result<Complex64> {
    Ok(-Complex64::i() * theta_analytic_derivative(spec, -Complex64::i() * lambda)?)
}

/// Evaluates `Θ_m` at every frequency of a slice, in parallel for long inputs.
pub fn theta_many(spec: &ModeSpec, xis: &[f64]) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    if xis.len() < 512 {
        xis.iter().map(|&x| theta(spec, x)).collect()
    } else {
        xis.par_iter().map(|&x| theta(spec, x)).collect()
    }
}
