//! Complex Gamma, log-Gamma and digamma.
//!
//! `log_gamma` shifts the argument with the recurrence until `|z| >= 15` and
//! then sums the Stirling series (eight Bernoulli terms, truncation error
//! below 1e-20 there). The left half-plane goes through the reflection
//! formula. The lower half-plane is obtained by conjugation, which makes
//! `log_gamma(conj z) == conj(log_gamma(z))` hold bit for bit.
//!
//! In the right half-plane the result is the analytic continuation of
//! `ln Γ` from the positive real axis; across the reflection the imaginary
//! part is only fixed modulo `2π`, which never matters for the moduli and
//! ratios the symbol module builds from it.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexValue = Complex64;

/// Arguments within this distance of a non-positive integer are poles.
pub const POLE_TOLERANCE: f64 = 1e-12;

const SHIFT_RADIUS: f64 = 15.0;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `B_{2k} / (2k (2k-1))`, k = 1..8.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// `B_{2k} / (2k)`, k = 1..8.
const DIGAMMA_ASYMPTOTIC: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

pub fn is_pole(z: Complex64) -> bool {
    if z.im.abs() > POLE_TOLERANCE || z.re > 0.5 {
        return false;
    }
    let k = z.re.round();
    k <= 0.0 && (z.re - k).abs() <= POLE_TOLERANCE
}

fn check_argument(z: Complex64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::invalid(format!("non-finite Gamma argument {z}")));
    }
    if is_pole(z) {
        return Err(Error::Pole { re: z.re, im: z.im });
    }
    Ok(())
}

/// Principal-branch `ln Γ(z)`.
pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    check_argument(z)?;
    Ok(log_gamma_unchecked(z))
}

fn log_gamma_unchecked(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        return log_gamma_unchecked(z.conj()).conj();
    }
    if z.re < 0.5 {
        let one = Complex64::new(1.0, 0.0);
        return Complex64::new(PI.ln(), 0.0) - log_sin_pi(z) - log_gamma_unchecked(one - z);
    }
    let mut shifted = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while shifted.norm() < SHIFT_RADIUS {
        acc += shifted.ln();
        shifted += 1.0;
    }
    stirling(shifted) - acc
}

fn stirling(z: Complex64) -> Complex64 {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut power = inv;
    for coeff in STIRLING {
        series += power * coeff;
        power *= inv2;
    }
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + series
}

/// `ln sin(πz)`, stable for large `|Im z|`.
fn log_sin_pi(z: Complex64) -> Complex64 {
    let w = z * PI;
    if w.im.abs() < 20.0 {
        return w.sin().ln();
    }
    if w.im < 0.0 {
        return log_sin_pi(z.conj()).conj();
    }
    let i = Complex64::i();
    let tail = (Complex64::new(1.0, 0.0) - (i * w * 2.0).exp()).ln();
    -i * w + tail - LN_2 + i * (PI / 2.0)
}

/// `|Γ(z)|² = exp(2 Re ln Γ(z))`.
pub fn abs_gamma_sq(z: Complex64) -> Result<f64> {
    Ok((2.0 * log_gamma(z)?.re).exp())
}

/// `Γ(z)` itself, for moderate arguments.
pub fn gamma(z: Complex64) -> Result<Complex64> {
    Ok(log_gamma(z)?.exp())
}

/// Digamma `ψ(z) = Γ'(z)/Γ(z)`.
pub fn digamma(z: Complex64) -> Result<Complex64> {
    check_argument(z)?;
    Ok(digamma_unchecked(z))
}

fn digamma_unchecked(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        return digamma_unchecked(z.conj()).conj();
    }
    if z.re < 0.5 {
        let one = Complex64::new(1.0, 0.0);
        return digamma_unchecked(one - z) - cot_pi(z) * PI;
    }
    let mut shifted = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while shifted.norm() < SHIFT_RADIUS {
        acc += shifted.inv();
        shifted += 1.0;
    }
    let inv = shifted.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut power = inv2;
    for coeff in DIGAMMA_ASYMPTOTIC {
        series += power * coeff;
        power *= inv2;
    }
    shifted.ln() - inv * 0.5 - series - acc
}

fn cot_pi(z: Complex64) -> Complex64 {
    let w = z * PI;
    if w.im > 20.0 {
        -Complex64::i()
    } else if w.im < -20.0 {
        Complex64::i()
    } else {
        w.cos() / w.sin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn half_and_one() {
        let half = log_gamma(c(0.5, 0.0)).unwrap();
        assert!((half.re - 0.572_364_942_924_700_1).abs() < 1e-14);
        assert_eq!(half.im, 0.0);
        let one = log_gamma(c(1.0, 0.0)).unwrap();
        assert!(one.norm() < 1e-14);
    }

    #[test]
    fn recurrence_at_sample_point() {
        let z = c(2.5, 1.3);
        let lhs = log_gamma(z + 1.0).unwrap().exp();
        let rhs = z * log_gamma(z).unwrap().exp();
        assert!((lhs - rhs).norm() / lhs.norm() < 1e-12);
    }

    #[test]
    fn abs_gamma_sq_closed_forms() {
        // |Γ(1+i)|² = π / sinh π
        let expected = PI / PI.sinh();
        let got = abs_gamma_sq(c(1.0, 1.0)).unwrap();
        assert!((got - expected).abs() / expected < 1e-13);
        assert!((got - 0.272_029_054_982_133).abs() < 1e-12);
        assert!((abs_gamma_sq(c(0.5, 0.0)).unwrap() - PI).abs() < 1e-13);
        assert!((abs_gamma_sq(c(3.0, 0.0)).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn factorials() {
        let mut fact = 1.0;
        for k in 1..30 {
            let g = gamma(c(k as f64, 0.0)).unwrap();
            assert!((g.re - fact).abs() / fact < 1e-13, "Γ({k})");
            fact *= k as f64;
        }
    }

    #[test]
    fn negative_real_axis() {
        // Γ(-1/2) = -2√π
        let g = gamma(c(-0.5, 0.0)).unwrap();
        assert!((g.re + 2.0 * PI.sqrt()).abs() < 1e-13);
        assert!(g.im.abs() < 1e-13);
    }

    #[test]
    fn poles_rejected() {
        for k in 0..5 {
            let z = c(-(k as f64), 0.0);
            assert!(matches!(log_gamma(z), Err(Error::Pole { .. })));
        }
        assert!(matches!(log_gamma(c(-3.0 + 1e-13, 0.0)), Err(Error::Pole { .. })));
        assert!(log_gamma(c(-3.0 + 1e-9, 0.0)).is_ok());
        assert!(log_gamma(c(0.0, 1e-3)).is_ok());
    }

    #[test]
    fn large_imaginary_part() {
        // |Γ(1/2 + iy)|² = π / cosh(πy)
        for &y in &[5.0, 20.0, 60.0] {
            let lg = log_gamma(c(0.5, y)).unwrap();
            let expected = PI.ln() - (PI * y).cosh().ln();
            assert!((2.0 * lg.re - expected).abs() < 1e-12 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn digamma_values() {
        let euler = 0.577_215_664_901_532_9;
        assert!((digamma(c(1.0, 0.0)).unwrap().re + euler).abs() < 1e-14);
        let half = digamma(c(0.5, 0.0)).unwrap().re;
        assert!((half + euler + 2.0 * LN_2).abs() < 1e-14);
        // ψ(z+1) = ψ(z) + 1/z, including the reflected half-plane
        for z in [c(0.3, 0.7), c(-2.3, 1.1), c(4.0, -6.0)] {
            let d = digamma(z + 1.0).unwrap() - digamma(z).unwrap() - z.inv();
            assert!(d.norm() < 1e-12);
        }
    }

    #[test]
    fn digamma_matches_log_gamma_derivative() {
        let z = c(1.7, 2.2);
        let h = 1e-5;
        let fd = (log_gamma(z + h).unwrap() - log_gamma(z - h).unwrap()) / (2.0 * h);
        assert!((fd - digamma(z).unwrap()).norm() < 1e-8);
    }
}
