//! Uniformly sampled functions of the cylinder variable and FFT multipliers.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Samples `values[k] = v(s0 + k ds)` of one mode of a function on the line.
#[derive(Debug, Clone, PartialEq)]
pub struct LineFunction {
    pub s0: f64,
    pub ds: f64,
    pub values: Vec<f64>,
    pub mode: usize,
}

impl LineFunction {
    pub const MIN_LEN: usize = 16;

    pub fn new(s0: f64, ds: f64, values: Vec<f64>, mode: usize) -> Result<Self> {
        if !(ds > 0.0 && ds.is_finite() && s0.is_finite()) {
            return Err(Error::invalid(format!("grid origin {s0} / step {ds} invalid")));
        }
        if values.len() < Self::MIN_LEN {
            return Err(Error::invalid(format!(
                "{} samples, need at least {}",
                values.len(),
                Self::MIN_LEN
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("sample {k} is not finite")));
        }
        Ok(LineFunction { s0, ds, values, mode })
    }

    /// Samples `f` on `n` points of `[a, b)`.
    pub fn sample(a: f64, b: f64, n: usize, mode: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let ds = (b - a) / n as f64;
        let values = (0..n).map(|k| f(a + k as f64 * ds)).collect();
        Self::new(a, ds, values, mode)
    }

    /// Same grid, new samples.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        LineFunction { values, ..self.clone() }
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self.values.iter().enumerate().map(|(k, &v)| f(self.s(k), v)).collect();
        self.with_values(values)
    }

    pub fn zeros_like(&self) -> Self {
        self.with_values(vec![0.0; self.len()])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn s(&self, k: usize) -> f64 {
        self.s0 + k as f64 * self.ds
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.s(k)).collect()
    }

    pub fn period(&self) -> f64 {
        self.ds * self.len() as f64
    }

    pub fn center(&self) -> f64 {
        self.s0 + 0.5 * self.period()
    }

    pub fn half_length(&self) -> f64 {
        0.5 * self.period()
    }

    /// Index range of the middle half of the grid.
    pub fn interior(&self) -> std::ops::Range<usize> {
        let n = self.len();
        n / 4..n - n / 4
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn interior_sup(&self) -> f64 {
        self.values[self.interior()].iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `sup |self - other|` over the middle half of the grid.
    pub fn interior_distance(&self, other: &LineFunction) -> f64 {
        self.interior()
            .map(|k| (self.values[k] - other.values[k]).abs())
            .fold(0.0, f64::max)
    }

    pub fn same_grid(&self, other: &LineFunction) -> bool {
        self.len() == other.len()
            && (self.s0 - other.s0).abs() <= 1e-12 * self.s0.abs().max(1.0)
            && (self.ds - other.ds).abs() <= 1e-12 * self.ds
    }
}

/// Angular frequency of FFT bin `k` for `n` samples at spacing `ds`.
pub fn frequency(k: usize, n: usize, ds: f64) -> f64 {
    let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * PI * kk / (n as f64 * ds)
}

pub fn frequencies(n: usize, ds: f64) -> Vec<f64> {
    (0..n).map(|k| frequency(k, n, ds)).collect()
}

pub fn forward(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Inverse transform, normalized, real part.
pub fn inverse_real(mut spectrum: Vec<Complex64>) -> Vec<f64> {
    let n = spectrum.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    spectrum.iter().map(|z| z.re / n as f64).collect()
}

/// Applies the Fourier multiplier `m(ξ)` to periodic samples. The
/// multiplier must satisfy `m(-ξ) = conj m(ξ)` for the result to be real.
pub fn apply_multiplier(
    values: &[f64],
    ds: f64,
    mut m: impl FnMut(f64) -> Result<Complex64>,
) -> Result<Vec<f64>> {
    let n = values.len();
    let mut spec = forward(values);
    for (k, z) in spec.iter_mut().enumerate() {
        *z *= m(frequency(k, n, ds))?;
    }
    Ok(inverse_real(spec))
}

/// Fraction of spectral energy in the top tenth of the resolved band.
pub fn top_band_energy(values: &[f64], ds: f64) -> f64 {
    let n = values.len();
    let spec = forward(values);
    let xi_max = PI / ds;
    let (mut total, mut top) = (0.0, 0.0);
    for (k, z) in spec.iter().enumerate() {
        let e = z.norm_sqr();
        total += e;
        if frequency(k, n, ds).abs() >= 0.9 * xi_max {
            top += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        top / total
    }
}
