//! The glued approximate geometry on the model neck.
//!
//! Both summands are flat near the gluing points, so in the cylinder gauge
//! `s = -log r` every piece of the glued metric is a multiple `U(s) ḡ_0` of the
//! product cylinder. The boundary conformal factor is `u = U^{(n-1)/4}` and
//! the boundary curvature follows from covariance,
//! `Q = u^{-(n+1)/(n-1)} P_{g_0} u`, with `P_{g_0}` acting through the mode-0
//! symbol because `u` depends on `s` only.
//!
//! Positions are given in the centered variable `s̄ = s - S_ε/2`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extension::{dtn_cylinder, HalfCylinderProblem, Scheme};
use crate::line::{apply_multiplier, frequency, LineFunction};
use crate::symbol::{theta, ModeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightConvention {
    /// `cosh(s̄)/cosh(S_ε/2)` on the neck, equal to 1 at both ends.
    #[default]
    Centered,
    /// `cosh(s̄)/cosh(S_ε)` on the neck and 1 outside it.
    Uncentered,
}

impl std::str::FromStr for WeightConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centered" => Ok(WeightConvention::Centered),
            "uncentered" => Ok(WeightConvention::Uncentered),
            _ => Err(Error::invalid(format!("unknown weight convention `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeckConfig {
    pub epsilon: f64,
    /// Chart radius; must satisfy `ε^{1/2} < δ <= 1`.
    pub delta: f64,
    /// Extra length of cap region on each side of the neck.
    pub pad: f64,
    /// Target grid spacing.
    pub ds: f64,
    pub cutoff_width: f64,
    pub weight_convention: WeightConvention,
    /// Amplitude `η` of a synthetic `η δ²` metric error placed at the
    /// chart stations. Zero for exactly flat summands.
    pub perturbation: f64,
}

impl NeckConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.25) {
            return Err(Error::Validation {
                key: "epsilon".into(),
                message: format!("{epsilon} is outside (0, 0.25)"),
            });
        }
        let cfg = NeckConfig {
            epsilon,
            delta: epsilon.powf(0.25),
            pad: 6.0,
            ds: 0.02,
            cutoff_width: 1.0,
            weight_convention: WeightConvention::Centered,
            perturbation: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.25) {
            return Err(Error::Validation {
                key: "epsilon".into(),
                message: format!("{} is outside (0, 0.25)", self.epsilon),
            });
        }
        if !(self.delta > self.epsilon.sqrt() && self.delta <= 1.0) {
            return Err(Error::ConfigOverlap(format!(
                "chart radius {} must lie in (sqrt(eps), 1] = ({}, 1]",
                self.delta,
                self.epsilon.sqrt()
            )));
        }
        if !(self.pad >= 0.0 && self.ds > 0.0 && self.cutoff_width > 0.0) {
            return Err(Error::invalid("pad, ds and cutoff width must be positive"));
        }
        if 2.0 * self.cutoff_width >= self.s_eps() {
            return Err(Error::ConfigOverlap(format!(
                "neck length {} too short for cutoff width {}",
                self.s_eps(),
                self.cutoff_width
            )));
        }
        Ok(())
    }

    pub fn with_convention(self, weight_convention: WeightConvention) -> Self {
        NeckConfig { weight_convention, ..self }
    }

    pub fn s_eps(&self) -> f64 {
        -self.epsilon.ln()
    }

    /// The uniform grid on `[-S/2 - pad, S/2 + pad)`.
    pub fn grid(&self) -> (f64, f64, usize) {
        let a = -0.5 * self.s_eps() - self.pad;
        let len = self.s_eps() + 2.0 * self.pad;
        let n = ((len / self.ds).ceil() as usize).max(LineFunction::MIN_LEN);
        (a, len / n as f64, n)
    }

    pub fn sample(&self, mode: usize, f: impl Fn(f64) -> f64) -> Result<LineFunction> {
        let (a, ds, n) = self.grid();
        LineFunction::sample(a, a + ds * n as f64, n, mode, f)
    }
}

/// `exp(1 - 1/(1 - x²))` on `[0, 1)`, 0 from 1 on: falls from 1 to 0.
fn bump_profile(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

/// Neck cutoff in the uncentered variable `s`: 1 up to `S/2 - w`, 0 from `S/2 + w`.
pub fn neck_cutoff(config: &NeckConfig, s: f64) -> f64 {
    let w = config.cutoff_width;
    bump_profile((s - 0.5 * config.s_eps() + w) / (2.0 * w))
}

/// Chart cutoff in the radius: 0 for `r <= 1`, 1 for `r >= 2`.
pub fn chart_cutoff(r: f64) -> f64 {
    bump_profile(2.0 - r)
}

/// Factor of one summand relative to `ḡ_0` in the cylinder gauge, with the
/// flat region identified with the cylinder and the synthetic error added.
fn summand_factor(config: &NeckConfig, s: f64) -> f64 {
    let chi = chart_cutoff((-s).exp());
    1.0 + config.perturbation * config.delta.powi(2) * 4.0 * chi * (1.0 - chi)
}

/// Geometric factor `χ r² + 1 - χ` of the modified summand `g̃_{i,δ}` in
/// the cylinder gauge; it equals `r²` (flat) beyond the chart station `r = 2`.
pub fn summand_geometric_factor(s: f64) -> f64 {
    let r = (-s).exp();
    let chi = chart_cutoff(r);
    chi * r * r + 1.0 - chi
}

#[derive(Debug, Clone)]
pub struct GluedFactor {
    pub config: NeckConfig,
    pub n: usize,
    /// `U` with `ḡ_ε = U ḡ_0` on the neck.
    pub metric: LineFunction,
    /// Boundary conformal factor `u = U^{(n-1)/4}`.
    pub factor: LineFunction,
}

/// `U(s̄) = χ̃(s) Φ_1(s) + χ̃(S - s) Φ_2(S - s)` with `s = s̄ + S/2`.
pub fn glued_metric_factor(config: &NeckConfig, s_bar: f64) -> f64 {
    let big_s = config.s_eps();
    let s = s_bar + 0.5 * big_s;
    neck_cutoff(config, s) * summand_factor(config, s)
        + neck_cutoff(config, big_s - s) * summand_factor(config, big_s - s)
}

pub fn build_glued_factor(config: &NeckConfig, n: usize) -> Result<GluedFactor> {
    config.validate()?;
    if n < 2 {
        return Err(Error::invalid(format!("dimension n = {n} must be at least 2")));
    }
    let metric = config.sample(0, |s| glued_metric_factor(config, s))?;
    let power = (n as f64 - 1.0) / 4.0;
    let factor = metric.map(|_, u| u.powf(power));
    Ok(GluedFactor { config: *config, n, metric, factor })
}

pub fn weight(config: &NeckConfig, s_bar: f64) -> f64 {
    let half = 0.5 * config.s_eps();
    match config.weight_convention {
        WeightConvention::Centered => {
            let x = s_bar.cosh() / half.cosh();
            if x <= 1.0 {
                x
            } else {
                // C² cap into [1, 3/2]
                1.0 + 0.5 * (2.0 * (x - 1.0)).tanh()
            }
        }
        WeightConvention::Uncentered => {
            if s_bar.abs() < half {
                s_bar.cosh() / config.s_eps().cosh()
            } else {
                1.0
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNormSpec {
    pub mu: f64,
    /// 0 for the weighted sup norm, 1 to add the weighted difference quotient.
    pub k: u8,
}

impl WeightedNormSpec {
    pub fn new(mu: f64, k: u8) -> Result<Self> {
        if !mu.is_finite() || k > 1 {
            return Err(Error::invalid(format!("norm exponent {mu}, order {k}")));
        }
        Ok(WeightedNormSpec { mu, k })
    }

    /// `μ ∈ (-(n-1)/2, 0)` and `μ ≠ -σ_0^{(m)}` for the given first rates.
    pub fn check_admissible(&self, n: usize, first_rates: &[f64]) -> Result<()> {
        let lo = -(n as f64 - 1.0) / 2.0;
        if !(self.mu > lo && self.mu < 0.0) {
            return Err(Error::invalid(format!("mu = {} outside ({lo}, 0)", self.mu)));
        }
        if let Some(r) = first_rates.iter().find(|&&r| (self.mu + r).abs() < 1e-9) {
            return Err(Error::invalid(format!("mu = {} equals minus an indicial rate {r}", self.mu)));
        }
        Ok(())
    }
}

pub fn weighted_norm(spec: &WeightedNormSpec, config: &NeckConfig, v: &LineFunction) -> f64 {
    let w: Vec<f64> = (0..v.len()).map(|k| weight(config, v.s(k)).powf(-spec.mu)).collect();
    let mut norm = v.values.iter().zip(&w).fold(0.0_f64, |a, (x, w)| a.max(w * x.abs()));
    if spec.k == 1 {
        let lip = v
            .values
            .windows(2)
            .zip(&w)
            .fold(0.0_f64, |a, (pair, w)| a.max(w * ((pair[1] - pair[0]) / v.ds).abs()));
        norm += lip;
    }
    norm
}

#[derive(Debug, Clone)]
pub struct CurvatureError {
    pub q: LineFunction,
    pub error: LineFunction,
    pub weight: LineFunction,
    /// `‖Q_{g_ε} - c‖_{μ,k}`.
    pub e_norm: f64,
}

/// `u^{-(n+1)/(n-1)} (c + P(u - 1))`, with `P` given by a multiplier on `|ξ|`.
fn covariant_curvature(
    factor: &LineFunction,
    n: usize,
    c: f64,
    mut symbol: impl FnMut(f64) -> Result<f64>,
) -> Result<LineFunction> {
    let p = (n as f64 + 1.0) / (n as f64 - 1.0);
    let shifted: Vec<f64> = factor.values.iter().map(|u| u - 1.0).collect();
    let pu = apply_multiplier(&shifted, factor.ds, |xi| Ok(Complex64::new(symbol(xi)?, 0.0)))?;
    let q = factor
        .values
        .iter()
        .zip(pu)
        .map(|(&u, pu)| {
            if u <= 0.0 {
                return Err(Error::NonPositiveConformalFactor { min: u });
            }
            Ok(u.powf(-p) * (c + pu))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(factor.with_values(q))
}

pub fn approximate_curvature_error(
    config: &NeckConfig,
    n: usize,
    norm: &WeightedNormSpec,
) -> Result<CurvatureError> {
    if norm.mu >= 0.0 {
        return Err(Error::invalid(format!("error norm needs mu < 0, got {}", norm.mu)));
    }
    let glued = build_glued_factor(config, n)?;
    let spec = ModeSpec::half(n, 0)?;
    let c = spec.constants().c;
    let q = covariant_curvature(&glued.factor, n, c, |xi| theta(&spec, xi))?;
    Ok(finish_error(config, q, c, norm))
}

fn finish_error(config: &NeckConfig, q: LineFunction, c: f64, norm: &WeightedNormSpec) -> CurvatureError {
    let error = q.map(|_, v| v - c);
    let weight = q.map(|s, _| weight(config, s));
    let e_norm = weighted_norm(norm, config, &error);
    CurvatureError { q, error, weight, e_norm }
}

/// The same curvature with `P_{g_0}` taken from the bulk extension problem
/// frequency by frequency instead of from the symbol.
pub fn curvature_via_extension(
    config: &NeckConfig,
    n: usize,
    phi_grid: usize,
) -> Result<LineFunction> {
    let glued = build_glued_factor(config, n)?;
    let spec = ModeSpec::half(n, 0)?;
    let len = glued.factor.len();
    let table: Vec<f64> = (0..=len / 2)
        .into_par_iter()
        .map(|k| {
            let xi = frequency(k, len, glued.factor.ds).abs();
            let prob = HalfCylinderProblem::new(spec, xi)
                .with_grid(phi_grid)
                .with_scheme(Scheme::Extrapolated);
            dtn_cylinder(&prob)
        })
        .collect::<Result<_>>()?;
    // The multiplier is evaluated in FFT order, so index by position.
    let mut k = 0usize;
    let c = table[0];
    covariant_curvature(&glued.factor, n, c, |_| {
        let idx = if k <= len / 2 { k } else { len - k };
        k += 1;
        Ok(table[idx])
    })
}

/// One row of an `E(ε)` decay study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub e_norm: f64,
}

pub fn error_sweep(
    n: usize,
    eps_list: &[f64],
    norm: &WeightedNormSpec,
    convention: WeightConvention,
) -> Result<Vec<SweepRow>> {
    eps_list
        .par_iter()
        .map(|&epsilon| {
            let cfg = NeckConfig::new(epsilon)?.with_convention(convention);
            let e = approximate_curvature_error(&cfg, n, norm)?;
            Ok(SweepRow { epsilon, e_norm: e.e_norm })
        })
        .collect()
}
