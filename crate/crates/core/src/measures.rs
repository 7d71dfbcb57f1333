//! One-dimensional integration measures.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Measure {
    Gaussian {
        mean: f64,
        variance: f64,
    },
    /// Centered Student-t: `scale · T_ν`.
    StudentT {
        nu: f64,
        scale: f64,
    },
}

impl Measure {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance.is_finite() && variance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gaussian measure needs finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        Ok(Measure::Gaussian { mean, variance })
    }

    pub fn standard_normal() -> Self {
        Measure::Gaussian {
            mean: 0.0,
            variance: 1.0,
        }
    }

    pub fn student_t(nu: f64, scale: f64) -> Result<Self> {
        if !(nu.is_finite() && nu > 0.0) || !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidInput(format!(
                "student-t measure needs positive nu and scale, got ({nu}, {scale})"
            )));
        }
        Ok(Measure::StudentT { nu, scale })
    }

    pub fn name(&self) -> String {
        match self {
            Measure::Gaussian { mean, variance } => format!("gaussian({mean},{variance})"),
            Measure::StudentT { nu, scale } => format!("student-t({nu},{scale})"),
        }
    }

    pub fn center(&self) -> f64 {
        match *self {
            Measure::Gaussian { mean, .. } => mean,
            Measure::StudentT { .. } => 0.0,
        }
    }

    /// Standard deviation (Gaussian) or scale (Student-t).
    pub fn spread(&self) -> f64 {
        match *self {
            Measure::Gaussian { variance, .. } => variance.sqrt(),
            Measure::StudentT { scale, .. } => scale,
        }
    }

    /// Second-moment-like base scale: variance, or squared scale.
    pub fn base_variance(&self) -> f64 {
        self.spread().powi(2)
    }

    pub fn is_centered(&self) -> bool {
        self.center() == 0.0
    }

    pub fn ln_density(&self, x: f64) -> f64 {
        match *self {
            Measure::Gaussian { mean, variance } => {
                let z = x - mean;
                -0.5 * z * z / variance - 0.5 * (2.0 * std::f64::consts::PI * variance).ln()
            }
            Measure::StudentT { nu, scale } => {
                let z = x / scale;
                student_log_norm(nu) - scale.ln() - 0.5 * (nu + 1.0) * (z * z / nu).ln_1p()
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    /// Half-width `c·spread` of a centered window whose complement carries
    /// less than `rel_tol / 10` of the mass.
    pub fn truncation_half_width(&self, rel_tol: f64) -> f64 {
        match *self {
            Measure::Gaussian { variance, .. } => {
                // P(|Z| > c) ≤ exp(−c²/2) ≤ rel_tol/20 for this c
                (2.0 * (20.0 / rel_tol).ln()).sqrt() * variance.sqrt()
            }
            Measure::StudentT { nu, scale } => {
                // P(|T| > c) ≤ 2·c₂·c^(−ν)/ν with density ≤ c₂·|t|^(−ν−1)
                let c2 = student_tail_constant(nu);
                (20.0 * c2 / (rel_tol * nu)).powf(1.0 / nu) * scale
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Measure::Gaussian { mean, variance } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + variance.sqrt() * z
            }
            Measure::StudentT { nu, scale } => scale * standard_t(nu, rng),
        }
    }
}

/// Draw from the standard `t_ν` via `Z / √(χ²_ν / ν)`.
pub fn standard_t<R: Rng + ?Sized>(nu: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    let chi = ChiSquared::new(nu).expect("nu > 0").sample(rng);
    z / (chi / nu).sqrt()
}

/// Log normalizing constant of the standard `t_ν` density.
pub fn student_log_norm(nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * std::f64::consts::PI).ln()
}

/// `c₂` with `t_ν(x) ≤ c₂·|x|^(−ν−1)` for all `x`.
pub fn student_tail_constant(nu: f64) -> f64 {
    student_log_norm(nu).exp() * nu.powf(0.5 * (nu + 1.0))
}

pub fn density(m: &Measure, x: f64) -> f64 {
    m.density(x)
}
