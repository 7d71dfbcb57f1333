//! Kernel mean embeddings `m_Π(x) = ∫ k(x, y) Π(dy)` and the prior variance
//! of the integral `Π⊗²(k) = ∬ k dΠ dΠ`.
//!
//! Closed forms exist for the RBF and Matérn-3/2 kernels against the
//! standard normal. Everything else goes through adaptive quadrature on a
//! truncated window, or Monte Carlo for the double integral.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelVariant};
use crate::measures::Measure;
use crate::quadrature::{integrate_with_breaks, QuadConfig};
use crate::special::{erfc, erfcx};

const SQRT_3: f64 = 1.732_050_807_568_877_2;
const SQRT_PI: f64 = 1.772_453_850_905_516;
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
const SQRT_PI_2: f64 = 1.253_314_137_315_500_3;

/// Kernel lengthscales beyond which the kernel is treated as zero when
/// widening the quadrature window.
const KERNEL_SUPPORT_ELLS: f64 = 40.0;

fn is_standard_normal(m: &Measure) -> bool {
    matches!(*m, Measure::Gaussian { mean, variance } if mean == 0.0 && variance == 1.0)
}

fn unsupported(k: &Kernel, m: &Measure) -> Error {
    Error::UnsupportedPair {
        kernel: k.variant.name().to_string(),
        measure: m.name(),
    }
}

/// Closed-form kernel mean against `N(0, 1)`.
pub fn kernel_mean_closed(k: &Kernel, m: &Measure, x: f64) -> Result<f64> {
    if !is_standard_normal(m) {
        return Err(unsupported(k, m));
    }
    if !x.is_finite() {
        return Err(Error::InvalidInput("non-finite embedding argument".into()));
    }
    Ok(match k.variant {
        KernelVariant::Rbf => {
            let l2 = k.ell * k.ell;
            k.sigma_f2 * (l2 / (l2 + 1.0)).sqrt() * (-0.5 * x * x / (l2 + 1.0)).exp()
        }
        KernelVariant::Matern32 => {
            let a = SQRT_3 / k.ell;
            k.sigma_f2 / SQRT_2PI * (matern_side(a, x, a - x) + matern_side(a, x, a + x))
        }
    })
}

/// `e^{−x²/2}·[I₀(β) + a·I₁(β)]` with `I₀(β) = √(π/2)·e^{β²/2}·erfc(β/√2)` and
/// `I₁(β) = 1 − β·I₀(β)`; one half-line of the Matérn-3/2 embedding.
fn matern_side(a: f64, x: f64, beta: f64) -> f64 {
    let gx = (-0.5 * x * x).exp();
    // e^{−x²/2}·I₀(β), never forming e^{β²/2} on its own
    let e0 = if beta >= 0.0 {
        gx * SQRT_PI_2 * erfcx(beta / std::f64::consts::SQRT_2)
    } else {
        SQRT_PI_2 * (0.5 * (beta * beta - x * x)).exp() * erfc(beta / std::f64::consts::SQRT_2)
    };
    e0 + a * (gx - beta * e0)
}

/// Closed-form `Π⊗²(k)` for `Π = N(0, 1)`.
pub fn initial_error_closed(k: &Kernel, m: &Measure) -> Result<f64> {
    if !is_standard_normal(m) {
        return Err(unsupported(k, m));
    }
    Ok(match k.variant {
        KernelVariant::Rbf => {
            let l2 = k.ell * k.ell;
            k.sigma_f2 * (l2 / (l2 + 2.0)).sqrt()
        }
        KernelVariant::Matern32 => {
            let a = SQRT_3 / k.ell;
            let j0 = SQRT_PI * erfcx(a);
            let j1 = 2.0 - 2.0 * a * j0;
            k.sigma_f2 / SQRT_PI * (j0 + a * j1)
        }
    })
}

fn check_rel_tol(rel_tol: f64) -> Result<()> {
    if !(1e-12..=1e-3).contains(&rel_tol) {
        return Err(Error::InvalidInput(format!(
            "rel_tol must lie in [1e-12, 1e-3], got {rel_tol}"
        )));
    }
    Ok(())
}

/// Quadrature window and breakpoints for `∫ k(x, y) p(y) dy`.
fn embedding_breaks(k: &Kernel, m: &Measure, x: f64, rel_tol: f64) -> Vec<f64> {
    let c = m.center();
    let half = m.truncation_half_width(rel_tol);
    let reach = KERNEL_SUPPORT_ELLS * k.ell;
    let lo = (c - half).min(x - reach);
    let hi = (c + half).max(x + reach);
    let mut breaks = vec![lo, hi, x, c];
    // geometric ladders resolve the kernel peak at x and the density bulk at c
    for (origin, unit) in [(x, k.ell), (c, m.spread())] {
        let mut step = unit;
        while origin - step > lo || origin + step < hi {
            breaks.push(origin - step);
            breaks.push(origin + step);
            step *= 2.0;
        }
    }
    breaks.retain(|b| *b >= lo && *b <= hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

/// Kernel mean by adaptive quadrature, accurate to `rel_tol`.
pub fn kernel_mean_numeric(k: &Kernel, m: &Measure, x: f64, rel_tol: f64) -> Result<f64> {
    check_rel_tol(rel_tol)?;
    if !x.is_finite() {
        return Err(Error::InvalidInput("non-finite embedding argument".into()));
    }
    let breaks = embedding_breaks(k, m, x, rel_tol);
    let r = integrate_with_breaks(
        |y| k.eval1(x, y) * m.density(y),
        &breaks,
        QuadConfig::rel(rel_tol * 0.1),
    )?;
    Ok(r.value)
}

/// `Π⊗²(k)` by nested adaptive quadrature (outer integral of the numeric
/// kernel mean against the density).
pub fn initial_error_numeric(k: &Kernel, m: &Measure, rel_tol: f64) -> Result<f64> {
    check_rel_tol(rel_tol)?;
    let inner_tol = (rel_tol * 0.1).max(1e-12);
    let c = m.center();
    let half = m.truncation_half_width(rel_tol);
    let mut breaks = vec![c - half, c, c + half];
    let mut step = m.spread();
    while step < half {
        breaks.push(c - step);
        breaks.push(c + step);
        step *= 2.0;
    }
    breaks.sort_by(f64::total_cmp);
    // failures inside the closure surface as NaN and are re-raised below
    let outer = integrate_with_breaks(
        |x| kernel_mean_numeric(k, m, x, inner_tol).unwrap_or(f64::NAN) * m.density(x),
        &breaks,
        QuadConfig::rel(rel_tol * 0.1),
    )?;
    if !outer.value.is_finite() {
        return Err(Error::Accuracy {
            estimate: outer.value,
            error: outer.error,
        });
    }
    Ok(outer.value)
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// `Π⊗²(k) ≈ (1/S) Σ k(xᵢ, yᵢ)` with independent `xᵢ, yᵢ ~ Π`.
pub fn initial_error_mc(
    k: &Kernel,
    m: &Measure,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples < 10_000 {
        return Err(Error::InvalidInput(format!(
            "Monte Carlo prior variance needs at least 1e4 samples, got {n_samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Welford accumulation keeps the variance stable for S ~ 1e8
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n_samples {
        let v = k.eval1(m.sample(&mut rng), m.sample(&mut rng));
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (n_samples - 1) as f64;
    Ok(McEstimate {
        value: mean,
        std_error: (var / n_samples as f64).sqrt(),
        samples: n_samples,
    })
}

/// Reweights `f` from a `t_{ν_target}` integral to a `t_{ν_proposal}` one:
/// `g = f · t_{ν_target} / t_{ν_proposal}`.
pub fn change_of_measure<F>(f: F, nu_target: f64, nu_proposal: f64) -> Result<impl Fn(f64) -> f64>
where
    F: Fn(f64) -> f64,
{
    if !(nu_proposal > 0.0 && nu_target > nu_proposal && nu_target.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "change of measure needs nu_target > nu_proposal > 0, got ({nu_target}, {nu_proposal})"
        )));
    }
    let target = Measure::StudentT {
        nu: nu_target,
        scale: 1.0,
    };
    let proposal = Measure::StudentT {
        nu: nu_proposal,
        scale: 1.0,
    };
    Ok(move |x: f64| f(x) * (target.ln_density(x) - proposal.ln_density(x)).exp())
}

/// How the prior integral variance of a numeric embedding is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum PriorVarianceMethod {
    /// Nested adaptive quadrature.
    Quadrature,
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum EmbeddingMode {
    ClosedForm,
    Numeric { rel_tol: f64 },
}

/// A kernel/measure pair with its prior integral variance. Kernel means are
/// evaluated per design point on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub kernel: Kernel,
    pub measure: Measure,
    pub mode: EmbeddingMode,
    pub prior_integral_variance: f64,
    /// Present when the prior variance came from Monte Carlo.
    pub prior_variance_std_error: Option<f64>,
}

impl Embedding {
    pub fn closed_form(kernel: Kernel, measure: Measure) -> Result<Self> {
        let prior = initial_error_closed(&kernel, &measure)?;
        Ok(Embedding {
            kernel,
            measure,
            mode: EmbeddingMode::ClosedForm,
            prior_integral_variance: prior,
            prior_variance_std_error: None,
        })
    }

    pub fn numeric(
        kernel: Kernel,
        measure: Measure,
        rel_tol: f64,
        prior: PriorVarianceMethod,
    ) -> Result<Self> {
        check_rel_tol(rel_tol)?;
        let (value, se) = match prior {
            PriorVarianceMethod::Quadrature => {
                (initial_error_numeric(&kernel, &measure, rel_tol)?, None)
            }
            PriorVarianceMethod::MonteCarlo { samples, seed } => {
                let est = initial_error_mc(&kernel, &measure, samples, seed)?;
                (est.value, Some(est.std_error))
            }
        };
        if !(value > 0.0) {
            return Err(Error::InvalidInput(format!(
                "prior integral variance must be positive, got {value}"
            )));
        }
        Ok(Embedding {
            kernel,
            measure,
            mode: EmbeddingMode::Numeric { rel_tol },
            prior_integral_variance: value,
            prior_variance_std_error: se,
        })
    }

    /// Closed form when available, numeric otherwise.
    pub fn auto(
        kernel: Kernel,
        measure: Measure,
        rel_tol: f64,
        prior: PriorVarianceMethod,
    ) -> Result<Self> {
        if is_standard_normal(&measure) {
            Self::closed_form(kernel, measure)
        } else {
            Self::numeric(kernel, measure, rel_tol, prior)
        }
    }

    pub fn mean_at(&self, x: f64) -> Result<f64> {
        match self.mode {
            EmbeddingMode::ClosedForm => kernel_mean_closed(&self.kernel, &self.measure, x),
            EmbeddingMode::Numeric { rel_tol } => {
                kernel_mean_numeric(&self.kernel, &self.measure, x, rel_tol)
            }
        }
    }

    pub fn means_at(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.mean_at(x)).collect()
    }
}
