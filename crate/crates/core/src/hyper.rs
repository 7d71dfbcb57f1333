//! Metropolis-within-Gibbs sampling of the kernel hyperparameters
//! `(σ_f², ℓ)`.
//!
//! With `K_θ = σ_f² K_ℓ` and `Q = fᵀK_ℓ⁻¹f / 2`, an inverse-gamma prior on
//! `σ_f²` is conjugate: `σ_f² | ℓ, f ~ IG(α_f + n/2, β_f + Q)`. The lengthscale
//! has no closed-form conditional and is updated by a random walk on
//! `u = log ℓ`, whose target picks up the Jacobian term `u`:
//!
//! `log p(u | f, σ_f²) = −(n/2) log σ_f² − Q/σ_f² − ½ log|K_ℓ| + log p(ℓ) + u`.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, GramSystem, Kernel, KernelVariant, DEFAULT_NUGGET};
use crate::sampling::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperPrior {
    /// Inverse-gamma shape for `σ_f²`.
    pub alpha_f: f64,
    /// Inverse-gamma scale for `σ_f²`.
    pub beta_f: f64,
    /// Mean of `log ℓ` under the log-normal prior.
    pub ell_log_mean: f64,
    /// Variance of `log ℓ` under the log-normal prior.
    pub ell_log_variance: f64,
}

impl Default for HyperPrior {
    fn default() -> Self {
        HyperPrior {
            alpha_f: 2.0,
            beta_f: 2.0,
            ell_log_mean: 0.0,
            ell_log_variance: 100.0,
        }
    }
}

impl HyperPrior {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha_f > 0.0
            && self.beta_f > 0.0
            && self.ell_log_variance > 0.0
            && self.ell_log_mean.is_finite();
        if !ok {
            return Err(Error::InvalidInput(format!("invalid hyperprior {self:?}")));
        }
        Ok(())
    }

    /// Log-normal log density of `ℓ`.
    pub fn ln_prior_ell(&self, ell: f64) -> f64 {
        let u = ell.ln();
        let v = self.ell_log_variance;
        -u - 0.5 * (u - self.ell_log_mean).powi(2) / v - 0.5 * (2.0 * std::f64::consts::PI * v).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    /// Standard deviation of the random walk on `log ℓ`.
    pub step: f64,
    pub nugget: f64,
    /// `(σ_f², ℓ)`; defaults to (sample variance of values, sd of points / 2).
    pub init: Option<(f64, f64)>,
    /// Keep the `−½ log|K_ℓ|` term of the full conditional. Turning it off
    /// reproduces the displayed target that drops the determinant; the
    /// resulting chain does not target the joint posterior.
    #[serde(default = "yes")]
    pub include_log_det: bool,
}

fn yes() -> bool {
    true
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            iterations: 1000,
            burn_in: 200,
            step: 0.2,
            nugget: DEFAULT_NUGGET,
            init: None,
            include_log_det: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperSample {
    pub sigma_f2: f64,
    pub ell: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperChain {
    pub samples: Vec<HyperSample>,
    pub burn_in: usize,
    pub acceptance_rate: f64,
    pub step_size: f64,
    /// `(σ̄_f², ℓ̄)` over iterations after burn-in.
    pub posterior_mean: (f64, f64),
}

impl HyperChain {
    fn summarize(samples: Vec<HyperSample>, burn_in: usize, step_size: f64) -> Self {
        let accepted = samples.iter().filter(|s| s.accepted).count();
        let acceptance_rate = if samples.is_empty() {
            0.0
        } else {
            accepted as f64 / samples.len() as f64
        };
        let kept = &samples[burn_in.min(samples.len())..];
        let posterior_mean = if kept.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let m = kept.len() as f64;
            (
                kept.iter().map(|s| s.sigma_f2).sum::<f64>() / m,
                kept.iter().map(|s| s.ell).sum::<f64>() / m,
            )
        };
        HyperChain {
            samples,
            burn_in,
            acceptance_rate,
            step_size,
            posterior_mean,
        }
    }

    /// Writes `iter,sigma_f2,ell,accepted`, one row per iteration (1-based).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iter,sigma_f2,ell,accepted")?;
        for (i, s) in self.samples.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                i + 1,
                s.sigma_f2,
                s.ell,
                u8::from(s.accepted)
            )?;
        }
        Ok(())
    }
}

/// Data and model pieces shared by both conditional updates.
#[derive(Debug, Clone, Copy)]
pub struct GibbsProblem<'a> {
    pub points: &'a [f64],
    pub values: &'a [f64],
    pub variant: KernelVariant,
    pub prior: HyperPrior,
    pub nugget: f64,
    pub include_log_det: bool,
}

/// Quantities that depend on `ℓ` only.
#[derive(Debug, Clone, Copy)]
pub struct EllState {
    pub ell: f64,
    /// `fᵀK_ℓ⁻¹f / 2`.
    pub q: f64,
    pub log_det: f64,
}

/// Outcome of one lengthscale update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhStep {
    pub ell: f64,
    pub accepted: bool,
    pub log_post: f64,
}

impl<'a> GibbsProblem<'a> {
    pub fn new(
        points: &'a [f64],
        values: &'a [f64],
        variant: KernelVariant,
        prior: HyperPrior,
        nugget: f64,
    ) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: values.len(),
            });
        }
        prior.validate()?;
        Ok(GibbsProblem {
            points,
            values,
            variant,
            prior,
            nugget,
            include_log_det: true,
        })
    }

    /// Unit-amplitude correlation system `K_ℓ + ηI`.
    pub fn corr_system(&self, ell: f64) -> Result<GramSystem> {
        gram_matrix(
            &Kernel::new(self.variant, 1.0, ell)?,
            self.points,
            self.nugget,
        )
    }

    pub fn ell_state(&self, ell: f64) -> Result<EllState> {
        let g = self.corr_system(ell)?;
        Ok(EllState {
            ell,
            q: 0.5 * g.quad_form_inv(self.values)?,
            log_det: g.log_det(),
        })
    }

    /// Log target on the `u = log ℓ` scale, up to a constant.
    pub fn log_target(&self, s: &EllState, sigma_f2: f64) -> f64 {
        let n = self.values.len() as f64;
        let det = if self.include_log_det {
            0.5 * s.log_det
        } else {
            0.0
        };
        -0.5 * n * sigma_f2.ln() - s.q / sigma_f2 - det
            + self.prior.ln_prior_ell(s.ell)
            + s.ell.ln()
    }

    fn mh_from_state<R: Rng + ?Sized>(
        &self,
        current: &EllState,
        sigma_f2: f64,
        step: f64,
        rng: &mut R,
    ) -> (EllState, MhStep) {
        let current_lp = self.log_target(current, sigma_f2);
        let eps: f64 = StandardNormal.sample(rng);
        let proposed_ell = (current.ell.ln() + step * eps).exp();
        let uniform: f64 = rng.random();
        let proposal = match self.ell_state(proposed_ell) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("rejecting lengthscale {proposed_ell:e}: {e}");
                return (
                    *current,
                    MhStep {
                        ell: current.ell,
                        accepted: false,
                        log_post: current_lp,
                    },
                );
            }
        };
        let proposed_lp = self.log_target(&proposal, sigma_f2);
        if uniform.ln() < proposed_lp - current_lp {
            (
                proposal,
                MhStep {
                    ell: proposal.ell,
                    accepted: true,
                    log_post: proposed_lp,
                },
            )
        } else {
            (
                *current,
                MhStep {
                    ell: current.ell,
                    accepted: false,
                    log_post: current_lp,
                },
            )
        }
    }
}

fn draw_inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    // X ~ Gamma(shape, rate = scale) ⇒ 1/X ~ IG(shape, scale)
    let g = Gamma::new(shape, 1.0 / scale).expect("positive gamma parameters");
    1.0 / g.sample(rng)
}

/// Exact draw of `σ_f²` from `IG(α_f + n/2, β_f + fᵀK_ℓ⁻¹f/2)`, with `K_ℓ`
/// given as a unit-amplitude correlation system.
pub fn sigma2_gibbs_draw<R: Rng + ?Sized>(
    values: &[f64],
    corr_system: &GramSystem,
    prior: &HyperPrior,
    rng: &mut R,
) -> Result<f64> {
    let q = 0.5 * corr_system.quad_form_inv(values)?;
    Ok(draw_inverse_gamma(
        prior.alpha_f + 0.5 * values.len() as f64,
        prior.beta_f + q,
        rng,
    ))
}

/// One random-walk Metropolis update of `log ℓ` at fixed `σ_f²`.
///
/// A proposal whose Gram matrix cannot be factorized is rejected.
pub fn ell_mh_step<R: Rng + ?Sized>(
    problem: &GibbsProblem<'_>,
    current_ell: f64,
    sigma_f2: f64,
    step: f64,
    rng: &mut R,
) -> Result<MhStep> {
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step must be positive, got {step}"
        )));
    }
    let current = problem.ell_state(current_ell)?;
    Ok(problem.mh_from_state(&current, sigma_f2, step, rng).1)
}

fn default_init(points: &[f64], values: &[f64]) -> (f64, f64) {
    fn var(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    }
    let s2 = var(values);
    let sd = var(points).sqrt();
    (
        if s2 > 0.0 { s2 } else { 1.0 },
        if sd > 0.0 { 0.5 * sd } else { 1.0 },
    )
}

/// Runs `iterations` sweeps of (lengthscale MH step, then conjugate `σ_f²` draw).
pub fn run_gibbs(
    problem: &GibbsProblem<'_>,
    config: &ChainConfig,
    seed: u64,
) -> Result<HyperChain> {
    let problem = &GibbsProblem {
        include_log_det: config.include_log_det,
        ..*problem
    };
    if problem.points.len() < 2 {
        return Err(Error::InvalidInput(
            "hyperparameter chain needs n >= 2".into(),
        ));
    }
    if config.burn_in >= config.iterations {
        return Err(Error::InvalidInput(format!(
            "burn-in {} must be below iteration count {}",
            config.burn_in, config.iterations
        )));
    }
    if !(config.step > 0.0) {
        return Err(Error::InvalidInput("step must be positive".into()));
    }
    let (mut sigma_f2, ell0) = config
        .init
        .unwrap_or_else(|| default_init(problem.points, problem.values));
    let mut rng: ChaCha8Rng = rng_from_seed(seed);
    let mut state = problem.ell_state(ell0).map_err(|e| Error::ChainAborted {
        iteration: 0,
        source: Box::new(e),
        partial: Box::new(HyperChain::summarize(
            Vec::new(),
            config.burn_in,
            config.step,
        )),
    })?;
    let shape = problem.prior.alpha_f + 0.5 * problem.values.len() as f64;
    let mut samples = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let (next, step) = problem.mh_from_state(&state, sigma_f2, config.step, &mut rng);
        state = next;
        sigma_f2 = draw_inverse_gamma(shape, problem.prior.beta_f + state.q, &mut rng);
        samples.push(HyperSample {
            sigma_f2,
            ell: state.ell,
            accepted: step.accepted,
        });
    }
    Ok(HyperChain::summarize(samples, config.burn_in, config.step))
}
