//! Randomized design generators: sampling from the target itself, and the
//! `n`-dependent inflated proposals that reach the minimax rate on
//! unbounded domains.
//!
//! All draws use ChaCha8 (`rand_chacha`) so designs are bit-reproducible
//! across platforms for a given seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{standard_t, Measure};

/// Name of the generator recorded in CSV headers.
pub const RNG_ALGORITHM: &str = "ChaCha8";

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer over `(master, stream, index)`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProposalFamily {
    /// `N(μ, c·log n·σ²)` for a Gaussian target.
    GaussianInflated,
    /// `t_ν(0, s²·n^{2α/(α+ν+1/2)})` for a Student-t target.
    StudentInflated,
    /// Sample the target measure itself.
    TargetBaseline,
}

impl ProposalFamily {
    pub fn name(self) -> &'static str {
        match self {
            ProposalFamily::GaussianInflated => "gaussian-inflated",
            ProposalFamily::StudentInflated => "student-inflated",
            ProposalFamily::TargetBaseline => "target",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// All `n` points from `Q_n`.
    Batch,
    /// Point `i` from `Q_i`; prefixes are stable.
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub family: ProposalFamily,
    pub target: Measure,
    /// Sobolev smoothness of the integrand class (`α > d/2`).
    pub alpha: f64,
    pub mode: SamplingMode,
    /// Multiply the Gaussian inflation by `α` (`α log n` instead of `log n`).
    pub include_alpha_factor: bool,
}

/// Error exponents attained by the inflated proposal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTarget {
    pub tau: f64,
    pub error_exponent: f64,
    pub variance_exponent: f64,
}

impl Proposal {
    pub fn new(family: ProposalFamily, target: Measure, alpha: f64) -> Result<Self> {
        if !(alpha > 0.5 && alpha.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "smoothness must exceed d/2 = 0.5, got {alpha}"
            )));
        }
        match (family, target) {
            (ProposalFamily::GaussianInflated, Measure::Gaussian { .. })
            | (ProposalFamily::StudentInflated, Measure::StudentT { .. })
            | (ProposalFamily::TargetBaseline, _) => {}
            _ => {
                return Err(Error::InvalidInput(format!(
                    "{} proposal does not match target {}",
                    family.name(),
                    target.name()
                )))
            }
        }
        Ok(Proposal {
            family,
            target,
            alpha,
            mode: SamplingMode::Batch,
            include_alpha_factor: false,
        })
    }

    /// The inflated proposal matching the target's family.
    pub fn inflated(target: Measure, alpha: f64) -> Result<Self> {
        let family = match target {
            Measure::Gaussian { .. } => ProposalFamily::GaussianInflated,
            Measure::StudentT { .. } => ProposalFamily::StudentInflated,
        };
        Self::new(family, target, alpha)
    }

    pub fn baseline(target: Measure, alpha: f64) -> Result<Self> {
        Self::new(ProposalFamily::TargetBaseline, target, alpha)
    }

    pub fn with_mode(mut self, mode: SamplingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_alpha_factor(mut self, on: bool) -> Self {
        self.include_alpha_factor = on;
        self
    }

    /// Exponent `2α/(α+ν+1/2)` of the Student inflation.
    fn student_exponent(&self, nu: f64) -> f64 {
        2.0 * self.alpha / (self.alpha + nu + 0.5)
    }

    /// Variance-like scale `Σ_n` of the proposal at size `n`.
    pub fn proposal_scale(&self, n: usize) -> Result<f64> {
        if n < 2 {
            return Err(Error::InvalidSize(n));
        }
        Ok(self.scale_unchecked(n))
    }

    fn scale_unchecked(&self, n: usize) -> f64 {
        let base = self.target.base_variance();
        match (self.family, self.target) {
            (ProposalFamily::TargetBaseline, _) => base,
            (ProposalFamily::GaussianInflated, _) => {
                let c = if self.include_alpha_factor {
                    self.alpha
                } else {
                    1.0
                };
                c * (n as f64).ln() * base
            }
            (ProposalFamily::StudentInflated, Measure::StudentT { nu, .. }) => {
                base * (n as f64).powf(self.student_exponent(nu))
            }
            (ProposalFamily::StudentInflated, Measure::Gaussian { .. }) => {
                unreachable!("rejected at construction")
            }
        }
    }

    /// Radius of the ball on which the inflated design is space-filling:
    /// `√Σ_n` of the inflated proposal for this target, whatever the family.
    pub fn ball_radius(&self, n: usize) -> Result<f64> {
        let mut inflated = Proposal::inflated(self.target, self.alpha)?;
        inflated.include_alpha_factor = self.include_alpha_factor;
        Ok(inflated.proposal_scale(n)?.sqrt())
    }

    pub fn rate_target(&self) -> RateTarget {
        let tau = match self.target {
            Measure::Gaussian { .. } => 1.0,
            Measure::StudentT { nu, .. } => (nu + 0.5) / (self.alpha + nu + 0.5),
        };
        RateTarget {
            tau,
            error_exponent: -self.alpha * tau,
            variance_exponent: -2.0 * self.alpha * tau,
        }
    }

    fn draw_one(&self, scale: f64, rng: &mut ChaCha8Rng) -> f64 {
        match (self.family, self.target) {
            (ProposalFamily::TargetBaseline, m) => m.sample(rng),
            (ProposalFamily::GaussianInflated, m) => {
                let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
                m.center() + scale.sqrt() * z
            }
            (ProposalFamily::StudentInflated, Measure::StudentT { nu, .. }) => {
                scale.sqrt() * standard_t(nu, rng)
            }
            (ProposalFamily::StudentInflated, Measure::Gaussian { .. }) => {
                unreachable!("rejected at construction")
            }
        }
    }

    pub fn draw(&self, n: usize, seed: u64) -> Vec<f64> {
        match self.mode {
            SamplingMode::Batch => draw_iid(self, n, seed),
            SamplingMode::Sequential => draw_sequential(self, n, seed),
        }
    }

    pub fn label(&self) -> String {
        match self.mode {
            SamplingMode::Batch => self.family.name().to_string(),
            SamplingMode::Sequential => format!("{}-sequential", self.family.name()),
        }
    }
}

pub fn proposal_scale(p: &Proposal, n: usize) -> Result<f64> {
    p.proposal_scale(n)
}

/// `n` i.i.d. draws from `Q_n` (scale evaluated at `max(n, 2)`).
pub fn draw_iid(p: &Proposal, n: usize, seed: u64) -> Vec<f64> {
    let scale = p.scale_unchecked(n.max(2));
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| p.draw_one(scale, &mut rng)).collect()
}

/// Independent draws with point `i` (1-based) from `Q_{max(i,2)}`.
///
/// Each index reads its own ChaCha stream of the master seed, so a longer
/// draw extends a shorter one without changing it.
pub fn draw_sequential(p: &Proposal, n: usize, seed: u64) -> Vec<f64> {
    (1..=n)
        .map(|i| {
            let mut rng = rng_from_seed(seed);
            rng.set_stream(i as u64);
            p.draw_one(p.scale_unchecked(i.max(2)), &mut rng)
        })
        .collect()
}
