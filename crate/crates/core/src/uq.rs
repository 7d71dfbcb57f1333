//! Aggregating posteriors over repeated random designs.
//!
//! Each repetition contributes a Gaussian `N(meanᵢ, varᵢ)`; their equal-weight
//! mixture approximates the marginal posterior once the design is
//! integrated out. The total variance splits into the average GP variance
//! (within) and the spread of the posterior means (between).

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::rng_from_seed;

/// Default constant in the total/within variance diagnostic.
pub const DEFAULT_BOUND_CONSTANT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionSet {
    /// `(posterior mean, posterior variance)` per repetition, in repetition order.
    pub components: Vec<(f64, f64)>,
    pub n: usize,
    pub config_hash: String,
}

impl RepetitionSet {
    pub fn new(
        components: Vec<(f64, f64)>,
        n: usize,
        config_hash: impl Into<String>,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput(
                "a repetition set needs at least one component".into(),
            ));
        }
        if let Some((m, v)) = components
            .iter()
            .find(|(m, v)| !(m.is_finite() && v.is_finite() && *v >= 0.0))
        {
            return Err(Error::InvalidInput(format!("invalid component ({m}, {v})")));
        }
        Ok(RepetitionSet {
            components,
            n,
            config_hash: config_hash.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Neumaier-compensated sum.
fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalVarianceReport {
    pub grand_mean: f64,
    pub within: f64,
    pub between: f64,
    pub total: f64,
}

/// Law-of-total-variance estimator with `1/R` normalization in both terms.
pub fn total_variance(reps: &RepetitionSet) -> TotalVarianceReport {
    let r = reps.len() as f64;
    let grand_mean = compensated_sum(reps.components.iter().map(|c| c.0)) / r;
    let within = compensated_sum(reps.components.iter().map(|c| c.1)) / r;
    let between = compensated_sum(reps.components.iter().map(|c| (c.0 - grand_mean).powi(2))) / r;
    TotalVarianceReport {
        grand_mean,
        within,
        between,
        total: within + between,
    }
}

/// Linear interpolation between order statistics: position `(N − 1)·p`.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quantiles of the Gaussian mixture from `S` draws per component.
pub fn mixture_quantiles(
    reps: &RepetitionSet,
    draws: usize,
    probs: &[f64],
    seed: u64,
) -> Result<Vec<f64>> {
    if draws < 100 {
        return Err(Error::InvalidInput(format!(
            "need at least 100 draws per component, got {draws}"
        )));
    }
    if probs.iter().any(|p| !(*p > 0.0 && *p < 1.0)) || probs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput(
            "probabilities must be sorted and inside (0, 1)".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let mut samples = Vec::with_capacity(reps.len() * draws);
    for &(mean, var) in &reps.components {
        let sd = var.sqrt();
        for _ in 0..draws {
            let eps: f64 = StandardNormal.sample(&mut rng);
            samples.push(mean + sd * eps);
        }
    }
    samples.sort_by(f64::total_cmp);
    Ok(probs
        .iter()
        .map(|&p| empirical_quantile(&samples, p))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    /// `total / within`.
    pub ratio: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Compares `total/within` against `C·(1 + ‖f‖²)`; a diagnostic, not a proof
/// of any particular constant.
pub fn variance_bound_check(
    reps: &RepetitionSet,
    f_norm_bound: f64,
    constant: f64,
) -> Result<BoundCheck> {
    let report = total_variance(reps);
    if report.within <= 0.0 {
        return Err(Error::UndefinedRatio);
    }
    let ratio = report.total / report.within;
    let threshold = constant * (1.0 + f_norm_bound * f_norm_bound);
    Ok(BoundCheck {
        ratio,
        threshold,
        pass: ratio <= threshold,
    })
}
