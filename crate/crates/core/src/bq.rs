//! Bayesian quadrature posterior of `Π(f)` under a zero-mean GP prior.
//!
//! Given design points `x₁…xₙ` and values `f(xᵢ)`, the integral is Gaussian
//! with mean `m_Πᵀ K⁻¹ f` and variance `Π⊗²(k) − m_Πᵀ K⁻¹ m_Π`, where `m_Π`
//! collects kernel means at the design points. The variance is also the
//! squared worst-case error of the rule in the RKHS unit ball.

use serde::{Deserialize, Serialize};

use crate::embeddings::Embedding;
use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, GramSystem, Kernel};

/// Raw variances below this are an inconsistency, not rounding.
pub const NEGATIVE_VARIANCE_LIMIT: f64 = -1e-8;

/// Which sampler produced a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub sampler: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub provenance: Option<Provenance>,
}

impl Design {
    pub fn new(points: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: values.len(),
            });
        }
        if points.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "design contains non-finite entries".into(),
            ));
        }
        Ok(Design {
            points,
            values,
            provenance: None,
        })
    }

    /// Evaluates `f` at `points`.
    pub fn from_fn<F: Fn(f64) -> f64>(points: Vec<f64>, f: F) -> Result<Self> {
        let values = points.iter().map(|&x| f(x)).collect();
        Self::new(points, values)
    }

    pub fn with_provenance(mut self, sampler: impl Into<String>, seed: u64) -> Self {
        self.provenance = Some(Provenance {
            sampler: sampler.into(),
            seed,
        });
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraturePosterior {
    pub mean: f64,
    pub variance: f64,
    pub weights: Vec<f64>,
    pub n: usize,
    pub prior_variance: f64,
}

impl QuadraturePosterior {
    pub fn worst_case_error(&self) -> f64 {
        self.variance.sqrt()
    }
}

fn check_embedding(k: &Kernel, emb: &Embedding) -> Result<()> {
    if emb.kernel != *k {
        return Err(Error::InvalidInput(
            "embedding was built for a different kernel".into(),
        ));
    }
    Ok(())
}

fn clamp_variance(raw: f64) -> Result<f64> {
    if raw < NEGATIVE_VARIANCE_LIMIT || raw.is_nan() {
        return Err(Error::NumericalConsistency(raw));
    }
    if raw < 0.0 {
        log::debug!("clamping posterior variance {raw:e} to zero");
        return Ok(0.0);
    }
    Ok(raw)
}

/// Posterior of the integral for a design.
pub fn bq_posterior(
    k: &Kernel,
    emb: &Embedding,
    d: &Design,
    nugget: f64,
) -> Result<QuadraturePosterior> {
    check_embedding(k, emb)?;
    if d.is_empty() {
        return Ok(QuadraturePosterior {
            mean: 0.0,
            variance: emb.prior_integral_variance,
            weights: Vec::new(),
            n: 0,
            prior_variance: emb.prior_integral_variance,
        });
    }
    let gram = gram_matrix(k, &d.points, nugget)?;
    let means = emb.means_at(&d.points)?;
    posterior_from_parts(&gram, &means, &d.values, emb.prior_integral_variance)
}

/// Posterior from a factorized Gram system and precomputed kernel means.
pub fn posterior_from_parts(
    gram: &GramSystem,
    means: &[f64],
    values: &[f64],
    prior_variance: f64,
) -> Result<QuadraturePosterior> {
    let z = gram.forward_solve(means)?;
    let weights = gram.backward_solve(&z)?;
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            got: values.len(),
        });
    }
    let mean = weights.iter().zip(values).map(|(w, f)| w * f).sum();
    let explained: f64 = z.iter().map(|v| v * v).sum();
    let variance = clamp_variance(prior_variance - explained)?;
    Ok(QuadraturePosterior {
        mean,
        variance,
        n: weights.len(),
        weights,
        prior_variance,
    })
}

/// Mean and variance for one prefix of a design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefixPosterior {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
}

/// Posteriors for every requested prefix length of a sequential design from a
/// single factorization.
///
/// The Cholesky factor of a leading block is the leading block of the
/// factor, so with `z = L⁻¹m` and `u = L⁻¹f` the prefix of length `j` has
/// mean `Σ_{i<j} zᵢuᵢ` and variance `Π⊗²(k) − Σ_{i<j} zᵢ²`.
pub fn prefix_posteriors(
    k: &Kernel,
    emb: &Embedding,
    d: &Design,
    nugget: f64,
    lengths: &[usize],
) -> Result<Vec<PrefixPosterior>> {
    check_embedding(k, emb)?;
    if let Some(&bad) = lengths.iter().find(|&&j| j > d.len()) {
        return Err(Error::InvalidInput(format!(
            "prefix length {bad} exceeds design size {}",
            d.len()
        )));
    }
    let prior = emb.prior_integral_variance;
    if d.is_empty() {
        return Ok(lengths
            .iter()
            .map(|&n| PrefixPosterior {
                n,
                mean: 0.0,
                variance: prior,
            })
            .collect());
    }
    let gram = gram_matrix(k, &d.points, nugget)?;
    let means = emb.means_at(&d.points)?;
    let z = gram.forward_solve(&means)?;
    let u = gram.forward_solve(&d.values)?;
    let mut mean_acc = vec![0.0; d.len() + 1];
    let mut var_acc = vec![0.0; d.len() + 1];
    for i in 0..d.len() {
        mean_acc[i + 1] = mean_acc[i] + z[i] * u[i];
        var_acc[i + 1] = var_acc[i] + z[i] * z[i];
    }
    lengths
        .iter()
        .map(|&j| {
            Ok(PrefixPosterior {
                n: j,
                mean: mean_acc[j],
                variance: clamp_variance(prior - var_acc[j])?,
            })
        })
        .collect()
}

pub fn worst_case_error(p: &QuadraturePosterior) -> f64 {
    p.worst_case_error()
}

/// Squared RKHS distance between the embedding and the quadrature rule,
/// `Π⊗²(k) − 2wᵀm + wᵀKw`; agrees with the posterior variance.
pub fn variance_crosscheck(k: &Kernel, emb: &Embedding, d: &Design, nugget: f64) -> Result<f64> {
    check_embedding(k, emb)?;
    if d.is_empty() {
        return Ok(emb.prior_integral_variance);
    }
    let gram = gram_matrix(k, &d.points, nugget)?;
    let means = emb.means_at(&d.points)?;
    let w = gram.solve(&means)?;
    let kw = gram.matvec(&w)?;
    let wm: f64 = w.iter().zip(&means).map(|(a, b)| a * b).sum();
    let wkw: f64 = w.iter().zip(&kw).map(|(a, b)| a * b).sum();
    Ok(emb.prior_integral_variance - 2.0 * wm + wkw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Measure;
    use proptest::prelude::*;

    fn rbf_setup() -> (Kernel, Embedding) {
        let k = Kernel::rbf(1.0, 1.0).unwrap();
        let e = Embedding::closed_form(k, Measure::standard_normal()).unwrap();
        (k, e)
    }

    #[test]
    fn empty_design_returns_prior() {
        let (k, e) = rbf_setup();
        let p = bq_posterior(&k, &e, &Design::new(vec![], vec![]).unwrap(), 1e-8).unwrap();
        assert_eq!(p.mean, 0.0);
        assert_eq!(p.variance, e.prior_integral_variance);
        assert!((worst_case_error(&p) - (1.0f64 / 3.0).powf(0.25)).abs() < 1e-15);
        assert_eq!(
            variance_crosscheck(&k, &e, &Design::new(vec![], vec![]).unwrap(), 1e-8).unwrap(),
            p.variance
        );
    }

    #[test]
    fn one_point_hand_computation() {
        // K = [1], m(0) = √(1/2): w = √(1/2), var = √(1/3) − 1/2
        let (k, e) = rbf_setup();
        let c = 2.5;
        let d = Design::new(vec![0.0], vec![c]).unwrap();
        let p = bq_posterior(&k, &e, &d, 0.0).unwrap();
        let w = 0.5f64.sqrt();
        let var = (1.0f64 / 3.0).sqrt() - 0.5;
        assert!((p.weights[0] - w).abs() < 1e-15);
        assert!((p.mean - w * c).abs() < 1e-14);
        assert!((p.variance - var).abs() < 1e-15);
        assert!((p.variance - 0.077_350_269_189_625_76).abs() < 1e-12);
        assert!((worst_case_error(&p) - 0.278_119_163_650_449_9).abs() < 1e-12);
        assert!((variance_crosscheck(&k, &e, &d, 0.0).unwrap() - var).abs() < 1e-10);
    }

    #[test]
    fn duplicate_point_is_redundant() {
        let (k, e) = rbf_setup();
        let single =
            bq_posterior(&k, &e, &Design::new(vec![0.4], vec![1.3]).unwrap(), 1e-8).unwrap();
        let double = bq_posterior(
            &k,
            &e,
            &Design::new(vec![0.4, 0.4], vec![1.3, 1.3]).unwrap(),
            1e-8,
        )
        .unwrap();
        assert!((single.mean - double.mean).abs() < 1e-6);
        assert!(double.variance <= single.variance);
    }

    #[test]
    fn kernel_mismatch_rejected() {
        let (_, e) = rbf_setup();
        let other = Kernel::rbf(2.0, 1.0).unwrap();
        let d = Design::new(vec![0.0], vec![1.0]).unwrap();
        assert!(matches!(
            bq_posterior(&other, &e, &d, 0.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn inconsistent_prior_is_an_error() {
        let (k, mut e) = rbf_setup();
        e.prior_integral_variance = 0.1; // below m_Πᵀ K⁻¹ m_Π = 0.5
        let d = Design::new(vec![0.0], vec![1.0]).unwrap();
        assert!(matches!(
            bq_posterior(&k, &e, &d, 0.0),
            Err(Error::NumericalConsistency(_))
        ));
    }

    #[test]
    fn prefix_path_matches_direct_posteriors() {
        let k = Kernel::matern32(0.4, 0.3).unwrap();
        let e = Embedding::closed_form(k, Measure::standard_normal()).unwrap();
        let pts: Vec<f64> = (0..30)
            .map(|i| ((i * 37) % 29) as f64 / 5.0 - 3.0 + 0.01 * i as f64)
            .collect();
        let d = Design::from_fn(pts.clone(), |x| x.sin() + 1.0).unwrap();
        let path = prefix_posteriors(&k, &e, &d, 1e-8, &[0, 5, 17, 30]).unwrap();
        for pp in &path {
            let sub = Design::new(pts[..pp.n].to_vec(), d.values[..pp.n].to_vec()).unwrap();
            let direct = bq_posterior(&k, &e, &sub, 1e-8).unwrap();
            assert!((pp.mean - direct.mean).abs() < 1e-10);
            assert!((pp.variance - direct.variance).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_design_reproduces_kernel_translates() {
        // f = k(x*, ·) has RKHS norm √k(x*, x*), so |Π(f) − Q(f)| ≤ wce·√k(x*, x*)
        let k = Kernel::matern32(1.0, 0.8).unwrap();
        let e = Embedding::closed_form(k, Measure::standard_normal()).unwrap();
        let xs = 0.37;
        let pts: Vec<f64> = (0..120).map(|i| -6.0 + 12.0 * i as f64 / 119.0).collect();
        let d = Design::from_fn(pts, |x| k.eval1(xs, x)).unwrap();
        let p = bq_posterior(&k, &e, &d, 1e-10).unwrap();
        let truth = e.mean_at(xs).unwrap();
        assert!((p.mean - truth).abs() <= p.worst_case_error() * k.sigma_f2.sqrt() + 1e-9);
        assert!((p.mean - truth).abs() < 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn mean_is_weighted_sum_and_forms_agree(
            pts in prop::collection::vec(-4.0f64..4.0, 1..60),
            ell in 0.2f64..2.0,
            rbf in prop::bool::ANY,
        ) {
            let k = if rbf { Kernel::rbf(0.7, ell) } else { Kernel::matern32(0.7, ell) }.unwrap();
            let e = Embedding::closed_form(k, Measure::standard_normal()).unwrap();
            let d = Design::from_fn(pts, |x| (3.0 * x).cos() * (-0.1 * x * x).exp()).unwrap();
            let p = bq_posterior(&k, &e, &d, 1e-8).unwrap();
            let dot: f64 = p.weights.iter().zip(&d.values).map(|(w, f)| w * f).sum();
            prop_assert_eq!(p.mean, dot);
            prop_assert!(p.variance >= 0.0 && p.variance <= p.prior_variance + 1e-10);
            let alt = variance_crosscheck(&k, &e, &d, 1e-8).unwrap();
            prop_assert!((alt - p.variance).abs() <= 1e-8);
        }
    }
}
