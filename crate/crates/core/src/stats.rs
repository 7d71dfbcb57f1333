//! Small statistical helpers for distributional checks.

use statrs::function::gamma::gamma_ur;

/// CDF of the inverse-gamma distribution `IG(shape, scale)`.
pub fn inverse_gamma_cdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_ur(shape, scale / x)
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F_n − F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov p-value `P(√n·D > t)`.
pub fn ks_p_value(statistic: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    // Stephens' small-sample correction
    let t = statistic * (sn + 0.12 + 0.11 / sn);
    if t < 0.2 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powi(k as i32 - 1) * (-2.0 * k * k * t * t).exp();
        p += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inverse_gamma_cdf_against_closed_form() {
        // IG(1, b): F(x) = exp(−b/x)
        for &x in &[0.1, 0.5, 1.0, 4.0] {
            assert!((inverse_gamma_cdf(x, 1.0, 2.0) - (-2.0 / x).exp()).abs() < 1e-14);
        }
        assert_eq!(inverse_gamma_cdf(-1.0, 3.0, 3.0), 0.0);
    }

    #[test]
    fn ks_uniform_passes_and_shifted_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!(ks_p_value(d, xs.len()) > 0.01);
        let d = ks_statistic(&xs, |x| (x - 0.05).clamp(0.0, 1.0));
        assert!(ks_p_value(d, xs.len()) < 1e-6);
    }

    #[test]
    fn ks_p_value_critical_point() {
        // the 1% critical value of the Kolmogorov distribution is 1.6276
        let n = 1_000_000;
        let d = 1.6276 / (n as f64).sqrt();
        assert!((ks_p_value(d, n) - 0.01).abs() < 2e-4);
    }
}
