use proptest::prelude::*;
use randbq::{
    bq_posterior, fill_distance_1d, prefix_posteriors, total_variance, Design, Embedding, Kernel,
    Measure, Proposal, RepetitionSet, DEFAULT_NUGGET,
};

fn gaussian_problem(n: usize, seed: u64) -> (Kernel, Embedding, Design) {
    let k = Kernel::matern32(1.0, 0.8).unwrap();
    let emb = Embedding::closed_form(k, Measure::standard_normal()).unwrap();
    let p = Proposal::inflated(Measure::standard_normal(), 1.5).unwrap();
    let d = Design::from_fn(p.draw(n, seed), |x| (-x * x).exp()).unwrap();
    (k, emb, d)
}

#[test]
fn posterior_converges_to_true_integral() {
    let truth = 1.0 / 3f64.sqrt();
    let (k, emb, d) = gaussian_problem(200, 11);
    let post = bq_posterior(&k, &emb, &d, DEFAULT_NUGGET).unwrap();
    assert!((post.mean - truth).abs() < 1e-4, "mean {}", post.mean);
    assert!(post.variance >= 0.0 && post.variance < post.prior_variance);
}

#[test]
fn prefix_path_matches_direct_posteriors() {
    let (k, emb, d) = gaussian_problem(60, 3);
    let path = prefix_posteriors(&k, &emb, &d, DEFAULT_NUGGET, &[10, 30, 60]).unwrap();
    for p in &path {
        let sub = Design::new(d.points[..p.n].to_vec(), d.values[..p.n].to_vec()).unwrap();
        let direct = bq_posterior(&k, &emb, &sub, DEFAULT_NUGGET).unwrap();
        assert!((direct.mean - p.mean).abs() < 1e-9);
        assert!((direct.variance - p.variance).abs() < 1e-9 * direct.prior_variance);
    }
}

#[test]
fn student_numeric_posterior_is_finite() {
    let k = Kernel::matern32(1.0, 1.0).unwrap();
    let m = Measure::student_t(4.49, 1.0).unwrap();
    let emb = Embedding::numeric(k, m, 1e-10, randbq::PriorVarianceMethod::Quadrature).unwrap();
    let p = Proposal::inflated(m, 1.5).unwrap();
    let d = Design::from_fn(p.draw(50, 5), |x| 1.0 / (1.0 + x * x)).unwrap();
    let post = bq_posterior(&k, &emb, &d, DEFAULT_NUGGET).unwrap();
    assert!(post.mean.is_finite() && post.variance >= 0.0);
}

#[test]
fn pooled_variance_decomposes() {
    let comps: Vec<(f64, f64)> = (0..10)
        .map(|i| {
            let (k, emb, d) = gaussian_problem(40, i);
            let p = bq_posterior(&k, &emb, &d, DEFAULT_NUGGET).unwrap();
            (p.mean, p.variance)
        })
        .collect();
    let reps = RepetitionSet::new(comps, 40, "test").unwrap();
    let r = total_variance(&reps);
    assert!((r.total - r.within - r.between).abs() <= 1e-15 * r.total.max(1.0));
    assert!(r.between >= 0.0 && r.within >= 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn more_points_never_increase_variance(seed in any::<u64>(), n in 5usize..40) {
        let (k, emb, d) = gaussian_problem(2 * n, seed);
        let path = prefix_posteriors(&k, &emb, &d, DEFAULT_NUGGET, &[n, 2 * n]).unwrap();
        prop_assert!(path[1].variance <= path[0].variance + 1e-12);
    }

    #[test]
    fn draws_are_reproducible(seed in any::<u64>(), n in 2usize..200) {
        let p = Proposal::inflated(Measure::standard_normal(), 1.5).unwrap();
        prop_assert_eq!(p.draw(n, seed), p.draw(n, seed));
    }

    #[test]
    fn fill_distance_shrinks_under_refinement(seed in any::<u64>()) {
        let p = Proposal::inflated(Measure::standard_normal(), 1.5).unwrap();
        let pts = p.draw(128, seed);
        let coarse = fill_distance_1d(&pts[..32], 2.0).unwrap();
        let fine = fill_distance_1d(&pts, 2.0).unwrap();
        prop_assert!(fine <= coarse + 1e-12);
    }
}
