//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any criterion fails.
//!
//! Run with `cargo test -p randbq --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use randbq::bq::{bq_posterior, prefix_posteriors, variance_crosscheck, Design};
use randbq::embeddings::{
    initial_error_closed, initial_error_numeric, kernel_mean_closed, kernel_mean_numeric, Embedding,
};
use randbq::experiments::{
    run_fill_study, run_mcmc, run_rate_study, run_repeated, run_single, write_fill_study,
    write_mcmc, write_run, ExperimentConfig, ExperimentKind, Hypers, Strategy,
};
use randbq::hyper::{sigma2_gibbs_draw, HyperPrior};
use randbq::kernels::{gram_matrix, Kernel, KernelVariant, DEFAULT_NUGGET};
use randbq::measures::Measure;
use randbq::sampling::{rng_from_seed, Proposal};
use randbq::stats::{inverse_gamma_cdf, ks_p_value, ks_statistic};
use randbq::uq::empirical_quantile;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    empirical_quantile(&v, 0.5)
}

fn embedding_oracles() -> Outcome {
    let m = Measure::standard_normal();
    let mut worst_mean = 0.0f64;
    let mut worst_prior = 0.0f64;
    for variant in [KernelVariant::Rbf, KernelVariant::Matern32] {
        for ell in [0.2, 0.5, 1.0, 2.0] {
            let k = Kernel::new(variant, 1.0, ell).unwrap();
            for i in 0..41 {
                let x = -5.0 + 0.25 * i as f64;
                let closed = kernel_mean_closed(&k, &m, x).unwrap();
                let quad = kernel_mean_numeric(&k, &m, x, 1e-12).unwrap();
                worst_mean = worst_mean.max(((closed - quad) / quad).abs());
            }
            let closed = initial_error_closed(&k, &m).unwrap();
            let nested = initial_error_numeric(&k, &m, 1e-9).unwrap();
            worst_prior = worst_prior.max(((closed - nested) / nested).abs());
        }
    }
    outcome(
        worst_mean <= 1e-8 && worst_prior <= 1e-6,
        format!("max rel. error: kernel mean {worst_mean:.2e} (<= 1e-8), prior variance {worst_prior:.2e} (<= 1e-6)"),
    )
}

fn bq_self_consistency() -> Outcome {
    let m = Measure::standard_normal();
    let mut rng = rng_from_seed(2024);
    let mut worst_gap = 0.0f64;
    let mut monotone = true;
    for inst in 0..50 {
        let variant = if inst % 2 == 0 {
            KernelVariant::Rbf
        } else {
            KernelVariant::Matern32
        };
        let ell = rng.random_range(0.3..2.0);
        let n = rng.random_range(20..=200usize);
        let k = Kernel::new(variant, 1.0, ell).unwrap();
        let emb = Embedding::closed_form(k, m).unwrap();
        let pts = Proposal::inflated(m, 1.5).unwrap().draw(n, inst);
        let d = Design::from_fn(pts, |x| (-x * x).exp() + (2.0 * x).sin()).unwrap();
        for j in [n / 4, n / 2, n] {
            let sub = Design::new(d.points[..j].to_vec(), d.values[..j].to_vec()).unwrap();
            let p = bq_posterior(&k, &emb, &sub, DEFAULT_NUGGET).unwrap();
            let alt = variance_crosscheck(&k, &emb, &sub, DEFAULT_NUGGET).unwrap();
            worst_gap = worst_gap.max((p.variance - alt).abs());
        }
        let lengths: Vec<usize> = (1..=n).collect();
        let path = prefix_posteriors(&k, &emb, &d, DEFAULT_NUGGET, &lengths).unwrap();
        monotone &= path.windows(2).all(|w| w[1].variance <= w[0].variance);
        // independent factorizations of nested prefixes
        let direct: Vec<f64> = (1..=4)
            .map(|q| {
                let j = q * n / 4;
                let sub = Design::new(d.points[..j].to_vec(), d.values[..j].to_vec()).unwrap();
                bq_posterior(&k, &emb, &sub, DEFAULT_NUGGET)
                    .unwrap()
                    .variance
            })
            .collect();
        monotone &= direct.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    }
    outcome(
        worst_gap <= 1e-8 && monotone,
        format!("max two-form gap {worst_gap:.2e} (<= 1e-8); nested variances non-increasing: {monotone}"),
    )
}

fn rbf_gaussian_regime() -> Outcome {
    let mut inflated = Vec::new();
    let mut target = Vec::new();
    for seed in 0..20 {
        let mut cfg = ExperimentConfig::preset(ExperimentKind::RbfGaussian);
        cfg.n_grid = vec![150];
        cfg.seed = seed;
        let res = run_single(&cfg).unwrap();
        for r in &res.records {
            match r.strategy {
                Strategy::Inflated => inflated.push(r.posterior_var),
                Strategy::Target => target.push(r.posterior_var),
            }
        }
    }
    let (qi, qt) = (median(inflated), median(target));
    outcome(
        qi <= 1e-9 && qt >= 1e-8,
        format!("median posterior variance at n=150: inflated {qi:.3e} (<= 1e-9), target {qt:.3e} (>= 1e-8)"),
    )
}

fn matern_gaussian_regime() -> Outcome {
    let mut cfg = ExperimentConfig::preset(ExperimentKind::MaternGaussian);
    cfg.n_grid = vec![500];
    cfg.repetitions = 100;
    let res = run_repeated(&cfg).unwrap();
    let ti = res.aggregate(Strategy::Inflated, 500).unwrap().report.total;
    let tt = res.aggregate(Strategy::Target, 500).unwrap().report.total;
    let decades = (ti / 2.63e-7).log10().abs();
    outcome(
        ti < tt && decades <= 1.0,
        format!(
            "total variance at n=500: inflated {ti:.3e} < target {tt:.3e}; |log10(inflated/2.63e-7)| = {decades:.2} (<= 1) [hypers {:.3}, {:.3}]",
            res.hypers.sigma_f2, res.hypers.ell
        ),
    )
}

fn matern_student_regime() -> Outcome {
    let mut cfg = ExperimentConfig::preset(ExperimentKind::MaternStudent);
    cfg.n_grid = vec![500];
    cfg.repetitions = 100;
    let res = run_repeated(&cfg).unwrap();
    let i = res.aggregate(Strategy::Inflated, 500).unwrap().report;
    let t = res.aggregate(Strategy::Target, 500).unwrap().report;
    let bias = (i.grand_mean - 1.0).abs();
    outcome(
        bias <= 5e-3 && i.total < t.total,
        format!(
            "inflated mean {:.6} (|bias| {bias:.1e} <= 5e-3), total {:.3e} < baseline {:.3e} (baseline mean {:.6})",
            i.grand_mean, i.total, t.total, t.grand_mean
        ),
    )
}

fn rate_study() -> Outcome {
    let cfg = ExperimentConfig::preset(ExperimentKind::RateStudy);
    let res = run_rate_study(&cfg).unwrap();
    let r = &res.rates[0];
    let (sw, sv) = (r.wce.slope, r.variance.slope);
    outcome(
        (-2.0..=-1.0).contains(&sw) && (-4.0..=-2.0).contains(&sv),
        format!("slopes over n=32..2048: wce {sw:.3} in [-2, -1], variance {sv:.3} in [-4, -2]"),
    )
}

fn fill_and_concentration() -> (Outcome, Outcome) {
    let cfg = ExperimentConfig::preset(ExperimentKind::FillStudy);
    let res = run_fill_study(&cfg).unwrap();
    let slope = res
        .fits
        .iter()
        .find(|f| f.0 == Strategy::Inflated)
        .unwrap()
        .1
        .slope;
    let med = |s: Strategy, n: usize| {
        res.summaries
            .iter()
            .find(|x| x.strategy == s && x.n == n)
            .unwrap()
            .median_fill
    };
    let dominated: Vec<usize> = cfg
        .n_grid
        .iter()
        .copied()
        .filter(|&n| n >= 256 && med(Strategy::Inflated, n) >= med(Strategy::Target, n))
        .collect();
    let fill = outcome(
        (-1.2..=-0.7).contains(&slope) && dominated.is_empty(),
        format!(
            "inflated fill slope {slope:.3} in [-1.2, -0.7]; sizes >= 256 where inflated is not smaller: {dominated:?}"
        ),
    );
    let c = res
        .concentration
        .iter()
        .find(|c| c.strategy == Strategy::Inflated)
        .unwrap();
    let conc = outcome(
        c.failure_rate <= 0.01,
        format!(
            "{}/{} trials at n={} with fraction < p/2 (p = {:.4}); rate {:.3} <= 0.01, bound {:.1e}",
            c.failures, c.trials, c.n, c.p, c.failure_rate, c.bound
        ),
    );
    (fill, conc)
}

fn mcmc_correctness() -> Outcome {
    // far-apart points: unit correlation matrix is the identity
    let pts = [0.0, 1000.0];
    let vals = [1.0, 1.0];
    let g = gram_matrix(&Kernel::rbf(1.0, 1.0).unwrap(), &pts, 0.0).unwrap();
    let prior = HyperPrior::default();
    let mut rng = rng_from_seed(99);
    let draws: Vec<f64> = (0..10_000)
        .map(|_| sigma2_gibbs_draw(&vals, &g, &prior, &mut rng).unwrap())
        .collect();
    let p_value = ks_p_value(
        ks_statistic(&draws, |x| inverse_gamma_cdf(x, 3.0, 3.0)),
        draws.len(),
    );

    let mut acceptance = Vec::new();
    let mut matern = Vec::new();
    for seed in 0..5 {
        let mut cfg = ExperimentConfig::preset(ExperimentKind::McmcHypers);
        cfg.seed = seed;
        acceptance.push(run_mcmc(&cfg).unwrap().chain.acceptance_rate);
        cfg.kernel = KernelVariant::Matern32;
        matern.push(run_mcmc(&cfg).unwrap().hypers);
    }
    let mean_acc = acceptance.iter().sum::<f64>() / acceptance.len() as f64;
    let near =
        |h: &Hypers| (h.sigma_f2 / 0.40 - 1.0).abs() <= 0.5 && (h.ell / 0.21 - 1.0).abs() <= 0.5;
    let matern_ok = matern.iter().all(near);
    let s2: Vec<String> = matern
        .iter()
        .map(|h| format!("({:.2}, {:.2})", h.sigma_f2, h.ell))
        .collect();
    let gof_ok = p_value > 0.01;
    let acc_ok = (0.35..=0.75).contains(&mean_acc);
    let tag = |ok: bool| if ok { "ok" } else { "FAILED" };
    outcome(
        gof_ok && acc_ok && matern_ok,
        format!(
            "IG(3,3) KS p = {p_value:.3} > 0.01 [{}]; RBF acceptance {mean_acc:.3} in [0.35, 0.75] [{}]; Matern means {} within 50% of (0.40, 0.21) [{}]",
            tag(gof_ok),
            tag(acc_ok),
            s2.join(" "),
            tag(matern_ok)
        ),
    )
}

fn small_config(kind: ExperimentKind, dir: &Path, workers: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(kind);
    cfg.output_dir = dir.to_path_buf();
    cfg.workers = Some(workers);
    cfg.seed = 31;
    cfg.repetitions = 3;
    cfg.chain.iterations = 200;
    cfg.chain.burn_in = 50;
    cfg.concentration_trials = 50;
    cfg.n_grid = match kind {
        ExperimentKind::RateStudy => vec![8, 32, 128, 512],
        ExperimentKind::McmcHypers => vec![100],
        _ => vec![16, 32, 64],
    };
    cfg
}

fn write_outputs(kind: ExperimentKind, dir: &Path, workers: usize) -> Vec<(String, Vec<u8>)> {
    let cfg = small_config(kind, dir, workers);
    let paths = match kind {
        ExperimentKind::FillStudy => write_fill_study(&cfg, &run_fill_study(&cfg).unwrap()),
        ExperimentKind::McmcHypers => write_mcmc(&cfg, &run_mcmc(&cfg).unwrap()),
        ExperimentKind::RateStudy => write_run(&cfg, &run_rate_study(&cfg).unwrap()),
        _ => write_run(&cfg, &run_repeated(&cfg).unwrap()),
    }
    .unwrap();
    paths
        .iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(p).unwrap(),
            )
        })
        .collect()
}

fn determinism() -> Outcome {
    let mut files = 0;
    let mut differing = Vec::new();
    for kind in ExperimentKind::ALL {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let first = write_outputs(kind, a.path(), 1);
        let second = write_outputs(kind, b.path(), 4);
        files += first.len();
        if first != second {
            differing.push(kind.name());
        }
    }
    outcome(
        differing.is_empty(),
        format!("{files} CSV files from all 7 experiments, rerun with 1 vs 4 workers; differing: {differing:?}"),
    )
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn main() -> ExitCode {
    let min = |m: u64| Duration::from_secs(60 * m);
    let mut failed = 0;
    let mut report = |id: u32, name: &str, budget: Duration, (o, took): (Outcome, Duration)| {
        let pass = o.pass && took <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} [{id:>2}] {name}: {} ({:.1}s of {}s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    };
    report(
        1,
        "embedding oracle equivalence",
        min(1),
        timed(embedding_oracles),
    );
    report(2, "BQ self-consistency", min(1), timed(bq_self_consistency));
    report(3, "RBF-Gaussian regime", min(5), timed(rbf_gaussian_regime));
    report(
        4,
        "Matern-Gaussian regime",
        min(15),
        timed(matern_gaussian_regime),
    );
    report(
        5,
        "Matern-Student regime",
        min(15),
        timed(matern_student_regime),
    );
    report(6, "rate study", min(10), timed(rate_study));
    // both come from one fill-study run
    let ((fill, conc), took) = timed(fill_and_concentration);
    report(7, "fill-distance study", min(2), (fill, took));
    report(8, "concentration", min(1), (conc, took));
    report(9, "MCMC correctness", min(3), timed(mcmc_correctness));
    report(10, "determinism", min(10), timed(determinism));
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
