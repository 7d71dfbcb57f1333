use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind, Hypers, Strategy};
use crate::bq::{bq_posterior, prefix_posteriors, Design};
use crate::embeddings::Embedding;
use crate::error::{Error, Result};
use crate::geometry::{fill_distance_1d, mahalanobis_fraction, rate_fit, RateFit};
use crate::hyper::{run_gibbs, GibbsProblem, HyperChain};
use crate::integrands::{Integrand, TrueIntegral};
use crate::kernels::Kernel;
use crate::measures::Measure;
use crate::quadrature::{integrate, QuadConfig};
use crate::sampling::{derive_seed, Proposal, RateTarget, SamplingMode};
use crate::uq::{
    empirical_quantile, mixture_quantiles, total_variance, RepetitionSet, TotalVarianceReport,
};

const STREAM_PILOT: u64 = 1;
const STREAM_REPETITION: u64 = 2;
const STREAM_MIXTURE: u64 = 3;
const STREAM_CONCENTRATION: u64 = 4;

/// Credible-interval probabilities reported for the mixture posterior.
pub const INTERVAL_PROBS: [f64; 2] = [0.025, 0.975];

/// One posterior at one design size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub repetition: usize,
    pub strategy: Strategy,
    pub n: usize,
    pub posterior_mean: f64,
    pub posterior_var: f64,
    pub wce: f64,
    pub radius: f64,
    pub fill: f64,
}

/// Summary over repetitions for one (strategy, n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub strategy: Strategy,
    pub n: usize,
    pub repetitions: usize,
    pub report: TotalVarianceReport,
    /// Mixture quantiles at [`INTERVAL_PROBS`]; absent with fewer than 100
    /// draws per component.
    pub interval: Option<(f64, f64)>,
    pub median_var: f64,
    pub median_wce: f64,
    pub median_fill: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRate {
    pub strategy: Strategy,
    pub wce: RateFit,
    pub variance: RateFit,
    pub theory: RateTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRepetition {
    pub repetition: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub experiment: ExperimentKind,
    pub config_hash: String,
    pub hypers: Hypers,
    pub chain: Option<HyperChain>,
    pub truth: TrueIntegral,
    pub records: Vec<Record>,
    pub aggregates: Vec<Aggregate>,
    pub rates: Vec<StrategyRate>,
    pub failures: Vec<FailedRepetition>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl RunResult {
    pub fn aggregate(&self, strategy: Strategy, n: usize) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.strategy == strategy && a.n == n)
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    empirical_quantile(&values, 0.5)
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs the hyperparameter chain on a pilot design drawn from the inflated
/// proposal at `pilot_n`.
pub fn pilot_chain(cfg: &ExperimentConfig) -> Result<HyperChain> {
    let proposal = cfg
        .proposal(Strategy::Inflated)?
        .with_mode(SamplingMode::Batch);
    let points = proposal.draw(cfg.pilot_n, derive_seed(cfg.seed, STREAM_PILOT, 0));
    let integrand = cfg.experiment.integrand();
    let values: Vec<f64> = points.iter().map(|&x| integrand.evaluate(x)).collect();
    let problem = GibbsProblem::new(
        &points,
        &values,
        cfg.kernel,
        cfg.hyperprior,
        cfg.chain.nugget,
    )?;
    run_gibbs(&problem, &cfg.chain, derive_seed(cfg.seed, STREAM_PILOT, 1))
}

/// Fixed hyperparameters if configured, posterior means of the pilot chain otherwise.
pub fn resolve_hypers(cfg: &ExperimentConfig) -> Result<(Hypers, Option<HyperChain>)> {
    if let Some(h) = cfg.hypers {
        return Ok((h, None));
    }
    let chain = pilot_chain(cfg)?;
    let (sigma_f2, ell) = chain.posterior_mean;
    log::info!(
        "{}: pilot chain gives sigma_f2 = {sigma_f2:.4}, ell = {ell:.4} (acceptance {:.2})",
        cfg.experiment,
        chain.acceptance_rate
    );
    Ok((Hypers { sigma_f2, ell }, Some(chain)))
}

struct Model {
    kernel: Kernel,
    embedding: Embedding,
    integrand: Integrand,
}

impl Model {
    fn new(cfg: &ExperimentConfig, h: Hypers) -> Result<Self> {
        let kernel = Kernel::new(cfg.kernel, h.sigma_f2, h.ell)?;
        let integrand = cfg.experiment.integrand();
        let embedding = Embedding::auto(
            kernel,
            integrand.target_measure,
            cfg.embedding_rel_tol,
            cfg.prior_variance,
        )?;
        Ok(Model {
            kernel,
            embedding,
            integrand,
        })
    }
}

fn with_context(cfg: &ExperimentConfig, n: usize, seed: u64) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Experiment {
        experiment: cfg.experiment.name().to_string(),
        n,
        seed,
        source: Box::new(e),
    }
}

fn strategy_records(
    cfg: &ExperimentConfig,
    model: &Model,
    proposal: &Proposal,
    strategy: Strategy,
    repetition: usize,
    seed: u64,
) -> Result<Vec<Record>> {
    let f = |x: f64| model.integrand.evaluate(x);
    let record = |n: usize, points: &[f64], mean: f64, var: f64| -> Result<Record> {
        let radius = proposal.ball_radius(n)?;
        Ok(Record {
            repetition,
            strategy,
            n,
            posterior_mean: mean,
            posterior_var: var,
            wce: var.sqrt(),
            radius,
            fill: fill_distance_1d(points, radius)?,
        })
    };
    match cfg.sampling_mode {
        SamplingMode::Sequential => {
            let n_max = cfg.n_max();
            let points = proposal.draw(n_max, seed);
            let design = Design::from_fn(points, f)
                .map_err(with_context(cfg, n_max, seed))?
                .with_provenance(proposal.label(), seed);
            let post = prefix_posteriors(
                &model.kernel,
                &model.embedding,
                &design,
                cfg.nugget,
                &cfg.n_grid,
            )
            .map_err(with_context(cfg, n_max, seed))?;
            post.iter()
                .map(|p| {
                    record(p.n, &design.points[..p.n], p.mean, p.variance)
                        .map_err(with_context(cfg, p.n, seed))
                })
                .collect()
        }
        SamplingMode::Batch => cfg
            .n_grid
            .iter()
            .map(|&n| {
                // same sub-seed for every strategy: common random numbers
                let s = derive_seed(seed, 0, n as u64);
                let inner = || {
                    let design = Design::from_fn(proposal.draw(n, s), f)?
                        .with_provenance(proposal.label(), s);
                    let post = bq_posterior(&model.kernel, &model.embedding, &design, cfg.nugget)?;
                    record(n, &design.points, post.mean, post.variance)
                };
                inner().map_err(with_context(cfg, n, s))
            })
            .collect(),
    }
}

fn repetition_records(
    cfg: &ExperimentConfig,
    model: &Model,
    repetition: usize,
) -> Result<Vec<Record>> {
    let seed = derive_seed(cfg.seed, STREAM_REPETITION, repetition as u64);
    let mut out = Vec::with_capacity(cfg.strategies.len() * cfg.n_grid.len());
    for &strategy in &cfg.strategies {
        let proposal = cfg.proposal(strategy)?;
        out.extend(strategy_records(
            cfg, model, &proposal, strategy, repetition, seed,
        )?);
    }
    Ok(out)
}

fn aggregate(cfg: &ExperimentConfig, records: &[Record], hash: &str) -> Result<Vec<Aggregate>> {
    let mut out = Vec::new();
    for (si, &strategy) in cfg.strategies.iter().enumerate() {
        for (ni, &n) in cfg.n_grid.iter().enumerate() {
            let rows: Vec<&Record> = records
                .iter()
                .filter(|r| r.strategy == strategy && r.n == n)
                .collect();
            if rows.is_empty() {
                continue;
            }
            let reps = RepetitionSet::new(
                rows.iter()
                    .map(|r| (r.posterior_mean, r.posterior_var))
                    .collect(),
                n,
                hash,
            )?;
            let interval = if cfg.mixture_draws >= 100 {
                let seed = derive_seed(
                    cfg.seed,
                    STREAM_MIXTURE,
                    (si * cfg.n_grid.len() + ni) as u64,
                );
                let q = mixture_quantiles(&reps, cfg.mixture_draws, &INTERVAL_PROBS, seed)?;
                Some((q[0], q[1]))
            } else {
                None
            };
            out.push(Aggregate {
                strategy,
                n,
                repetitions: rows.len(),
                report: total_variance(&reps),
                interval,
                median_var: median(rows.iter().map(|r| r.posterior_var).collect()),
                median_wce: median(rows.iter().map(|r| r.wce).collect()),
                median_fill: median(rows.iter().map(|r| r.fill).collect()),
            });
        }
    }
    Ok(out)
}

fn run_reps(cfg: &ExperimentConfig, repetitions: usize) -> Result<RunResult> {
    cfg.validate()?;
    let start = Instant::now();
    let hash = cfg.hash();
    let (hypers, chain) = resolve_hypers(cfg)?;
    let model = Model::new(cfg, hypers)?;
    let outcomes: Vec<Result<Vec<Record>>> = in_pool(cfg.workers, || {
        (0..repetitions)
            .into_par_iter()
            .map(|r| repetition_records(cfg, &model, r))
            .collect()
    })?;
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut first_error = None;
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(rows) => records.extend(rows),
            Err(e) => {
                log::warn!("repetition {r} failed: {e}");
                failures.push(FailedRepetition {
                    repetition: r,
                    error: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    // at most 1% of repetitions may fail
    if let Some(e) = first_error {
        if repetitions < 2 || failures.len() * 100 > repetitions {
            return Err(e);
        }
    }
    let aggregates = aggregate(cfg, &records, &hash)?;
    Ok(RunResult {
        experiment: cfg.experiment,
        config_hash: hash,
        hypers,
        chain,
        truth: model.integrand.true_integral(),
        records,
        aggregates,
        rates: Vec::new(),
        failures,
        elapsed: start.elapsed(),
    })
}

/// A single repetition over the whole `n_grid`.
pub fn run_single(cfg: &ExperimentConfig) -> Result<RunResult> {
    run_reps(cfg, 1)
}

/// `repetitions` independent designs with aggregates per (strategy, n).
pub fn run_repeated(cfg: &ExperimentConfig) -> Result<RunResult> {
    if cfg.repetitions < 2 {
        return Err(Error::InvalidInput(
            "repeated runs need at least 2 repetitions".into(),
        ));
    }
    run_reps(cfg, cfg.repetitions)
}

/// Repeated run plus log–log fits of the median worst-case error and median
/// posterior variance against `n`.
pub fn run_rate_study(cfg: &ExperimentConfig) -> Result<RunResult> {
    let span = (cfg.n_max() as f64 / cfg.n_grid[0] as f64).log10();
    if cfg.n_grid.len() < 3 || span < 1.5 {
        return Err(Error::InvalidInput(format!(
            "rate study needs at least 3 sizes spanning 1.5 decades, got {:?}",
            cfg.n_grid
        )));
    }
    let mut result = if cfg.repetitions >= 2 {
        run_repeated(cfg)?
    } else {
        run_single(cfg)?
    };
    for &strategy in &cfg.strategies {
        let rows: Vec<&Aggregate> = result
            .aggregates
            .iter()
            .filter(|a| a.strategy == strategy)
            .collect();
        let wce = rate_fit(&rows.iter().map(|a| (a.n, a.median_wce)).collect::<Vec<_>>())?;
        let variance = rate_fit(&rows.iter().map(|a| (a.n, a.median_var)).collect::<Vec<_>>())?;
        result.rates.push(StrategyRate {
            strategy,
            wce,
            variance,
            theory: cfg.proposal(strategy)?.rate_target(),
        });
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FillRecord {
    pub repetition: usize,
    pub strategy: Strategy,
    pub n: usize,
    pub radius: f64,
    pub fill: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FillSummary {
    pub strategy: Strategy,
    pub n: usize,
    pub median_fill: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
}

/// How often fewer than `p/2` of `n` draws land within one proposal scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub strategy: Strategy,
    pub n: usize,
    pub trials: usize,
    /// Probability mass of the unit Mahalanobis ball.
    pub p: f64,
    pub failures: usize,
    pub failure_rate: f64,
    /// `exp(−p·n/8)`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillStudyResult {
    pub config_hash: String,
    pub records: Vec<FillRecord>,
    pub summaries: Vec<FillSummary>,
    pub fits: Vec<(Strategy, RateFit)>,
    pub concentration: Vec<ConcentrationReport>,
}

/// Mass of `[−1, 1]` under the standardized family of `m`.
fn unit_ball_mass(m: &Measure) -> Result<f64> {
    let std = match *m {
        Measure::Gaussian { .. } => Measure::standard_normal(),
        Measure::StudentT { nu, .. } => Measure::student_t(nu, 1.0)?,
    };
    Ok(integrate(|x| std.density(x), -1.0, 1.0, QuadConfig::rel(1e-13))?.value)
}

/// Fill distances over `B_{R_n}` and the concentration check.
pub fn run_fill_study(cfg: &ExperimentConfig) -> Result<FillStudyResult> {
    cfg.validate()?;
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    let mut fits = Vec::new();
    let mut concentration = Vec::new();
    let p = unit_ball_mass(&cfg.experiment.target_measure())?;
    for &strategy in &cfg.strategies {
        let proposal = cfg.proposal(strategy)?;
        let rows: Vec<Result<Vec<FillRecord>>> = in_pool(cfg.workers, || {
            (0..cfg.repetitions)
                .into_par_iter()
                .map(|r| {
                    let seed = derive_seed(cfg.seed, STREAM_REPETITION, r as u64);
                    cfg.n_grid
                        .iter()
                        .map(|&n| {
                            let points = match cfg.sampling_mode {
                                SamplingMode::Batch => {
                                    proposal.draw(n, derive_seed(seed, 0, n as u64))
                                }
                                SamplingMode::Sequential => proposal.draw(n, seed),
                            };
                            let radius = proposal.ball_radius(n)?;
                            Ok(FillRecord {
                                repetition: r,
                                strategy,
                                n,
                                radius,
                                fill: fill_distance_1d(&points, radius)?,
                            })
                        })
                        .collect()
                })
                .collect()
        })?;
        for r in rows {
            records.extend(r?);
        }
        let mut medians = Vec::new();
        for &n in &cfg.n_grid {
            let mut fills: Vec<f64> = records
                .iter()
                .filter(|r| r.strategy == strategy && r.n == n)
                .map(|r| r.fill)
                .collect();
            fills.sort_by(f64::total_cmp);
            let s = FillSummary {
                strategy,
                n,
                median_fill: empirical_quantile(&fills, 0.5),
                lower_quartile: empirical_quantile(&fills, 0.25),
                upper_quartile: empirical_quantile(&fills, 0.75),
            };
            medians.push((n, s.median_fill));
            summaries.push(s);
        }
        if medians.len() >= 3 {
            fits.push((strategy, rate_fit(&medians)?));
        }

        let n = cfg.concentration_n;
        let scale = proposal.proposal_scale(n)?;
        let threshold = p / 2.0;
        let failures = (0..cfg.concentration_trials)
            .map(|t| {
                let points = proposal
                    .with_mode(SamplingMode::Batch)
                    .draw(n, derive_seed(cfg.seed, STREAM_CONCENTRATION, t as u64));
                mahalanobis_fraction(&points, scale).map(|frac| frac < threshold)
            })
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .filter(|&failed| failed)
            .count();
        concentration.push(ConcentrationReport {
            strategy,
            n,
            trials: cfg.concentration_trials,
            p,
            failures,
            failure_rate: failures as f64 / cfg.concentration_trials.max(1) as f64,
            bound: (-p * n as f64 / 8.0).exp(),
        });
    }
    Ok(FillStudyResult {
        config_hash: cfg.hash(),
        records,
        summaries,
        fits,
        concentration,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcResult {
    pub config_hash: String,
    pub hypers: Hypers,
    pub chain: HyperChain,
}

/// The pilot hyperparameter chain on its own.
pub fn run_mcmc(cfg: &ExperimentConfig) -> Result<McmcResult> {
    cfg.validate()?;
    let chain = pilot_chain(cfg)?;
    let (sigma_f2, ell) = chain.posterior_mean;
    Ok(McmcResult {
        config_hash: cfg.hash(),
        hypers: Hypers { sigma_f2, ell },
        chain,
    })
}
