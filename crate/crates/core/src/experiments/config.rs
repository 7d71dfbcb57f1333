use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embeddings::PriorVarianceMethod;
use crate::error::{Error, Result};
use crate::hyper::{ChainConfig, HyperPrior};
use crate::integrands::{Integrand, IntegrandId};
use crate::kernels::{KernelVariant, DEFAULT_NUGGET};
use crate::measures::Measure;
use crate::sampling::{Proposal, SamplingMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    RbfGaussian,
    MaternGaussian,
    MaternStudent,
    AppendixB,
    RateStudy,
    FillStudy,
    McmcHypers,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::RbfGaussian,
        ExperimentKind::MaternGaussian,
        ExperimentKind::MaternStudent,
        ExperimentKind::AppendixB,
        ExperimentKind::RateStudy,
        ExperimentKind::FillStudy,
        ExperimentKind::McmcHypers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::RbfGaussian => "rbf-gaussian",
            ExperimentKind::MaternGaussian => "matern-gaussian",
            ExperimentKind::MaternStudent => "matern-student",
            ExperimentKind::AppendixB => "appendix-b",
            ExperimentKind::RateStudy => "rate-study",
            ExperimentKind::FillStudy => "fill-study",
            ExperimentKind::McmcHypers => "mcmc-hypers",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Integration measure the design targets.
    pub fn target_measure(self) -> Measure {
        match self {
            ExperimentKind::MaternStudent => Integrand::new(IntegrandId::F2Changed).target_measure,
            _ => Measure::standard_normal(),
        }
    }

    pub fn integrand(self) -> Integrand {
        match self {
            ExperimentKind::MaternStudent => Integrand::new(IntegrandId::F2Changed),
            ExperimentKind::AppendixB => Integrand::f2_against(Measure::standard_normal()),
            _ => Integrand::new(IntegrandId::F1),
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which design distribution a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// The inflated proposal `Q_n` matched to the target family.
    Inflated,
    /// Sampling from the integration measure itself.
    Target,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Inflated => "inflated",
            Strategy::Target => "target",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "inflated" => Some(Strategy::Inflated),
            "target" => Some(Strategy::Target),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypers {
    pub sigma_f2: f64,
    pub ell: f64,
}

/// Fully resolved settings of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub kernel: KernelVariant,
    pub n_grid: Vec<usize>,
    pub repetitions: usize,
    pub mixture_draws: usize,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    /// Smoothness used by the proposal inflation.
    pub alpha: f64,
    pub include_alpha_factor: bool,
    pub sampling_mode: SamplingMode,
    pub hyperprior: HyperPrior,
    pub chain: ChainConfig,
    /// Size of the design the hyperparameter chain is run on.
    pub pilot_n: usize,
    /// Fixed hyperparameters; skips the chain when set.
    pub hypers: Option<Hypers>,
    pub nugget: f64,
    pub embedding_rel_tol: f64,
    pub prior_variance: PriorVarianceMethod,
    pub concentration_n: usize,
    pub concentration_trials: usize,
    /// Worker threads for repetitions; `None` uses all cores.
    pub workers: Option<usize>,
    pub output_dir: PathBuf,
}

fn powers_of_two(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

fn stepped(step: usize, max: usize) -> Vec<usize> {
    (1..=max / step).map(|i| i * step).collect()
}

impl ExperimentConfig {
    pub fn preset(kind: ExperimentKind) -> Self {
        let (kernel, n_grid, repetitions) = match kind {
            ExperimentKind::RbfGaussian | ExperimentKind::AppendixB => {
                (KernelVariant::Rbf, stepped(10, 150), 100)
            }
            ExperimentKind::MaternGaussian => (KernelVariant::Matern32, stepped(50, 500), 100),
            ExperimentKind::MaternStudent => (KernelVariant::Matern32, stepped(100, 500), 100),
            ExperimentKind::RateStudy => (KernelVariant::Matern32, powers_of_two(5, 11), 20),
            ExperimentKind::FillStudy => (KernelVariant::Matern32, powers_of_two(5, 12), 100),
            ExperimentKind::McmcHypers => (KernelVariant::Rbf, vec![100], 1),
        };
        let strategies = match kind {
            ExperimentKind::RateStudy => vec![Strategy::Inflated],
            _ => vec![Strategy::Inflated, Strategy::Target],
        };
        ExperimentConfig {
            experiment: kind,
            kernel,
            n_grid,
            repetitions,
            mixture_draws: 100,
            seed: 0,
            strategies,
            alpha: 1.5,
            include_alpha_factor: false,
            sampling_mode: SamplingMode::Batch,
            hyperprior: HyperPrior::default(),
            chain: ChainConfig::default(),
            pilot_n: 100,
            hypers: None,
            nugget: DEFAULT_NUGGET,
            embedding_rel_tol: 1e-10,
            prior_variance: PriorVarianceMethod::Quadrature,
            concentration_n: 200,
            concentration_trials: 1000,
            workers: None,
            output_dir: PathBuf::from("out"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.n_grid.is_empty() {
            return bad("n_grid is empty".into());
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!(
                "n_grid must be strictly increasing, got {:?}",
                self.n_grid
            ));
        }
        if self.n_grid[0] < 2 {
            return bad("design sizes start at 2".into());
        }
        if self.repetitions < 1 || self.mixture_draws < 1 {
            return bad("repetitions and mixture_draws must be at least 1".into());
        }
        if self.strategies.is_empty() {
            return bad("no sampling strategy selected".into());
        }
        if self.pilot_n < 2 || self.concentration_n < 2 {
            return bad("pilot_n and concentration_n must be at least 2".into());
        }
        if !(self.nugget >= 0.0) {
            return bad(format!("nugget must be non-negative, got {}", self.nugget));
        }
        if let Some(h) = self.hypers {
            if !(h.sigma_f2 > 0.0 && h.ell > 0.0) {
                return bad(format!("fixed hyperparameters must be positive, got {h:?}"));
            }
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        if self.chain.burn_in >= self.chain.iterations || !(self.chain.step > 0.0) {
            return bad(format!(
                "chain needs burn_in < iterations and a positive step, got {:?}",
                self.chain
            ));
        }
        self.hyperprior.validate()?;
        self.proposal(Strategy::Inflated).map(|_| ())
    }

    pub fn n_max(&self) -> usize {
        *self.n_grid.last().expect("validated non-empty grid")
    }

    pub fn proposal(&self, strategy: Strategy) -> Result<Proposal> {
        let target = self.experiment.target_measure();
        let p = match strategy {
            Strategy::Inflated => Proposal::inflated(target, self.alpha)?,
            Strategy::Target => Proposal::baseline(target, self.alpha)?,
        };
        Ok(p.with_mode(self.sampling_mode)
            .with_alpha_factor(self.include_alpha_factor))
    }

    /// SHA-256 of the settings that influence results; `workers` and
    /// `output_dir` are excluded.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("workers");
            obj.remove("output_dir");
        }
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Partial configuration as read from a file or the command line. Field
/// names match [`ExperimentConfig`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub experiment: Option<ExperimentKind>,
    pub kernel: Option<KernelVariant>,
    pub n_grid: Option<Vec<usize>>,
    pub repetitions: Option<usize>,
    pub mixture_draws: Option<usize>,
    pub seed: Option<u64>,
    pub strategies: Option<Vec<Strategy>>,
    pub alpha: Option<f64>,
    pub include_alpha_factor: Option<bool>,
    pub sampling_mode: Option<SamplingMode>,
    pub hyperprior: Option<HyperPrior>,
    pub chain: Option<ChainConfig>,
    pub pilot_n: Option<usize>,
    pub hypers: Option<Hypers>,
    pub nugget: Option<f64>,
    pub embedding_rel_tol: Option<f64>,
    pub prior_variance: Option<PriorVarianceMethod>,
    pub concentration_n: Option<usize>,
    pub concentration_trials: Option<usize>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

macro_rules! layer {
    ($base:ident, $top:ident; $($f:ident),*) => {
        ConfigOverrides { $($f: $top.$f.or($base.$f)),* }
    };
}

macro_rules! apply {
    ($cfg:ident, $o:ident; $($f:ident),*) => {
        $(if let Some(v) = $o.$f { $cfg.$f = v; })*
    };
}

impl ConfigOverrides {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    /// Fields set in `top` win over fields set in `self`.
    pub fn layered(self, top: ConfigOverrides) -> ConfigOverrides {
        let base = self;
        layer!(base, top; experiment, kernel, n_grid, repetitions, mixture_draws, seed, strategies,
            alpha, include_alpha_factor, sampling_mode, hyperprior, chain, pilot_n, hypers, nugget,
            embedding_rel_tol, prior_variance, concentration_n, concentration_trials, workers, output_dir)
    }

    /// Applies the overrides on top of the preset of the chosen experiment.
    pub fn resolve(self, default_kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::preset(self.experiment.unwrap_or(default_kind));
        let o = self;
        if o.hypers.is_some() {
            cfg.hypers = o.hypers;
        }
        if o.workers.is_some() {
            cfg.workers = o.workers;
        }
        apply!(cfg, o; kernel, n_grid, repetitions, mixture_draws, seed, strategies, alpha,
            include_alpha_factor, sampling_mode, hyperprior, chain, pilot_n, nugget, embedding_rel_tol,
            prior_variance, concentration_n, concentration_trials, output_dir);
        cfg.validate()?;
        Ok(cfg)
    }
}
