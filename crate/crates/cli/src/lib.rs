//! Argument parsing for the `randbq` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use randbq::embeddings::PriorVarianceMethod;
use randbq::experiments::{ConfigOverrides, ExperimentConfig, ExperimentKind, Hypers, Strategy};
use randbq::{KernelVariant, SamplingMode};

#[derive(Debug, Parser)]
#[command(
    name = "randbq",
    version,
    about = "Randomized Bayesian quadrature experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Run,
    Repeat,
    Rates,
    Fill,
    Mcmc,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One design per strategy and size.
    Run(ConfigArgs),
    /// Independent repetitions with total-variance aggregates.
    Repeat(ConfigArgs),
    /// Repetitions plus log-log rate fits of the medians.
    Rates(ConfigArgs),
    /// Fill distances and the concentration check.
    Fill(ConfigArgs),
    /// The hyperparameter chain on its own.
    Mcmc(ConfigArgs),
}

impl Command {
    pub fn split(&self) -> (Action, &ConfigArgs) {
        match self {
            Command::Run(a) => (Action::Run, a),
            Command::Repeat(a) => (Action::Repeat, a),
            Command::Rates(a) => (Action::Rates, a),
            Command::Fill(a) => (Action::Fill, a),
            Command::Mcmc(a) => (Action::Mcmc, a),
        }
    }
}

impl Action {
    fn default_experiment(self) -> ExperimentKind {
        match self {
            Action::Run | Action::Repeat => ExperimentKind::RbfGaussian,
            Action::Rates => ExperimentKind::RateStudy,
            Action::Fill => ExperimentKind::FillStudy,
            Action::Mcmc => ExperimentKind::McmcHypers,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    Rbf,
    Matern32,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Batch,
    Sequential,
}

fn parse_experiment(s: &str) -> Result<ExperimentKind, String> {
    ExperimentKind::parse(s).ok_or_else(|| {
        let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
        format!(
            "unknown experiment '{s}' (expected one of {})",
            names.join(", ")
        )
    })
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    Strategy::parse(s)
        .ok_or_else(|| format!("unknown strategy '{s}' (expected inflated or target)"))
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON file with config fields; flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_experiment)]
    pub experiment: Option<ExperimentKind>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// Single design size (shorthand for a one-element grid).
    #[arg(long, conflicts_with = "n_grid")]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    #[arg(short = 'R', long)]
    pub repetitions: Option<usize>,
    #[arg(short = 'S', long)]
    pub mixture_draws: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    pub strategies: Option<Vec<Strategy>>,
    /// Smoothness in the proposal inflation.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Use `α·log n` instead of `log n` for the Gaussian inflation.
    #[arg(long)]
    pub alpha_factor: bool,
    #[arg(long, value_enum)]
    pub sampling_mode: Option<ModeArg>,
    #[arg(long)]
    pub alpha_f: Option<f64>,
    #[arg(long)]
    pub beta_f: Option<f64>,
    #[arg(long)]
    pub ell_log_mean: Option<f64>,
    #[arg(long)]
    pub ell_log_variance: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Random-walk step on log ℓ.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub chain_nugget: Option<f64>,
    /// Drop the log-determinant from the lengthscale target.
    #[arg(long)]
    pub no_log_det: bool,
    #[arg(long)]
    pub pilot_n: Option<usize>,
    /// Fixed signal variance; skips the chain (needs --ell).
    #[arg(long, requires = "ell")]
    pub sigma_f2: Option<f64>,
    /// Fixed lengthscale; skips the chain (needs --sigma-f2).
    #[arg(long, requires = "sigma_f2")]
    pub ell: Option<f64>,
    #[arg(long)]
    pub nugget: Option<f64>,
    #[arg(long)]
    pub embedding_rel_tol: Option<f64>,
    /// Monte Carlo samples for a numeric prior variance (default: quadrature).
    #[arg(long)]
    pub mc_prior_samples: Option<usize>,
    #[arg(long, requires = "mc_prior_samples", default_value_t = 0)]
    pub mc_prior_seed: u64,
    #[arg(long)]
    pub concentration_n: Option<usize>,
    #[arg(long)]
    pub concentration_trials: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(short = 'o', long)]
    pub output_dir: Option<PathBuf>,
    /// Print the resolved config as JSON and exit.
    #[arg(long)]
    pub print_config: bool,
}

impl ConfigArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            experiment: self.experiment,
            kernel: self.kernel.map(|k| match k {
                KernelArg::Rbf => KernelVariant::Rbf,
                KernelArg::Matern32 => KernelVariant::Matern32,
            }),
            n_grid: self.n.map(|n| vec![n]).or_else(|| self.n_grid.clone()),
            repetitions: self.repetitions,
            mixture_draws: self.mixture_draws,
            seed: self.seed,
            strategies: self.strategies.clone(),
            alpha: self.alpha,
            include_alpha_factor: self.alpha_factor.then_some(true),
            sampling_mode: self.sampling_mode.map(|m| match m {
                ModeArg::Batch => SamplingMode::Batch,
                ModeArg::Sequential => SamplingMode::Sequential,
            }),
            hypers: self
                .sigma_f2
                .zip(self.ell)
                .map(|(sigma_f2, ell)| Hypers { sigma_f2, ell }),
            pilot_n: self.pilot_n,
            nugget: self.nugget,
            embedding_rel_tol: self.embedding_rel_tol,
            prior_variance: self
                .mc_prior_samples
                .map(|samples| PriorVarianceMethod::MonteCarlo {
                    samples,
                    seed: self.mc_prior_seed,
                }),
            concentration_n: self.concentration_n,
            concentration_trials: self.concentration_trials,
            workers: self.workers,
            output_dir: self.output_dir.clone(),
            ..Default::default()
        }
    }

    /// Field-level tweaks of the nested prior and chain settings.
    fn patch(&self, cfg: &mut ExperimentConfig) {
        let p = &mut cfg.hyperprior;
        p.alpha_f = self.alpha_f.unwrap_or(p.alpha_f);
        p.beta_f = self.beta_f.unwrap_or(p.beta_f);
        p.ell_log_mean = self.ell_log_mean.unwrap_or(p.ell_log_mean);
        p.ell_log_variance = self.ell_log_variance.unwrap_or(p.ell_log_variance);
        let c = &mut cfg.chain;
        c.iterations = self.iterations.unwrap_or(c.iterations);
        c.burn_in = self.burn_in.unwrap_or(c.burn_in);
        c.step = self.step.unwrap_or(c.step);
        c.nugget = self.chain_nugget.unwrap_or(c.nugget);
        if self.no_log_det {
            c.include_log_det = false;
        }
    }
}

/// Builds the config for a subcommand: preset, then the `--config` file,
/// then flags.
pub fn resolve_config(action: Action, args: &ConfigArgs) -> anyhow::Result<ExperimentConfig> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
            ConfigOverrides::from_json(&text)?
        }
        None => ConfigOverrides::default(),
    };
    let layered = file.layered(args.overrides());
    let kind = layered.experiment.unwrap_or(action.default_experiment());
    let allowed = match action {
        Action::Run | Action::Repeat | Action::Rates => {
            !matches!(kind, ExperimentKind::FillStudy | ExperimentKind::McmcHypers)
        }
        Action::Fill | Action::Mcmc => true,
    };
    if !allowed {
        anyhow::bail!("experiment {kind} cannot be run with this subcommand");
    }
    let mut cfg = layered.resolve(kind)?;
    args.patch(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub action: Action,
    pub config: ExperimentConfig,
    pub print_config: bool,
}

/// Parses a full command line (including the program name).
pub fn parse_cli<I, T>(args: I) -> Result<Invocation, ParseError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(ParseError::Usage)?;
    let (action, a) = cli.command.split();
    let config = resolve_config(action, a).map_err(ParseError::Config)?;
    Ok(Invocation {
        action,
        config,
        print_config: a.print_config,
    })
}

#[derive(Debug)]
pub enum ParseError {
    Usage(clap::Error),
    Config(anyhow::Error),
}
