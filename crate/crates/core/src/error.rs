use thiserror::Error;

/// Errors raised by the quadrature engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("cholesky factorization failed at pivot {pivot} (value {value:e})")]
    Factorization { pivot: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported kernel/measure pair ({kernel}, {measure}); use kernel_mean_numeric")]
    UnsupportedPair { kernel: String, measure: String },

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error:e}")]
    Accuracy { estimate: f64, error: f64 },

    #[error("negative posterior variance {0:e}: embedding and kernel are inconsistent")]
    NumericalConsistency(f64),

    #[error("sample size must be at least 2, got {0}")]
    InvalidSize(usize),

    #[error("fill distance of an empty point set is unbounded")]
    InfiniteFill,

    #[error("ratio undefined: within-design variance is zero")]
    UndefinedRatio,

    #[error("experiment {experiment} failed at n={n} (seed {seed}): {source}")]
    Experiment {
        experiment: String,
        n: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("hyperparameter chain aborted at iteration {iteration}: {source}")]
    ChainAborted {
        iteration: usize,
        #[source]
        source: Box<Error>,
        partial: Box<crate::hyper::HyperChain>,
    },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
