//! Randomized Bayesian quadrature on the real line.
//!
//! Designs are drawn i.i.d. from proposals whose spread grows with the
//! sample size (`N(0, log n)` for a Gaussian target, a Student-t scaled by
//! `n^{2α/(α+ν+1/2)}` for a Student target). A Gaussian-process prior with an
//! RBF or Matérn-3/2 kernel turns each design into a Gaussian posterior over
//! the integral; repeated designs are pooled by the law of total variance.
//!
//! ```
//! use randbq::{bq_posterior, Design, Embedding, Kernel, Measure, Proposal, DEFAULT_NUGGET};
//!
//! let kernel = Kernel::matern32(1.0, 0.8).unwrap();
//! let emb = Embedding::closed_form(kernel, Measure::standard_normal()).unwrap();
//! let proposal = Proposal::inflated(Measure::standard_normal(), 1.5).unwrap();
//! let design = Design::from_fn(proposal.draw(64, 7), |x| (-x * x).exp()).unwrap();
//! let post = bq_posterior(&kernel, &emb, &design, DEFAULT_NUGGET).unwrap();
//! assert!((post.mean - 1.0 / 3f64.sqrt()).abs() < 1e-3);
//! ```

pub mod bq;
pub mod embeddings;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod hyper;
pub mod integrands;
pub mod kernels;
pub mod measures;
pub mod quadrature;
pub mod sampling;
pub mod special;
pub mod stats;
pub mod uq;

pub use bq::{bq_posterior, prefix_posteriors, Design, PrefixPosterior, QuadraturePosterior};
pub use embeddings::{Embedding, EmbeddingMode, PriorVarianceMethod};
pub use error::{Error, Result};
pub use geometry::{fill_distance_1d, rate_fit, FillReport, RateFit};
pub use hyper::{run_gibbs, ChainConfig, GibbsProblem, HyperChain, HyperPrior};
pub use integrands::{Integrand, IntegrandId, TrueIntegral};
pub use kernels::{gram_matrix, GramSystem, Kernel, KernelVariant, DEFAULT_NUGGET};
pub use measures::Measure;
pub use sampling::{Proposal, ProposalFamily, RateTarget, SamplingMode, RNG_ALGORITHM};
pub use uq::{mixture_quantiles, total_variance, RepetitionSet, TotalVarianceReport};
