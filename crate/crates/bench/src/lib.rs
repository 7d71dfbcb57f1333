//! Shared fixtures for the benchmarks.

use randbq::embeddings::PriorVarianceMethod;
use randbq::{Design, Embedding, Kernel, KernelVariant, Measure, Proposal};

pub const SEED: u64 = 0x5eed;

/// Matérn-3/2 kernel with the hyperparameters the Gaussian-target runs settle on.
pub fn matern() -> Kernel {
    Kernel::matern32(0.8, 1.0).expect("valid kernel")
}

pub fn kernel(variant: KernelVariant) -> Kernel {
    match variant {
        KernelVariant::Rbf => Kernel::rbf(0.26, 0.37).expect("valid kernel"),
        KernelVariant::Matern32 => matern(),
    }
}

/// Inflated-proposal design of size `n` against `N(0, 1)` with a smooth integrand.
pub fn gaussian_design(n: usize) -> Design {
    let p = Proposal::inflated(Measure::standard_normal(), 1.5).expect("valid proposal");
    Design::from_fn(p.draw(n, SEED), |x| 3f64.sqrt() * (-x * x).exp()).expect("finite values")
}

pub fn student_measure() -> Measure {
    Measure::student_t(4.49, 1.0).expect("valid measure")
}

/// Numeric embedding against `t₄.₄₉`.
pub fn student_embedding(k: Kernel) -> Embedding {
    Embedding::numeric(k, student_measure(), 1e-10, PriorVarianceMethod::Quadrature)
        .expect("embedding")
}
