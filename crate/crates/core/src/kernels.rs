//! Stationary covariance kernels, Gram-matrix assembly and the Cholesky
//! machinery shared by the posterior and the hyperparameter sampler.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default diagonal jitter added to Gram matrices.
pub const DEFAULT_NUGGET: f64 = 1e-8;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelVariant {
    /// Squared exponential `σ²·exp(−r²/(2ℓ²))`.
    Rbf,
    /// Matérn with smoothness 3/2: `σ²·(1 + √3 r/ℓ)·exp(−√3 r/ℓ)`.
    Matern32,
}

impl KernelVariant {
    pub fn name(self) -> &'static str {
        match self {
            KernelVariant::Rbf => "rbf",
            KernelVariant::Matern32 => "matern32",
        }
    }
}

/// A stationary kernel with amplitude `sigma_f2` and lengthscale `ell`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub variant: KernelVariant,
    pub sigma_f2: f64,
    pub ell: f64,
}

impl Kernel {
    pub fn new(variant: KernelVariant, sigma_f2: f64, ell: f64) -> Result<Self> {
        if !(sigma_f2.is_finite() && sigma_f2 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sigma_f2 must be positive and finite, got {sigma_f2}"
            )));
        }
        if !(ell.is_finite() && ell > 0.0) {
            return Err(Error::InvalidInput(format!(
                "lengthscale must be positive and finite, got {ell}"
            )));
        }
        Ok(Kernel {
            variant,
            sigma_f2,
            ell,
        })
    }

    pub fn rbf(sigma_f2: f64, ell: f64) -> Result<Self> {
        Self::new(KernelVariant::Rbf, sigma_f2, ell)
    }

    pub fn matern32(sigma_f2: f64, ell: f64) -> Result<Self> {
        Self::new(KernelVariant::Matern32, sigma_f2, ell)
    }

    /// Same shape, unit amplitude.
    pub fn unit(&self) -> Kernel {
        Kernel {
            sigma_f2: 1.0,
            ..*self
        }
    }

    pub fn with_amplitude(&self, sigma_f2: f64) -> Kernel {
        Kernel { sigma_f2, ..*self }
    }

    /// Kernel value as a function of the Euclidean distance `r ≥ 0`.
    #[inline]
    pub fn of_distance(&self, r: f64) -> f64 {
        match self.variant {
            KernelVariant::Rbf => {
                let u = r / self.ell;
                self.sigma_f2 * (-0.5 * u * u).exp()
            }
            KernelVariant::Matern32 => {
                let u = SQRT_3 * r / self.ell;
                self.sigma_f2 * (1.0 + u) * (-u).exp()
            }
        }
    }

    /// One-dimensional evaluation `k(x, y)`.
    #[inline]
    pub fn eval1(&self, x: f64, y: f64) -> f64 {
        self.of_distance((x - y).abs())
    }

    /// `k(x, y)` for points of any (equal) dimension.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite kernel argument".into()));
        }
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(self.of_distance(r2.sqrt()))
    }
}

/// Free-function form of [`Kernel::eval`].
pub fn kernel_eval(k: &Kernel, x: &[f64], y: &[f64]) -> Result<f64> {
    k.eval(x, y)
}

/// A Gram matrix `K + ηI` with its lower Cholesky factor.
///
/// Both matrices are stored dense, row-major.
#[derive(Debug, Clone)]
pub struct GramSystem {
    n: usize,
    dim: usize,
    nugget: f64,
    points: Vec<f64>,
    matrix: Vec<f64>,
    factor: Vec<f64>,
}

impl GramSystem {
    /// Factorizes an explicit symmetric matrix (row-major, `n × n`).
    pub fn from_matrix(matrix: Vec<f64>, n: usize) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: matrix.len(),
            });
        }
        let factor = cholesky(&matrix, n)?;
        Ok(GramSystem {
            n,
            dim: 0,
            nugget: 0.0,
            points: Vec::new(),
            matrix,
            factor,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    /// Design points, flattened with stride [`GramSystem::dim`].
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn factor(&self) -> &[f64] {
        &self.factor
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }

    /// Solves `L y = rhs`.
    pub fn forward_solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.check_len(rhs.len())?;
        let n = self.n;
        let l = &self.factor;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let row = &l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / l[i * n + i];
        }
        Ok(y)
    }

    /// Solves `Lᵀ x = rhs`.
    pub fn backward_solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.check_len(rhs.len())?;
        let n = self.n;
        let l = &self.factor;
        let mut x = rhs.to_vec();
        for i in (0..n).rev() {
            x[i] /= l[i * n + i];
            let xi = x[i];
            let row = &l[i * n..i * n + i];
            for (xk, lik) in x[..i].iter_mut().zip(row) {
                *xk -= lik * xi;
            }
        }
        Ok(x)
    }

    /// `K⁻¹·rhs` via two triangular solves.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let y = self.forward_solve(rhs)?;
        self.backward_solve(&y)
    }

    /// `vᵀ K⁻¹ v`, computed as `‖L⁻¹ v‖²`.
    pub fn quad_form_inv(&self, v: &[f64]) -> Result<f64> {
        let y = self.forward_solve(v)?;
        Ok(y.iter().map(|a| a * a).sum())
    }

    /// `K·v` using the stored (nugget-inclusive) matrix.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v.len())?;
        let n = self.n;
        Ok((0..n)
            .map(|i| {
                self.matrix[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// `log |K| = 2 Σ log L_ii`.
    pub fn log_det(&self) -> f64 {
        (0..self.n)
            .map(|i| self.factor[i * self.n + i].ln())
            .sum::<f64>()
            * 2.0
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got,
            });
        }
        Ok(())
    }
}

/// Gram system for one-dimensional points.
pub fn gram_matrix(k: &Kernel, points: &[f64], nugget: f64) -> Result<GramSystem> {
    gram_matrix_nd(k, points, 1, nugget)
}

/// Gram system for `points` flattened with stride `dim`.
pub fn gram_matrix_nd(k: &Kernel, points: &[f64], dim: usize, nugget: f64) -> Result<GramSystem> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(Error::InvalidInput(format!(
            "{} coordinates do not split into points of dimension {dim}",
            points.len()
        )));
    }
    if !(nugget.is_finite() && nugget >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "nugget must be >= 0, got {nugget}"
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite design point".into()));
    }
    let n = points.len() / dim;
    let mut matrix = vec![0.0; n * n];
    for i in 0..n {
        let xi = &points[i * dim..(i + 1) * dim];
        matrix[i * n + i] = k.sigma_f2 + nugget;
        for j in 0..i {
            let xj = &points[j * dim..(j + 1) * dim];
            let r2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
            let v = k.of_distance(r2.sqrt());
            matrix[i * n + j] = v;
            matrix[j * n + i] = v;
        }
    }
    let factor = cholesky(&matrix, n)?;
    Ok(GramSystem {
        n,
        dim,
        nugget,
        points: points.to_vec(),
        matrix,
        factor,
    })
}

/// `K⁻¹·rhs`.
pub fn spd_solve(g: &GramSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    g.solve(rhs)
}

pub fn log_det(g: &GramSystem) -> f64 {
    g.log_det()
}

/// Unpivoted row-oriented Cholesky; returns the lower factor, row-major.
fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let (ri, rj) = (i * n, j * n);
            let dot: f64 = l[ri..ri + j]
                .iter()
                .zip(&l[rj..rj + j])
                .map(|(a, b)| a * b)
                .sum();
            let s = a[ri + j] - dot;
            if i == j {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::Factorization { pivot: i, value: s });
                }
                l[ri + i] = s.sqrt();
            } else {
                l[ri + j] = s / l[rj + j];
            }
        }
    }
    Ok(l)
}
