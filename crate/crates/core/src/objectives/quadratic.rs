use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use super::{Objective, ObjectiveError};
use crate::rng;

/// `f(x) = ½ xᵀ A x` with `A = U diag(λ) Uᵀ`.
///
/// The eigenvalues are log-spaced over `[1, κ]`, so the smallest curvature is
/// always one and `κ` sets the absolute scale of the stiff directions. `A` is
/// never formed; evaluation goes through the eigenbasis with fixed-order
/// loops.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    d: usize,
    kappa: f64,
    eigenvalues: Vec<f64>,
    /// Row `j` holds eigenvector `u_j`, i.e. this is `Uᵀ` in row-major order.
    eigenvectors: Vec<f64>,
}

impl QuadraticProblem {
    /// Builds the problem from an explicit orthonormal eigenbasis (`Uᵀ`,
    /// row-major) and eigenvalues.
    pub fn from_parts(kappa: f64, eigenvalues: Vec<f64>, eigenvectors: Vec<f64>) -> Self {
        let d = eigenvalues.len();
        assert_eq!(eigenvectors.len(), d * d, "eigenbasis must be d x d");
        Self {
            d,
            kappa,
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvector `j`.
    pub fn eigenvector(&self, j: usize) -> &[f64] {
        &self.eigenvectors[j * self.d..(j + 1) * self.d]
    }

    /// Dense `A`, for checks only.
    pub fn dense_matrix(&self) -> DMatrix<f64> {
        let u = DMatrix::from_fn(self.d, self.d, |i, j| self.eigenvector(j)[i]);
        let lambda =
            DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eigenvalues));
        &u * lambda * u.transpose()
    }
}

impl Objective for QuadraticProblem {
    fn dim(&self) -> usize {
        self.d
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut f = 0.0;
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let u = self.eigenvector(j);
            let z = u.iter().zip(x).fold(0.0, |acc, (a, b)| acc + a * b);
            let w = lambda * z;
            f += z * w;
            for (g, a) in grad.iter_mut().zip(u) {
                *g += w * a;
            }
        }
        0.5 * f
    }
}

/// Log-spaced eigenvalues `κ^{j/(d-1)}`, `j = 0..d`.
fn log_spaced(kappa: f64, d: usize) -> Vec<f64> {
    (0..d)
        .map(|j| kappa.powf(j as f64 / (d - 1) as f64))
        .collect()
}

/// Random rotated quadratic with condition number `kappa`.
///
/// The eigenbasis is the Q factor of a seeded standard-normal matrix, with
/// columns flipped so that `diag(R) > 0`; that makes the basis a pure
/// function of `(kappa, d, seed)`.
pub fn make_quadratic(kappa: f64, d: usize, seed: u64) -> Result<QuadraticProblem, ObjectiveError> {
    if d < 2 {
        return Err(ObjectiveError::DimensionTooSmall {
            name: "quadratic",
            min: 2,
            got: d,
        });
    }
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(ObjectiveError::InvalidConditionNumber(kappa));
    }
    let mut rng = rng::stream(&format!(
        "quadratic/kappa={kappa:e}/d={d}/seed={seed}/basis"
    ));
    let entries: Vec<f64> = (0..d * d)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let gaussian = DMatrix::from_row_slice(d, d, &entries);
    let qr = gaussian.qr();
    let r = qr.r();
    let q = qr.q();

    let mut eigenvectors = Vec::with_capacity(d * d);
    for j in 0..d {
        let sign = if r[(j, j)] < 0.0 { -1.0 } else { 1.0 };
        eigenvectors.extend(q.column(j).iter().map(|x| sign * x));
    }
    Ok(QuadraticProblem::from_parts(
        kappa,
        log_spaced(kappa, d),
        eigenvectors,
    ))
}
