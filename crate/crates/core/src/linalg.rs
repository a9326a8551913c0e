//! Dense kernels used on the (small) support of sparse operators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// Eigendecomposition of a Hermitian matrix: real eigenvalues and unitary
/// eigenvector columns.
pub(crate) fn eigh(m: &DMatrix<Complex64>) -> (DVector<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(m.clone());
    (eig.eigenvalues, eig.eigenvectors)
}

pub(crate) struct LyapunovSolution {
    pub solution: DMatrix<Complex64>,
    /// Largest `|<j|B|k>|` over eigenpairs with `lambda_j + lambda_k <= eps_supp`.
    pub leak: f64,
}

/// Solves `X A + A X = 2 B` for Hermitian `X`, with `A` Hermitian positive
/// semidefinite, by diagonalising `A`. Components of `X` between eigenvectors
/// whose eigenvalue sum does not exceed `eps_supp` are set to zero; the size
/// of `B` there is reported as `leak`.
pub(crate) fn solve_symmetric_lyapunov(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    eps_supp: f64,
) -> LyapunovSolution {
    let (lambda, v) = eigh(a);
    let vh = v.adjoint();
    let b_eig = &vh * b * &v;
    let n = lambda.len();
    let mut leak: f64 = 0.0;
    let x_eig = DMatrix::from_fn(n, n, |j, k| {
        let denom = lambda[j] + lambda[k];
        if denom > eps_supp {
            b_eig[(j, k)] * (2.0 / denom)
        } else {
            leak = leak.max(b_eig[(j, k)].norm());
            Complex64::default()
        }
    });
    let x = &v * x_eig * &vh;
    let solution = (&x + x.adjoint()) * Complex64::new(0.5, 0.0);
    LyapunovSolution { solution, leak }
}

/// `Tr(A B)`, real part.
pub(crate) fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| (x * y).re).sum()
}
