//! Dense direct solver used as an independent reference.
//!
//! This module deliberately shares no code with the iterative solvers: it
//! factors a dense copy of the matrix with partially pivoted Gaussian
//! elimination and solves by substitution. Tests compare iterative answers
//! against it, so any bug would have to appear in two unrelated algorithms
//! at once to go unnoticed.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::{norm2, Real};
use crate::operator::{CsrMatrix, DenseMatrix, LinearOperator};

/// LU factorization with partial pivoting of a dense complex matrix,
/// stored packed (unit lower triangle below the diagonal, U on and above).
pub struct DenseLu<T: Real> {
    n: usize,
    lu: Vec<Complex<T>>,
    /// `perm[k]` = pivot row swapped into position `k` at step `k`.
    perm: Vec<usize>,
}

impl<T: Real> DenseLu<T> {
    /// Factor `P A = L U`. Fails with [`Error::Singular`] when no usable
    /// pivot exists in some column.
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        let n = a.dim();
        let mut lu: Vec<Complex<T>> = a.data().to_vec();
        let mut perm = vec![0usize; n];
        // Singularity threshold scaled to the matrix (exact zeros still fail
        // for the zero matrix because the max entry is then zero too).
        let tiny = T::epsilon() * T::of(n as f64) * a.max_abs_entry();

        for k in 0..n {
            let mut piv_row = k;
            let mut piv_mag = lu[k * n + k].norm();
            for i in (k + 1)..n {
                let mag = lu[i * n + k].norm();
                if mag > piv_mag {
                    piv_mag = mag;
                    piv_row = i;
                }
            }
            if piv_mag <= tiny {
                return Err(Error::Singular(format!(
                    "no usable pivot in column {k} (best magnitude {piv_mag:e})"
                )));
            }
            perm[k] = piv_row;
            if piv_row != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv_row * n + j);
                }
            }
            let piv = lu[k * n + k];
            for i in (k + 1)..n {
                let l_ik = lu[i * n + k] / piv;
                lu[i * n + k] = l_ik;
                for j in (k + 1)..n {
                    let u_kj = lu[k * n + j];
                    lu[i * n + j] = lu[i * n + j] - l_ik * u_kj;
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve `A x = y` using the stored factorization.
    pub fn solve(&self, y: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let n = self.n;
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has length {}, expected {n}",
                y.len()
            )));
        }
        let mut x = y.to_vec();
        // The factorization swaps whole rows, multipliers included, so the
        // stored L is valid for P A = L U: permute first, substitute after.
        for k in 0..n {
            x.swap(k, self.perm[k]);
        }
        for k in 0..n {
            let xk = x[k];
            for i in (k + 1)..n {
                let l_ik = self.lu[i * n + k];
                x[i] = x[i] - l_ik * xk;
            }
        }
        // Backward substitution with U.
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in (k + 1)..n {
                s = s - self.lu[k * n + j] * x[j];
            }
            x[k] = s / self.lu[k * n + k];
        }
        Ok(x)
    }
}

/// Factor-and-solve convenience for one right-hand side.
pub fn dense_solve<T: Real>(a: &DenseMatrix<T>, y: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    DenseLu::factor(a)?.solve(y)
}

/// Direct solve of a sparse system by densifying it first. Intended for the
/// moderate sizes used in verification, not production work.
pub fn csr_solve<T: Real>(a: &CsrMatrix<T>, y: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    dense_solve(&a.to_dense(), y)
}

/// `||y - A x|| / ||y||` computed directly from a dense matrix; the
/// convention `0/0 = 0` applies when both are zero.
pub fn dense_rel_residual<T: Real>(
    a: &DenseMatrix<T>,
    x: &[Complex<T>],
    y: &[Complex<T>],
) -> T {
    let n = a.dim();
    let mut r = y.to_vec();
    for i in 0..n {
        let row = &a.data()[i * n..(i + 1) * n];
        let mut s = Complex::new(T::zero(), T::zero());
        for (aij, xj) in row.iter().zip(x) {
            s += *aij * *xj;
        }
        r[i] -= s;
    }
    let ynorm = norm2(y);
    let rnorm = norm2(&r);
    if ynorm > T::zero() {
        rnorm / ynorm
    } else if rnorm == T::zero() {
        T::zero()
    } else {
        T::infinity()
    }
}
