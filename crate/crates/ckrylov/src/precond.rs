//! Preconditioners and the operator wrappers that apply them on one side.
//!
//! A preconditioner here is anything that can solve `M z = v` (and
//! `M^H z = v`, which the shadow-vector methods need when they run
//! preconditioned). Three implementations are provided: the identity,
//! point-Jacobi, and a zero-fill incomplete LU factorization. Which side a
//! method applies its preconditioner on is a fixed property of the method —
//! see [`MethodId::precond_side`](crate::control::MethodId::precond_side) —
//! not something callers pick per run.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::{zeros, Real};
use crate::operator::{CsrMatrix, DenseMatrix, LinearOperator};

/// Solves `M z = v` for a fixed nonsingular `M`.
///
/// `apply*` means "apply the preconditioner", i.e. perform the solve; it does
/// not multiply by `M`.
pub trait Preconditioner<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    /// `z = M^{-1} v`.
    fn apply(&self, v: &[Complex<T>], z: &mut [Complex<T>]);

    /// `z = M^{-H} v`, i.e. solve `M^H z = v`.
    fn apply_hermitian(&self, v: &[Complex<T>], z: &mut [Complex<T>]);
}

/// Checked convenience wrapper around [`Preconditioner::apply`].
pub fn apply_precond<T: Real>(
    m: &dyn Preconditioner<T>,
    v: &[Complex<T>],
) -> Result<Vec<Complex<T>>> {
    if v.len() != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "preconditioner of dimension {} applied to vector of length {}",
            m.dim(),
            v.len()
        )));
    }
    let mut z = zeros(m.dim());
    m.apply(v, &mut z);
    Ok(z)
}

// ---------------------------------------------------------------------------
// Identity
// ---------------------------------------------------------------------------

/// The do-nothing preconditioner; applying it copies the input.
#[derive(Clone, Debug)]
pub struct Identity {
    n: usize,
}

impl Identity {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl<T: Real> Preconditioner<T> for Identity {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, v: &[Complex<T>], z: &mut [Complex<T>]) {
        z.copy_from_slice(v);
    }

    fn apply_hermitian(&self, v: &[Complex<T>], z: &mut [Complex<T>]) {
        z.copy_from_slice(v);
    }
}

// ---------------------------------------------------------------------------
// Jacobi
// ---------------------------------------------------------------------------

/// Point-Jacobi (diagonal) preconditioner: `M = diag(A)`.
#[derive(Clone, Debug)]
pub struct Jacobi<T: Real> {
    diag: Vec<Complex<T>>,
}

impl<T: Real> Jacobi<T> {
    /// Build from an explicit diagonal; every entry must be nonzero.
    pub fn from_diagonal(diag: Vec<Complex<T>>) -> Result<Self> {
        for (i, d) in diag.iter().enumerate() {
            if d.norm() == T::zero() {
                return Err(Error::ZeroDiagonal { row: i, magnitude: 0.0 });
            }
        }
        Ok(Self { diag })
    }

    pub fn from_dense(a: &DenseMatrix<T>) -> Result<Self> {
        Self::from_diagonal(a.diagonal())
    }

    pub fn from_csr(a: &CsrMatrix<T>) -> Result<Self> {
        Self::from_diagonal(a.diagonal())
    }
}

impl<T: Real> Preconditioner<T> for Jacobi<T> {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, v: &[Complex<T>], z: &mut [Complex<T>]) {
        for ((zi, vi), d) in z.iter_mut().zip(v).zip(&self.diag) {
            *zi = vi / d;
        }
    }

    fn apply_hermitian(&self, v: &[Complex<T>], z: &mut [Complex<T>]) {
        for ((zi, vi), d) in z.iter_mut().zip(v).zip(&self.diag) {
            *zi = vi / d.conj();
        }
    }
}

// ---------------------------------------------------------------------------
// ILU(0)
// ---------------------------------------------------------------------------

/// Zero-fill incomplete LU factorization of a CSR matrix.
///
/// The factors live on exactly the sparsity pattern of `A` (unit-diagonal `L`
/// strictly below, `U` on and above the diagonal), so for patterns that incur
/// no fill-in during elimination — diagonal, triangular, tridiagonal — the
/// factorization is the exact LU and `M^{-1} A = I` up to roundoff.
#[derive(Clone, Debug)]
pub struct Ilu0<T: Real> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    /// Factored values on the original pattern: strictly-lower entries hold
    /// `L`, the rest hold `U`.
    lu: Vec<Complex<T>>,
    /// Position of the diagonal entry within each row's slice.
    diag_idx: Vec<usize>,
}

impl<T: Real> Ilu0<T> {
    /// Factor `a`. Fails if a diagonal entry is missing from the pattern or
    /// a pivot falls below `1e3 * eps * max|A|`.
    pub fn new(a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.rows();
        let row_ptr = a.row_ptr().to_vec();
        let col_idx = a.col_idx().to_vec();
        let mut lu = a.values().to_vec();

        let mut diag_idx = vec![usize::MAX; n];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                if col_idx[k] == i {
                    diag_idx[i] = k;
                    break;
                }
            }
            if diag_idx[i] == usize::MAX {
                return Err(Error::ZeroDiagonal { row: i, magnitude: 0.0 });
            }
        }

        let pivot_floor = T::of(1e3) * T::epsilon() * a.max_abs_entry();

        // IKJ elimination restricted to the existing pattern.
        for i in 0..n {
            let (row_start, row_end) = (row_ptr[i], row_ptr[i + 1]);
            for kk in row_start..row_end {
                let k = col_idx[kk];
                if k >= i {
                    break;
                }
                let pivot = lu[diag_idx[k]];
                let lik = lu[kk] / pivot;
                lu[kk] = lik;
                // Subtract lik * (row k of U) from the remainder of row i,
                // keeping only positions already present in row i.
                let mut pos = kk + 1;
                for uk in (diag_idx[k] + 1)..row_ptr[k + 1] {
                    let j = col_idx[uk];
                    while pos < row_end && col_idx[pos] < j {
                        pos += 1;
                    }
                    if pos == row_end {
                        break;
                    }
                    if col_idx[pos] == j {
                        lu[pos] = lu[pos] - lik * lu[uk];
                    }
                }
            }
            let piv = lu[diag_idx[i]];
            if piv.norm() < pivot_floor {
                return Err(Error::ZeroDiagonal {
                    row: i,
                    magnitude: piv.norm().to_f64().unwrap_or(0.0),
                });
            }
        }

        Ok(Self { n, row_ptr, col_idx, lu, diag_idx })
    }
}

impl<T: Real> Preconditioner<T> for Ilu0<T> {
    fn dim(&self) -> usize {
        self.n
    }

    /// Solve `L U z = v`: forward substitution with unit-diagonal `L`, then
    /// backward substitution with `U`.
    fn apply(&self, v: &[Complex<T>], z: &mut [Complex<T>]) {
        z.copy_from_slice(v);
        for i in 0..self.n {
            let mut acc = z[i];
            for k in self.row_ptr[i]..self.diag_idx[i] {
                acc = acc - self.lu[k] * z[self.col_idx[k]];
            }
            z[i] = acc;
        }
        for i in (0..self.n).rev() {
            let mut acc = z[i];
            for k in (self.diag_idx[i] + 1)..self.row_ptr[i + 1] {
                acc = acc - self.lu[k] * z[self.col_idx[k]];
            }
            z[i] = acc / self.lu[self.diag_idx[i]];
        }
    }

    /// Solve `(L U)^H z = v` as `U^H w = v` then `L^H z = w`.
    ///
    /// `U^H` is lower triangular and `L^H` is unit upper triangular, but both
    /// are stored row-wise as parts of `U`/`L`, so the substitutions run in
    /// scatter form: once `z[i]` is final, its contribution is pushed into
    /// the remaining unknowns.
    fn apply_hermitian(&self, v: &[Complex<T>], z: &mut [Complex<T>]) {
        z.copy_from_slice(v);
        for i in 0..self.n {
            z[i] = z[i] / self.lu[self.diag_idx[i]].conj();
            let zi = z[i];
            for k in (self.diag_idx[i] + 1)..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                z[j] = z[j] - self.lu[k].conj() * zi;
            }
        }
        for i in (0..self.n).rev() {
            let zi = z[i];
            for k in self.row_ptr[i]..self.diag_idx[i] {
                let j = self.col_idx[k];
                z[j] = z[j] - self.lu[k].conj() * zi;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Side-application wrappers
// ---------------------------------------------------------------------------

/// The operator `M^{-1} A`, used by methods that precondition from the left.
pub struct LeftPreconditioned<'a, T: Real> {
    a: &'a dyn LinearOperator<T>,
    m: &'a dyn Preconditioner<T>,
}

impl<'a, T: Real> LeftPreconditioned<'a, T> {
    pub fn new(a: &'a dyn LinearOperator<T>, m: &'a dyn Preconditioner<T>) -> Self {
        debug_assert_eq!(a.dim(), m.dim());
        Self { a, m }
    }
}

impl<T: Real> LinearOperator<T> for LeftPreconditioned<'_, T> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        let mut tmp = zeros(self.a.dim());
        self.a.apply(x, &mut tmp);
        self.m.apply(&tmp, y);
    }

    fn supports_hermitian(&self) -> bool {
        self.a.supports_hermitian()
    }

    /// `(M^{-1} A)^H x = A^H M^{-H} x`.
    fn apply_hermitian(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        let mut tmp = zeros(self.a.dim());
        self.m.apply_hermitian(x, &mut tmp);
        self.a.apply_hermitian(&tmp, y);
    }
}

/// The operator `A M^{-1}`, used by methods that precondition from the right.
/// A solve against this operator yields `x_tilde` with `x = M^{-1} x_tilde`.
pub struct RightPreconditioned<'a, T: Real> {
    a: &'a dyn LinearOperator<T>,
    m: &'a dyn Preconditioner<T>,
}

impl<'a, T: Real> RightPreconditioned<'a, T> {
    pub fn new(a: &'a dyn LinearOperator<T>, m: &'a dyn Preconditioner<T>) -> Self {
        debug_assert_eq!(a.dim(), m.dim());
        Self { a, m }
    }
}

impl<T: Real> LinearOperator<T> for RightPreconditioned<'_, T> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        let mut tmp = zeros(self.a.dim());
        self.m.apply(x, &mut tmp);
        self.a.apply(&tmp, y);
    }

    fn supports_hermitian(&self) -> bool {
        self.a.supports_hermitian()
    }

    /// `(A M^{-1})^H x = M^{-H} A^H x`.
    fn apply_hermitian(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        let mut tmp = zeros(self.a.dim());
        self.a.apply_hermitian(x, &mut tmp);
        self.m.apply_hermitian(&tmp, y);
    }
}
