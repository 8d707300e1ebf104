//! The matrix-free operator abstraction and its two concrete matrix types.
//!
//! Solvers only ever see [`LinearOperator`]: a dimension, a matvec, and
//! optional Hermitian/transpose applications. Callers with an explicit matrix
//! use [`DenseMatrix`] or [`CsrMatrix`]; callers with a routine (an FFT-based
//! convolution, a stencil, ...) implement the trait themselves and never
//! materialize entries.
//!
//! `apply_transpose` has a default implementation through
//! `conj . apply_hermitian . conj`, so an operator that provides the
//! Hermitian application gets the transpose for free, and vice versa is not
//! required. `declared_symmetric` is an assertion, not a measurement: the
//! concrete matrix types only set it after an explicit check, while
//! matrix-free operators may declare it unverified — the symmetric-only
//! methods trust the flag and refuse to run without it.

use num_complex::Complex;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::numerics::{conj_into, zeros, Real};

/// A square linear operator on complex vectors of a fixed dimension.
///
/// The in-place application methods panic on dimension mismatch; the solve
/// entry points validate dimensions once up front, and every internal work
/// vector is allocated at the operator's dimension.
pub trait LinearOperator<T: Real>: Send + Sync {
    /// Problem dimension `n`; `apply` maps length-`n` slices to length-`n`
    /// slices.
    fn dim(&self) -> usize;

    /// `y = A x`.
    fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]);

    /// Whether [`apply_hermitian`](Self::apply_hermitian) is implemented.
    fn supports_hermitian(&self) -> bool {
        false
    }

    /// `y = A^H x` (conjugate transpose). Only called when
    /// [`supports_hermitian`](Self::supports_hermitian) returns `true`.
    fn apply_hermitian(&self, _x: &[Complex<T>], _y: &mut [Complex<T>]) {
        panic!("operator does not implement apply_hermitian");
    }

    /// Whether [`apply_transpose`](Self::apply_transpose) may be called.
    /// Defaults to the Hermitian capability because of the identity
    /// `A^T x = conj(A^H conj(x))` used by the default implementation.
    fn supports_transpose(&self) -> bool {
        self.supports_hermitian()
    }

    /// `y = A^T x` (unconjugated transpose).
    fn apply_transpose(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        let mut xc = zeros(x.len());
        conj_into(x, &mut xc);
        self.apply_hermitian(&xc, y);
        for z in y.iter_mut() {
            *z = z.conj();
        }
    }

    /// Assertion that `A == A^T` (complex-symmetric, *not* Hermitian).
    /// Symmetric-only methods (COCG, COCR, CSYM) require this to be `true`.
    fn declared_symmetric(&self) -> bool {
        false
    }
}

/// Scale of a matrix: the largest entry magnitude, used to make symmetry
/// checks and pivot thresholds relative.
fn max_abs<T: Real>(values: &[Complex<T>]) -> T {
    let mut m = T::zero();
    for v in values {
        let a = v.norm();
        if a > m {
            m = a;
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Dense storage
// ---------------------------------------------------------------------------

/// Row-major dense `n x n` complex matrix.
#[derive(Clone, Debug)]
pub struct DenseMatrix<T: Real> {
    n: usize,
    data: Vec<Complex<T>>,
    symmetric: bool,
}

impl<T: Real> DenseMatrix<T> {
    /// Build from row-major data of length `n * n`.
    pub fn new(n: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be >= 1".into()));
        }
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "dense matrix: expected {} entries for n = {n}, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data, symmetric: false })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self { n, data: zeros(n * n), symmetric: true };
        for i in 0..n {
            m.data[i * n + i] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex<T>]) -> Self {
        let n = diag.len();
        let mut m = Self { n, data: zeros(n * n), symmetric: true };
        for i in 0..n {
            m.data[i * n + i] = diag[i];
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.n + j] = v;
        self.symmetric = false;
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    /// Row-major entries, length `n * n`.
    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    /// Main diagonal as a vector.
    pub fn diagonal(&self) -> Vec<Complex<T>> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Largest entry magnitude.
    pub fn max_abs_entry(&self) -> T {
        max_abs(&self.data)
    }

    /// `max |a_ij - a_ji| <= tol * max |a_ij|`?
    pub fn is_complex_symmetric(&self, tol: T) -> bool {
        let scale = self.max_abs_entry();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if (self.get(i, j) - self.get(j, i)).norm() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Verify complex symmetry and record it, so symmetric-only solvers
    /// accept this matrix. Consumes and returns `self` to keep the flag tied
    /// to the verified contents.
    pub fn into_symmetric(mut self, tol: T) -> Result<Self> {
        if !self.is_complex_symmetric(tol) {
            return Err(Error::NotSymmetric(format!(
                "an off-diagonal pair differs by more than {tol:e} relative to the largest entry"
            )));
        }
        self.symmetric = true;
        Ok(self)
    }

    /// Convert to CSR, dropping exact zeros.
    pub fn to_csr(&self) -> CsrMatrix<T> {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let zero = Complex::new(T::zero(), T::zero());
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                if v != zero {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n: self.n, row_ptr, col_idx, values, symmetric: self.symmetric }
    }
}

impl<T: Real> LinearOperator<T> for DenseMatrix<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let mut acc = Complex::new(T::zero(), T::zero());
            for (a, xj) in row.iter().zip(x) {
                acc = acc + a * xj;
            }
            y[i] = acc;
        }
    }

    fn supports_hermitian(&self) -> bool {
        true
    }

    fn apply_hermitian(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let zero = Complex::new(T::zero(), T::zero());
        y.fill(zero);
        // (A^H x)_j = sum_i conj(a_ij) x_i, swept row by row for locality.
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let xi = x[i];
            for (yj, a) in y.iter_mut().zip(row) {
                *yj = *yj + a.conj() * xi;
            }
        }
    }

    fn apply_transpose(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let zero = Complex::new(T::zero(), T::zero());
        y.fill(zero);
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let xi = x[i];
            for (yj, a) in y.iter_mut().zip(row) {
                *yj = *yj + a * xi;
            }
        }
    }

    fn declared_symmetric(&self) -> bool {
        self.symmetric
    }
}

// ---------------------------------------------------------------------------
// Compressed sparse row storage
// ---------------------------------------------------------------------------

/// Square CSR matrix in canonical form: within each row the column indices
/// are strictly increasing, and explicit zeros are allowed but duplicates are
/// not.
#[derive(Clone, Debug)]
pub struct CsrMatrix<T: Real> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex<T>>,
    symmetric: bool,
}

impl<T: Real> CsrMatrix<T> {
    /// Build from raw CSR arrays, validating canonical form.
    pub fn new(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<Complex<T>>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be >= 1".into()));
        }
        if row_ptr.len() != n + 1 {
            return Err(Error::MalformedMatrix(format!(
                "row_ptr length {} != n + 1 = {}",
                row_ptr.len(),
                n + 1
            )));
        }
        if row_ptr[0] != 0 || row_ptr[n] != col_idx.len() || col_idx.len() != values.len() {
            return Err(Error::MalformedMatrix(
                "row_ptr endpoints must span exactly the entry arrays".into(),
            ));
        }
        for i in 0..n {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::MalformedMatrix(format!("row_ptr decreases at row {i}")));
            }
            let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            for (k, &j) in row.iter().enumerate() {
                if j >= n {
                    return Err(Error::MalformedMatrix(format!(
                        "column index {j} out of range in row {i}"
                    )));
                }
                if k > 0 && row[k - 1] >= j {
                    return Err(Error::MalformedMatrix(format!(
                        "column indices not strictly increasing in row {i}"
                    )));
                }
            }
        }
        Ok(Self { n, row_ptr, col_idx, values, symmetric: false })
    }

    /// Build from unordered `(row, col, value)` triplets; duplicates are
    /// summed, which is also how repeated coordinate-file entries combine.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, Complex<T>)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be >= 1".into()));
        }
        for &(i, j, _) in triplets {
            if i >= n || j >= n {
                return Err(Error::MalformedMatrix(format!(
                    "triplet index ({i}, {j}) out of range for n = {n}"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, Complex<T>)> = triplets.to_vec();
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_counts = vec![0usize; n];
        let mut col_idx: Vec<usize> = Vec::with_capacity(sorted.len());
        let mut values: Vec<Complex<T>> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                let acc = values.last_mut().expect("value per column index");
                *acc = *acc + v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_counts[i] += 1;
                last = Some((i, j));
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + row_counts[i];
        }
        Self::new(n, row_ptr, col_idx, values)
    }

    pub fn identity(n: usize) -> Self {
        let one = Complex::new(T::one(), T::zero());
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![one; n],
            symmetric: true,
        }
    }

    pub fn from_diagonal(diag: &[Complex<T>]) -> Self {
        let n = diag.len();
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
            symmetric: true,
        }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    /// Stored entry at `(i, j)`, or `None` when outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> Option<Complex<T>> {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|k| self.values[self.row_ptr[i] + k])
    }

    /// Main diagonal; entries outside the pattern count as zero.
    pub fn diagonal(&self) -> Vec<Complex<T>> {
        let zero = Complex::new(T::zero(), T::zero());
        (0..self.n).map(|i| self.get(i, i).unwrap_or(zero)).collect()
    }

    pub fn max_abs_entry(&self) -> T {
        max_abs(&self.values)
    }

    /// Iterate stored entries as `(row, col, value)`.
    pub fn iter_entries(&self) -> impl Iterator<Item = (usize, usize, Complex<T>)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    /// `max |a_ij - a_ji| <= tol * max |a_ij|`, treating entries missing from
    /// the pattern as zero.
    pub fn is_complex_symmetric(&self, tol: T) -> bool {
        let scale = self.max_abs_entry();
        let zero = Complex::new(T::zero(), T::zero());
        for (i, j, v) in self.iter_entries() {
            if j <= i {
                continue;
            }
            let mirror = self.get(j, i).unwrap_or(zero);
            if (v - mirror).norm() > tol * scale {
                return false;
            }
        }
        // Entries below the diagonal with no mirror above it.
        for (i, j, v) in self.iter_entries() {
            if j >= i {
                continue;
            }
            if self.get(j, i).is_none() && (v - zero).norm() > tol * scale {
                return false;
            }
        }
        true
    }

    /// Verify complex symmetry and record it (see
    /// [`DenseMatrix::into_symmetric`]).
    pub fn into_symmetric(mut self, tol: T) -> Result<Self> {
        if !self.is_complex_symmetric(tol) {
            return Err(Error::NotSymmetric(format!(
                "an off-diagonal pair differs by more than {tol:e} relative to the largest entry"
            )));
        }
        self.symmetric = true;
        Ok(self)
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut data = zeros(self.n * self.n);
        for (i, j, v) in self.iter_entries() {
            data[i * self.n + j] = v;
        }
        DenseMatrix { n: self.n, data, symmetric: self.symmetric }
    }
}

impl<T: Real> LinearOperator<T> for CsrMatrix<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc = acc + self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    fn supports_hermitian(&self) -> bool {
        true
    }

    fn apply_hermitian(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.fill(Complex::new(T::zero(), T::zero()));
        for i in 0..self.n {
            let xi = x[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                y[j] = y[j] + self.values[k].conj() * xi;
            }
        }
    }

    fn apply_transpose(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.fill(Complex::new(T::zero(), T::zero()));
        for i in 0..self.n {
            let xi = x[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                y[j] = y[j] + self.values[k] * xi;
            }
        }
    }

    fn declared_symmetric(&self) -> bool {
        self.symmetric
    }
}

// ---------------------------------------------------------------------------
// Instrumentation
// ---------------------------------------------------------------------------

/// Application counts observed by a [`CountingOperator`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OperatorCounts {
    pub applies: usize,
    pub hermitian_applies: usize,
    pub transpose_applies: usize,
}

impl OperatorCounts {
    pub fn total(&self) -> usize {
        self.applies + self.hermitian_applies + self.transpose_applies
    }
}

/// Wrapper that counts how often each application kind is invoked. This is
/// how per-method work is measured: solvers themselves do not keep counters,
/// so the numbers reflect what actually hit the operator.
pub struct CountingOperator<'a, T: Real> {
    inner: &'a dyn LinearOperator<T>,
    applies: AtomicUsize,
    hermitian_applies: AtomicUsize,
    transpose_applies: AtomicUsize,
}

impl<'a, T: Real> CountingOperator<'a, T> {
    pub fn new(inner: &'a dyn LinearOperator<T>) -> Self {
        Self {
            inner,
            applies: AtomicUsize::new(0),
            hermitian_applies: AtomicUsize::new(0),
            transpose_applies: AtomicUsize::new(0),
        }
    }

    pub fn counts(&self) -> OperatorCounts {
        OperatorCounts {
            applies: self.applies.load(Ordering::Relaxed),
            hermitian_applies: self.hermitian_applies.load(Ordering::Relaxed),
            transpose_applies: self.transpose_applies.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.applies.store(0, Ordering::Relaxed);
        self.hermitian_applies.store(0, Ordering::Relaxed);
        self.transpose_applies.store(0, Ordering::Relaxed);
    }
}

impl<T: Real> LinearOperator<T> for CountingOperator<'_, T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        self.applies.fetch_add(1, Ordering::Relaxed);
        self.inner.apply(x, y);
    }

    fn supports_hermitian(&self) -> bool {
        self.inner.supports_hermitian()
    }

    fn apply_hermitian(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        self.hermitian_applies.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_hermitian(x, y);
    }

    fn supports_transpose(&self) -> bool {
        self.inner.supports_transpose()
    }

    fn apply_transpose(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        self.transpose_applies.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_transpose(x, y);
    }

    fn declared_symmetric(&self) -> bool {
        self.inner.declared_symmetric()
    }
}
