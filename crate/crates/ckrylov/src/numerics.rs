//! Elementary complex vector kernels shared by every solver.
//!
//! Two inner products coexist on purpose. [`dotc`] conjugates its *left*
//! argument (the Hermitian inner product `u^H v`), while [`dotu`] is the
//! unconjugated bilinear form `u^T v` that the complex-symmetric methods
//! (COCG, COCR, CSYM) are built on; using the wrong one silently destroys
//! their convergence theory, so both get their own named function instead of
//! a flag.
//!
//! Summation is a plain sequential fold in index order. That keeps results
//! bit-reproducible from run to run on one platform, which the deterministic
//! fixtures and history-equality tests rely on; compensated summation is
//! deliberately not used.

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

use crate::error::{Error, Result};

/// Real scalar types the library is generic over.
///
/// The precision of a solve is fixed at compile time by choosing `f32` or
/// `f64` here; every tolerance, residual norm and breakdown threshold is
/// expressed in this type so a single code path serves both precisions.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Shorthand for converting literal constants; panics only if the value
    /// does not fit, which cannot happen for the in-range constants used
    /// internally.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in target precision")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `true` when both parts of `z` are finite numbers.
#[inline]
pub fn is_finite_c<T: Real>(z: Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn check_same_len<T: Real>(op: &str, u: &[Complex<T>], v: &[Complex<T>]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "{op}: left has length {}, right has length {}",
            u.len(),
            v.len()
        )));
    }
    Ok(())
}

/// Hermitian inner product `sum_i conj(u_i) * v_i`.
pub fn dotc<T: Real>(u: &[Complex<T>], v: &[Complex<T>]) -> Result<Complex<T>> {
    check_same_len("dotc", u, v)?;
    Ok(dotc_kernel(u, v))
}

/// Unconjugated bilinear form `sum_i u_i * v_i`.
pub fn dotu<T: Real>(u: &[Complex<T>], v: &[Complex<T>]) -> Result<Complex<T>> {
    check_same_len("dotu", u, v)?;
    Ok(dotu_kernel(u, v))
}

/// Euclidean norm `sqrt(sum_i |v_i|^2)`.
///
/// Plain sum of squared magnitudes followed by a square root; the library
/// works at desktop problem scales where the extra scaling of a
/// `hypot`-style implementation buys nothing.
pub fn norm2<T: Real>(v: &[Complex<T>]) -> T {
    let mut acc = T::zero();
    for z in v {
        acc = acc + z.norm_sqr();
    }
    acc.sqrt()
}

#[inline]
pub(crate) fn dotc_kernel<T: Real>(u: &[Complex<T>], v: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(u.len(), v.len());
    let mut acc = Complex::new(T::zero(), T::zero());
    for (a, b) in u.iter().zip(v) {
        acc = acc + a.conj() * b;
    }
    acc
}

#[inline]
pub(crate) fn dotu_kernel<T: Real>(u: &[Complex<T>], v: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(u.len(), v.len());
    let mut acc = Complex::new(T::zero(), T::zero());
    for (a, b) in u.iter().zip(v) {
        acc = acc + a * b;
    }
    acc
}

// ---------------------------------------------------------------------------
// In-place update helpers for the solver loops. All assume equal lengths,
// which the solvers guarantee by allocating every work vector at dimension n.
// ---------------------------------------------------------------------------

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy<T: Real>(alpha: Complex<T>, x: &[Complex<T>], y: &mut [Complex<T>]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

/// `y = x + alpha * y`
#[inline]
pub(crate) fn xpay<T: Real>(x: &[Complex<T>], alpha: Complex<T>, y: &mut [Complex<T>]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *xi + alpha * *yi;
    }
}

/// `out = conj(v)` element-wise.
#[inline]
pub(crate) fn conj_into<T: Real>(v: &[Complex<T>], out: &mut [Complex<T>]) {
    debug_assert_eq!(v.len(), out.len());
    for (o, z) in out.iter_mut().zip(v) {
        *o = z.conj();
    }
}

/// Fresh zero vector of length `n`.
#[inline]
pub(crate) fn zeros<T: Real>(n: usize) -> Vec<Complex<T>> {
    vec![Complex::new(T::zero(), T::zero()); n]
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn dotc_conjugates_left_argument() {
        // conj(1+2i)*2 + conj(3)*i = (2-4i) + 3i = 2 - i, worked by hand.
        let u = [c(1.0, 2.0), c(3.0, 0.0)];
        let v = [c(2.0, 0.0), c(0.0, 1.0)];
        let got = dotc(&u, &v).unwrap();
        assert_eq!(got, c(2.0, -1.0));
    }

    #[test]
    fn dotu_is_unconjugated() {
        // (1+i)(1-i) + 2i = 2 + 2i, worked by hand.
        let u = [c(1.0, 1.0), c(2.0, 0.0)];
        let v = [c(1.0, -1.0), c(0.0, 1.0)];
        let got = dotu(&u, &v).unwrap();
        assert_eq!(got, c(2.0, 2.0));
    }

    #[test]
    fn dotc_and_dotu_differ_whenever_left_has_imaginary_part() {
        let u = [c(0.0, 1.0)];
        let v = [c(0.0, 1.0)];
        assert_eq!(dotc(&u, &v).unwrap(), c(1.0, 0.0));
        assert_eq!(dotu(&u, &v).unwrap(), c(-1.0, 0.0));
    }

    #[test]
    fn norm2_of_mixed_vector() {
        // |1|^2 + |i|^2 + |1+i|^2 = 1 + 1 + 2 = 4, norm = 2.
        let v = [c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)];
        assert_eq!(norm2(&v), 2.0);
    }

    #[test]
    fn norm2_zero_vector_is_zero() {
        let v = [c(0.0, 0.0); 5];
        assert_eq!(norm2(&v), 0.0);
    }

    #[test]
    fn length_mismatch_is_reported() {
        let u = [c(1.0, 0.0)];
        let v = [c(1.0, 0.0), c(2.0, 0.0)];
        assert!(matches!(dotc(&u, &v), Err(Error::DimensionMismatch(_))));
        assert!(matches!(dotu(&u, &v), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn dotc_of_self_is_squared_norm() {
        let v = [c(1.0, 2.0), c(-3.0, 0.5), c(0.0, -1.0)];
        let d = dotc(&v, &v).unwrap();
        assert!((d.re.sqrt() - norm2(&v)).abs() < 1e-15);
        assert_eq!(d.im, 0.0);
    }

    #[test]
    fn works_in_single_precision_too() {
        let u = [Complex::<f32>::new(1.0, 2.0), Complex::<f32>::new(3.0, 0.0)];
        let v = [Complex::<f32>::new(2.0, 0.0), Complex::<f32>::new(0.0, 1.0)];
        assert_eq!(dotc(&u, &v).unwrap(), Complex::<f32>::new(2.0, -1.0));
    }

    #[test]
    fn hermitian_symmetry_of_dotc() {
        let u = [c(1.5, -0.25), c(0.0, 2.0), c(-1.0, 1.0)];
        let v = [c(0.5, 0.5), c(2.0, -1.0), c(3.0, 0.0)];
        let uv = dotc(&u, &v).unwrap();
        let vu = dotc(&v, &u).unwrap();
        assert_eq!(uv, vu.conj());
    }
}
