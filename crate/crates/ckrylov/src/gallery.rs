//! Reproducible test problems: seeded random matrices and right-hand sides.
//!
//! All randomness flows through a counter-based ChaCha stream seeded from a
//! single `u64`, so a `(generator, n, seed)` triple identifies a problem
//! exactly, on every platform. Raw samples are drawn in `f64` and converted
//! afterwards, so the `f32` and `f64` versions of a problem agree to
//! rounding.

use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::numerics::Real;
use crate::operator::DenseMatrix;

/// One sample from the uniform distribution on the closed unit disk, by
/// rejection from the enclosing square. Compare-and-multiply only — no
/// trigonometry — so the sampled bits do not depend on how the compiler
/// groups libm calls, and a seed reproduces the same matrix in every build.
fn unit_disk(rng: &mut ChaCha8Rng) -> Complex<f64> {
    loop {
        let x: f64 = 2.0 * rng.gen::<f64>() - 1.0;
        let y: f64 = 2.0 * rng.gen::<f64>() - 1.0;
        if x * x + y * y <= 1.0 {
            return Complex::new(x, y);
        }
    }
}

fn convert<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(T::of(z.re), T::of(z.im))
}

/// General (non-symmetric) test matrix `I + spread * R`, where `R` has
/// independent entries uniform on the unit disk. Keeping
/// `spread * sqrt(n / 2)` comfortably below 1 keeps the spectrum away from
/// the origin and the matrix well conditioned.
pub fn random_general<T: Real>(n: usize, spread: f64, seed: u64) -> DenseMatrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut z = unit_disk(&mut rng) * spread;
            if i == j {
                z += Complex::new(1.0, 0.0);
            }
            data.push(convert::<T>(z));
        }
    }
    DenseMatrix::new(n, data).expect("generated matrix is well-formed")
}

/// Complex-symmetric (not Hermitian) test matrix
/// `shift * I + B + B^T` with `B = spread * R`. The result satisfies
/// `A == A^T` bitwise and is returned with its symmetry flag set.
pub fn random_complex_symmetric<T: Real>(
    n: usize,
    spread: f64,
    shift: f64,
    seed: u64,
) -> DenseMatrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b: Vec<Complex<f64>> = (0..n * n).map(|_| unit_disk(&mut rng) * spread).collect();
    let mut a = DenseMatrix::<T>::identity(n);
    for i in 0..n {
        for j in 0..n {
            let sym = b[i * n + j] + b[j * n + i];
            let diag = if i == j { shift } else { 0.0 };
            a.set(i, j, convert::<T>(sym + Complex::new(diag, 0.0)));
        }
    }
    a.into_symmetric(T::zero()).expect("mirrored construction is exactly symmetric")
}

/// Right-hand side with independent unit-disk entries.
pub fn random_rhs<T: Real>(n: usize, seed: u64) -> Vec<Complex<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| convert::<T>(unit_disk(&mut rng))).collect()
}

/// The unitary discrete Fourier transform matrix,
/// `F[j][k] = exp(-2 pi i j k / n) / sqrt(n)`. Satisfies `F^H F = I`, and is
/// complex symmetric as well.
pub fn dft_unitary<T: Real>(n: usize) -> DenseMatrix<T> {
    let scale = 1.0 / (n as f64).sqrt();
    let mut data = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            // Reduce the phase index modulo n before multiplying to keep the
            // angle small and the entries exactly conjugate-consistent.
            let idx = (j * k) % n;
            let theta = -2.0 * std::f64::consts::PI * (idx as f64) / (n as f64);
            data.push(convert::<T>(Complex::from_polar(scale, theta)));
        }
    }
    let f = DenseMatrix::new(n, data).expect("generated matrix is well-formed");
    f.into_symmetric(T::of(1e-14)).expect("the DFT matrix is complex symmetric")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::norm2;
    use crate::operator::LinearOperator;

    #[test]
    fn generators_are_deterministic_in_the_seed() {
        let a = random_general::<f64>(6, 0.3, 42);
        let b = random_general::<f64>(6, 0.3, 42);
        let c = random_general::<f64>(6, 0.3, 43);
        assert_eq!(a.data(), b.data(), "same seed must reproduce bitwise");
        assert_ne!(a.data(), c.data(), "different seeds must differ");
        let r1 = random_rhs::<f64>(5, 7);
        let r2 = random_rhs::<f64>(5, 7);
        assert_eq!(r1, r2);
    }

    #[test]
    fn unit_disk_samples_stay_in_the_disk() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let z = unit_disk(&mut rng);
            assert!(z.norm() <= 1.0 + 1e-15, "|z| = {}", z.norm());
        }
    }

    #[test]
    fn general_matrix_is_identity_plus_bounded_noise() {
        let n = 8;
        let a = random_general::<f64>(n, 0.25, 9);
        for i in 0..n {
            for j in 0..n {
                let expected_center = if i == j { 1.0 } else { 0.0 };
                let dev = (a.get(i, j) - Complex::new(expected_center, 0.0)).norm();
                assert!(dev <= 0.25 + 1e-15, "entry ({i},{j}) deviates by {dev}");
            }
        }
        assert!(!a.declared_symmetric());
    }

    #[test]
    fn symmetric_generator_is_exactly_symmetric_but_not_hermitian() {
        let a = random_complex_symmetric::<f64>(10, 0.4, 4.0, 11);
        assert!(a.declared_symmetric());
        let mut hermitian = true;
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(a.get(i, j), a.get(j, i), "transpose symmetry must be bitwise");
                if (a.get(i, j) - a.get(j, i).conj()).norm() > 1e-12 {
                    hermitian = false;
                }
            }
        }
        assert!(!hermitian, "complex entries should break Hermitian symmetry");
    }

    #[test]
    fn dft_matrix_is_unitary() {
        let n = 8;
        let f = dft_unitary::<f64>(n);
        // Columns of F are the rows of F^T = F; check F^H F = I by applying
        // the operator pair to the basis vectors.
        for k in 0..n {
            let mut e = vec![Complex::new(0.0, 0.0); n];
            e[k] = Complex::new(1.0, 0.0);
            let mut fe = vec![Complex::new(0.0, 0.0); n];
            f.apply(&e, &mut fe);
            assert!((norm2(&fe) - 1.0).abs() < 1e-14, "column {k} norm");
            let mut back = vec![Complex::new(0.0, 0.0); n];
            f.apply_hermitian(&fe, &mut back);
            let mut err: f64 = 0.0;
            for (i, b) in back.iter().enumerate() {
                let target = if i == k { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) };
                err = err.max((b - target).norm());
            }
            assert!(err < 1e-14, "F^H F e_{k} off by {err:e}");
        }
    }

    #[test]
    fn dft_four_has_the_expected_entries() {
        // n = 4: F[1][1] = exp(-i pi / 2) / 2 = -i/2, F[1][3] = exp(-3 i pi / 2) / 2 = i/2.
        let f = dft_unitary::<f64>(4);
        assert!((f.get(1, 1) - Complex::new(0.0, -0.5)).norm() < 1e-15);
        assert!((f.get(1, 3) - Complex::new(0.0, 0.5)).norm() < 1e-15);
        assert!((f.get(0, 2) - Complex::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn f32_problems_track_the_f64_stream() {
        let a64 = random_general::<f64>(4, 0.3, 5);
        let a32 = random_general::<f32>(4, 0.3, 5);
        for i in 0..4 {
            for j in 0..4 {
                let d = a64.get(i, j);
                let s = a32.get(i, j);
                assert!((d.re - s.re as f64).abs() < 1e-6);
                assert!((d.im - s.im as f64).abs() < 1e-6);
            }
        }
    }
}
