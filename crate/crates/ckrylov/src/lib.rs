//! Matrix-free Krylov subspace solvers for complex linear systems.
//!
//! `ckrylov` solves `A x = y` where `A` is a square complex matrix that may
//! be non-Hermitian, using short-recurrence and restarted Krylov methods
//! that touch `A` only through matrix–vector products. Sixteen methods are
//! provided — from classical BiCG, CGS, BiCGSTAB and GMRES(m) through
//! transpose-free QMR, BiCGstab(ℓ) and GPBiCG to the complex-symmetric
//! specialists COCG, COCR and CSYM — behind one driver, [`solve`], selected
//! by [`MethodId`].
//!
//! # Design
//!
//! * **Operators, not matrices.** Solvers see `A` through
//!   [`LinearOperator`]: a dimension, an application `x -> A x`, and
//!   (for methods that need it) the Hermitian application `x -> A^H x`.
//!   Assembled [`DenseMatrix`] and [`CsrMatrix`] types implement the trait,
//!   but any black-box routine can too.
//! * **Generic precision.** Everything is generic over the scalar through
//!   the [`Real`] trait (`f32` or `f64`), chosen at compile time; the
//!   [`Complex32`] and [`Complex64`] aliases name the two element types.
//! * **Uniform protocol.** Every run starts from `x0 = 0`, records its
//!   recurrence residual history, and ends with an independent residual
//!   check: a claim of convergence that the true residual does not support
//!   is downgraded rather than reported.
//! * **Failure is data.** Solver runs return a [`SolverOutcome`] — status,
//!   iterate, verified residual, history — never a panic; breakdowns name
//!   the scalar that collapsed.
//!
//! # Example
//!
//! ```
//! use ckrylov::{solve, Complex64, MethodId, SolverConfig, SystemRef};
//! use ckrylov::operator::DenseMatrix;
//!
//! let a = DenseMatrix::new(2, vec![
//!     Complex64::new(2.0, 0.0), Complex64::new(0.0, 1.0),
//!     Complex64::new(0.0, 0.0), Complex64::new(1.0, -1.0),
//! ]).unwrap();
//! let y = vec![Complex64::new(2.0, 1.0), Complex64::new(1.0, -1.0)];
//! let out = solve(MethodId::BiCgStab, SystemRef::Dense(&a), &y, None,
//!                 &SolverConfig::default());
//! assert!(out.converged());
//! assert!((out.x[0] - Complex64::new(1.0, 0.0)).norm() < 1e-8);
//! assert!((out.x[1] - Complex64::new(1.0, 0.0)).norm() < 1e-8);
//! ```

pub mod control;
pub mod error;
pub mod gallery;
pub mod io;
pub mod numerics;
pub mod operator;
pub mod oracle;
pub mod precond;
pub mod solvers;

/// Single-precision complex scalar.
pub type Complex32 = num_complex::Complex<f32>;
/// Double-precision complex scalar.
pub type Complex64 = num_complex::Complex<f64>;

pub use control::{
    MethodId, PrecondSide, SolverConfig, SolverOutcome, SolverStatus, StopMode,
};
pub use error::{Error, Result};
pub use numerics::Real;
pub use operator::{CountingOperator, CsrMatrix, DenseMatrix, LinearOperator, OperatorCounts};
pub use precond::{Identity, Ilu0, Jacobi, Preconditioner};
pub use solvers::{solve, SystemRef};

// Compile the README examples alongside the doctests so they cannot rot.
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
