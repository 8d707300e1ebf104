//! The sixteen solver loops and the driver that dispatches among them.
//!
//! [`solve`] is the single entry point. It validates the request, applies
//! the capability gates, substitutes an identity preconditioner when none is
//! given (so preconditioned and unpreconditioned runs share one code path),
//! and hands off to the method loop. Every loop follows the same protocol:
//!
//! * the initial iterate is `x0 = 0`, so the initial residual is the
//!   right-hand side;
//! * a zero right-hand side returns `x = 0` as converged without iterating;
//! * the loop monitors its cheap recurrence residual and records it in the
//!   history; the final answer is re-verified against the operator with one
//!   extra product (see [`crate::control::finalize`]).
//!
//! # Preconditioning sides
//!
//! | methods | placement |
//! |---|---|
//! | BiCG, CGS, QMR, COCG, COCR | left, inside the recurrence (the monitored residual is the true one) |
//! | TFQMR, BiCOR, CORS, CGNR, CGNE | left, by iterating on `M^{-1}A x = M^{-1}y` (the monitored residual is the preconditioned one) |
//! | BiCGSTAB | right, inside the recurrence |
//! | GPBiCG, BiCGstab(ℓ), GMRES(m) | right, by iterating on `A M^{-1} x~ = y`, then `x = M^{-1} x~` |
//! | CSYM, ILUCG | none accepted (ILUCG factors its own ILU(0)) |
//!
//! # Operator products per run
//!
//! With `k` the reported iteration count, each run applies the operator as
//! follows, plus **one** verification apply at exit. "H" marks Hermitian
//! products `A^H v`.
//!
//! | method | setup | per iteration | final iteration |
//! |---|---|---|---|
//! | BiCG | — | 1 + 1H | same |
//! | CGS | — | 2 | same |
//! | BiCGSTAB | — | 2 | 1 when it exits at the intermediate half-step test |
//! | BiCGstab(ℓ) | — | 2ℓ, +1 per outer step whose residual replacement triggered | partial sweep on a lucky exit |
//! | TFQMR | 1 | 2 | 0 when it exits at the first half-step, 1 at the second |
//! | QMR | — | 1 + 1H | same |
//! | GPBiCG | — | 2 | same |
//! | BiCOR | — | 1 + 1H | same |
//! | CORS | 1H | 2 | same |
//! | COCG | — | 1 | same |
//! | COCR | 1 | 1 | 0 — the product preparing the next step is skipped |
//! | CSYM | — | 1 | same |
//! | CGNE | 1H | 1 + 1H | 1 — the Hermitian product trails the convergence test |
//! | CGNR | 1H | 1 + 1H | 1 — the Hermitian product trails the convergence test |
//! | GMRES(m) | — | 1, +1 at each restart after the first cycle | same |
//! | ILUCG | 1H | 1 + 1H | 1 — same loop as CGNR |
//!
//! Counts can be observed from outside with [`crate::CountingOperator`];
//! the solvers themselves keep no counters.

use std::borrow::Cow;

use num_complex::Complex;

use crate::control::{stopping_test, MethodId, SolverConfig, SolverOutcome, SolverStatus};
use crate::numerics::{norm2, zeros, Real};
use crate::operator::{CsrMatrix, DenseMatrix, LinearOperator};
use crate::precond::{Identity, Preconditioner};

mod bicgstab_l;
mod gmres;
mod normal;
mod shadow;
mod symmetric;
mod transpose_free;

/// How a system is handed to [`solve`].
///
/// Most methods only ever multiply by the operator, so a black-box
/// [`SystemRef::Op`] suffices. ILUCG must read matrix entries to factor
/// them; it requires one of the assembled forms, or [`SystemRef::Split`]
/// which pairs a (possibly faster, possibly approximate-assembly) product
/// routine with an assembled copy for factorization.
#[derive(Clone, Copy)]
pub enum SystemRef<'a, T: Real> {
    /// Black-box operator: products only.
    Op(&'a dyn LinearOperator<T>),
    /// Assembled dense matrix.
    Dense(&'a DenseMatrix<T>),
    /// Assembled sparse matrix.
    Csr(&'a CsrMatrix<T>),
    /// Products through the first argument, entries from the second.
    Split(&'a dyn LinearOperator<T>, &'a CsrMatrix<T>),
}

impl<'a, T: Real> SystemRef<'a, T> {
    /// The operator used for every product.
    pub fn op(&self) -> &'a dyn LinearOperator<T> {
        match self {
            SystemRef::Op(op) => *op,
            SystemRef::Dense(d) => *d,
            SystemRef::Csr(c) => *c,
            SystemRef::Split(op, _) => *op,
        }
    }

    /// Assembled entries, if this reference carries them.
    fn entries(&self) -> Option<Cow<'a, CsrMatrix<T>>> {
        match self {
            SystemRef::Op(_) => None,
            SystemRef::Dense(d) => Some(Cow::Owned(d.to_csr())),
            SystemRef::Csr(c) => Some(Cow::Borrowed(*c)),
            SystemRef::Split(_, c) => Some(Cow::Borrowed(*c)),
        }
    }
}

/// Solve `A x = y` with the chosen method. Never panics on bad input and
/// never returns `Err`-style values: every failure mode is reported through
/// [`SolverStatus`] in the outcome, with `breakdown_detail` explaining what
/// happened.
pub fn solve<T: Real>(
    method: MethodId,
    system: SystemRef<'_, T>,
    y: &[Complex<T>],
    precond: Option<&dyn Preconditioner<T>>,
    cfg: &SolverConfig<T>,
) -> SolverOutcome<T> {
    let op = system.op();
    let n = op.dim();

    if let Err(msg) = cfg.validate() {
        return SolverOutcome::invalid(n, format!("configuration: {msg}"));
    }
    if n == 0 {
        return SolverOutcome::invalid(n, "operator dimension must be at least 1");
    }
    if y.len() != n {
        return SolverOutcome::invalid(
            n,
            format!("right-hand side has length {}, operator dimension is {n}", y.len()),
        );
    }
    if let SystemRef::Split(op, entries) = &system {
        if op.dim() != entries.rows() {
            return SolverOutcome::invalid(
                n,
                format!(
                    "split system is inconsistent: product routine has dimension {}, entries {}",
                    op.dim(),
                    entries.rows()
                ),
            );
        }
    }
    if method.needs_hermitian() && !op.supports_hermitian() {
        return SolverOutcome::invalid(
            n,
            format!("{method} needs Hermitian products A^H v, which this operator does not support"),
        );
    }
    if method.needs_symmetric() && !op.declared_symmetric() {
        return SolverOutcome::invalid(
            n,
            format!(
                "{method} is only valid for complex-symmetric operators (A = A^T); \
                 this operator does not declare symmetry"
            ),
        );
    }
    if let Some(m) = precond {
        if method.precond_side().is_none() {
            return SolverOutcome::invalid(n, format!("{method} does not accept a preconditioner"));
        }
        if m.dim() != n {
            return SolverOutcome::invalid(
                n,
                format!("preconditioner dimension {} does not match operator dimension {n}", m.dim()),
            );
        }
    }

    // ILUCG is the one method that reads entries.
    let csr_for_ilu = if method.needs_entries() {
        match system.entries() {
            Some(c) => Some(c),
            None => {
                return SolverOutcome::invalid(
                    n,
                    format!("{method} needs assembled matrix entries; pass a dense, CSR or split system"),
                )
            }
        }
    } else {
        None
    };

    // A zero right-hand side is solved exactly by x = 0; skip the loop.
    if norm2(y) == T::zero() {
        return SolverOutcome {
            status: SolverStatus::Converged,
            iterations: 0,
            x: zeros(n),
            true_rel_residual: T::zero(),
            history: if cfg.record_history { vec![(0, T::zero())] } else { Vec::new() },
            breakdown_detail: None,
        };
    }

    let identity = Identity::new(n);
    let m_eff: &dyn Preconditioner<T> = precond.unwrap_or(&identity);

    match method {
        MethodId::BiCg => shadow::bicg(op, y, m_eff, cfg),
        MethodId::Cgs => transpose_free::cgs(op, y, m_eff, cfg),
        MethodId::BiCgStab => transpose_free::bicgstab(op, y, m_eff, cfg),
        MethodId::BiCgStabL => bicgstab_l::bicgstab_l(op, y, m_eff, cfg),
        MethodId::Tfqmr => transpose_free::tfqmr(op, y, m_eff, cfg),
        MethodId::Qmr => shadow::qmr(op, y, m_eff, cfg),
        MethodId::GpBiCg => transpose_free::gpbicg(op, y, m_eff, cfg),
        MethodId::BiCor => shadow::bicor(op, y, m_eff, cfg),
        MethodId::Cors => shadow::cors(op, y, m_eff, cfg),
        MethodId::Cocg => symmetric::cocg(op, y, m_eff, cfg),
        MethodId::Cocr => symmetric::cocr(op, y, m_eff, cfg),
        MethodId::Csym => symmetric::csym(op, y, cfg),
        MethodId::Cgne => normal::cgne(op, y, m_eff, cfg),
        MethodId::Cgnr => normal::cgnr(op, y, m_eff, cfg),
        MethodId::Gmres => gmres::gmres(op, y, m_eff, cfg),
        MethodId::Ilucg => {
            normal::ilucg(op, csr_for_ilu.as_deref().expect("entries gated above"), y, cfg)
        }
    }
}

/// What a residual observation means for the loop.
pub(crate) enum Step {
    Continue,
    Converged,
    NonFinite,
}

/// Residual bookkeeping shared by all loops: history recording and the
/// stopping test against the denominators fixed at entry.
pub(crate) struct Monitor<'c, T: Real> {
    cfg: &'c SolverConfig<T>,
    r0norm: T,
    ynorm: T,
    pub history: Vec<(usize, T)>,
}

impl<'c, T: Real> Monitor<'c, T> {
    /// `r0norm` and `ynorm` must be positive: the driver resolves zero
    /// right-hand sides before any loop starts.
    pub fn new(cfg: &'c SolverConfig<T>, r0norm: T, ynorm: T) -> Self {
        let mut history = Vec::new();
        if cfg.record_history {
            history.push((0, r0norm));
        }
        Self { cfg, r0norm, ynorm, history }
    }

    pub fn record(&mut self, k: usize, rnorm: T) {
        if self.cfg.record_history {
            self.history.push((k, rnorm));
        }
    }

    /// The stopping test alone, without recording.
    pub fn passes(&self, rnorm: T) -> bool {
        stopping_test(rnorm, self.r0norm, self.ynorm, self.cfg)
            .expect("denominators are positive by construction")
    }

    /// Record an iteration's residual and classify it.
    pub fn observe(&mut self, k: usize, rnorm: T) -> Step {
        self.record(k, rnorm);
        if !rnorm.is_finite() {
            Step::NonFinite
        } else if self.passes(rnorm) {
            Step::Converged
        } else {
            Step::Continue
        }
    }
}

pub(crate) const NON_FINITE_RESIDUAL: &str = "residual norm became non-finite";

/// `M^{-1} v` into a fresh vector.
pub(crate) fn precond_vec<T: Real>(m: &dyn Preconditioner<T>, v: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut z = zeros(v.len());
    m.apply(v, &mut z);
    z
}

/// `A v` into a fresh vector.
pub(crate) fn apply_new<T: Real>(a: &dyn LinearOperator<T>, v: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut w = zeros(a.dim());
    a.apply(v, &mut w);
    w
}

/// Givens rotation zeroing a real entry `g >= 0` under a complex `f`:
/// returns `(c, s, r)` with `c` real such that
/// `c*f + s*g = r` and `-conj(s)*f + c*g = 0`.
///
/// Conventions follow the LAPACK `clartg` family: `c = |f|/h`,
/// `s = sign(f) * g/h`, `r = sign(f) * h` with `h = sqrt(|f|^2 + g^2)`,
/// and `(c, s, r) = (0, 1, g)` when `f = 0`.
pub(crate) fn givens<T: Real>(f: Complex<T>, g: T) -> (T, Complex<T>, Complex<T>) {
    let fmag = f.norm();
    if fmag == T::zero() {
        return (T::zero(), Complex::new(T::one(), T::zero()), Complex::new(g, T::zero()));
    }
    let h = (fmag * fmag + g * g).sqrt();
    let c = fmag / h;
    let sign = f / fmag;
    let s = sign * (g / h);
    let r = sign * h;
    (c, s, r)
}
