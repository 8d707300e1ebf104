//! Shared iteration control: method identifiers, solver configuration, the
//! outcome type, the stopping test and the exit-time verification step.
//!
//! Every solver follows the same protocol. The initial iterate is always
//! `x0 = 0`, so the initial residual is the right-hand side itself and the
//! two relative stopping denominators coincide at the start. During the loop
//! a method tracks its own *recurrence* residual — cheap but drifting — and
//! when the loop ends, [`finalize`] recomputes the true residual
//! `||y - A x|| / ||y||` with one extra operator application. A run that
//! claimed convergence but whose true residual is more than ten times the
//! target is downgraded to [`SolverStatus::FalseConvergence`]; a result
//! containing non-finite values is never reported as converged.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::{is_finite_c, norm2, zeros, Real};
use crate::operator::LinearOperator;

/// Which side a method applies its preconditioner on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrecondSide {
    Left,
    Right,
}

/// The sixteen iterative methods in the catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MethodId {
    BiCg,
    Cgs,
    BiCgStab,
    BiCgStabL,
    Tfqmr,
    Qmr,
    GpBiCg,
    BiCor,
    Cors,
    Cocg,
    Cocr,
    Csym,
    Cgne,
    Cgnr,
    Gmres,
    Ilucg,
}

impl MethodId {
    /// All methods, in the fixed order used by comparison tables.
    pub const ALL: [MethodId; 16] = [
        MethodId::BiCg,
        MethodId::Cgs,
        MethodId::BiCgStab,
        MethodId::BiCgStabL,
        MethodId::Tfqmr,
        MethodId::Qmr,
        MethodId::GpBiCg,
        MethodId::BiCor,
        MethodId::Cors,
        MethodId::Cocg,
        MethodId::Cocr,
        MethodId::Csym,
        MethodId::Cgne,
        MethodId::Cgnr,
        MethodId::Gmres,
        MethodId::Ilucg,
    ];

    /// Methods that apply `A^H` (to shadow vectors or normal equations) and
    /// therefore require `supports_hermitian`.
    pub fn needs_hermitian(self) -> bool {
        matches!(
            self,
            MethodId::BiCg
                | MethodId::Qmr
                | MethodId::BiCor
                | MethodId::Cors
                | MethodId::Cgne
                | MethodId::Cgnr
                | MethodId::Ilucg
        )
    }

    /// Methods whose derivation assumes `A == A^T`; they refuse operators
    /// that do not declare complex symmetry rather than silently misconverge.
    pub fn needs_symmetric(self) -> bool {
        matches!(self, MethodId::Cocg | MethodId::Cocr | MethodId::Csym)
    }

    /// Methods that read a tuning parameter from the configuration.
    pub fn is_parameterized(self) -> bool {
        matches!(self, MethodId::Gmres | MethodId::BiCgStabL | MethodId::GpBiCg)
    }

    /// Which side this method applies a caller-supplied preconditioner on;
    /// `None` for the two methods that do not accept one (CSYM runs
    /// unpreconditioned, ILUCG builds its own ILU(0) internally).
    pub fn precond_side(self) -> Option<PrecondSide> {
        match self {
            MethodId::BiCg
            | MethodId::Cgs
            | MethodId::Tfqmr
            | MethodId::Qmr
            | MethodId::BiCor
            | MethodId::Cors
            | MethodId::Cocg
            | MethodId::Cocr
            | MethodId::Cgne
            | MethodId::Cgnr => Some(PrecondSide::Left),
            MethodId::BiCgStab | MethodId::BiCgStabL | MethodId::GpBiCg | MethodId::Gmres => {
                Some(PrecondSide::Right)
            }
            MethodId::Csym | MethodId::Ilucg => None,
        }
    }

    /// Requires the assembled CSR matrix (not just a matvec routine).
    pub fn needs_entries(self) -> bool {
        matches!(self, MethodId::Ilucg)
    }

    pub fn name(self) -> &'static str {
        match self {
            MethodId::BiCg => "bicg",
            MethodId::Cgs => "cgs",
            MethodId::BiCgStab => "bicgstab",
            MethodId::BiCgStabL => "bicgstabl",
            MethodId::Tfqmr => "tfqmr",
            MethodId::Qmr => "qmr",
            MethodId::GpBiCg => "gpbicg",
            MethodId::BiCor => "bicor",
            MethodId::Cors => "cors",
            MethodId::Cocg => "cocg",
            MethodId::Cocr => "cocr",
            MethodId::Csym => "csym",
            MethodId::Cgne => "cgne",
            MethodId::Cgnr => "cgnr",
            MethodId::Gmres => "gmres",
            MethodId::Ilucg => "ilucg",
        }
    }
}

impl std::fmt::Display for MethodId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        for m in Self::ALL {
            if m.name() == lower {
                return Ok(m);
            }
        }
        Err(Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}

/// What the relative stopping tolerance is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StopMode {
    /// `||r_k|| <= epsilon_err * ||r_0||`. With the fixed zero initial guess
    /// this equals the right-hand-side mode, but the two stay distinct for
    /// clarity of intent.
    #[default]
    RelativeToR0,
    /// `||r_k|| <= epsilon_err * ||y||`.
    RelativeToRhs,
}

/// Solver configuration. Defaults: `epsilon_err = 1e-8`, `maxit = 1000`,
/// residual measured relative to `r_0`, GMRES restart 30, BiCGstab(ℓ) with
/// `ell = 2`, GPBiCG(1, 1), history recording on.
#[derive(Clone, Debug)]
pub struct SolverConfig<T: Real> {
    /// Relative residual target, must lie in `(0, 1)`.
    pub epsilon_err: T,
    /// Iteration budget; bounds outer steps (inner Arnoldi steps for GMRES).
    pub maxit: usize,
    pub stop_mode: StopMode,
    /// GMRES restart length `m`.
    pub restart_m: usize,
    /// BiCGstab(ℓ) polynomial degree.
    pub ell: usize,
    /// GPBiCG hybrid cycle: `gp_m` BiCGSTAB-type steps ...
    pub gp_m: usize,
    /// ... followed by `gp_n` GPBiCG-type steps, repeating.
    pub gp_n: usize,
    /// Record `(iteration, recurrence residual norm)` pairs in the outcome.
    pub record_history: bool,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            epsilon_err: T::of(1e-8),
            maxit: 1000,
            stop_mode: StopMode::default(),
            restart_m: 30,
            ell: 2,
            gp_m: 1,
            gp_n: 1,
            record_history: true,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    /// Convenience constructor for the two values almost every caller sets.
    pub fn with_tolerance(epsilon_err: T, maxit: usize) -> Self {
        Self { epsilon_err, maxit, ..Self::default() }
    }

    /// Check parameter ranges; returns a description of the first violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.epsilon_err > T::zero() && self.epsilon_err < T::one()) {
            return Err(format!("epsilon_err must lie in (0, 1), got {}", self.epsilon_err));
        }
        if self.maxit == 0 {
            return Err("maxit must be >= 1".into());
        }
        if self.restart_m == 0 {
            return Err("restart_m must be >= 1".into());
        }
        if self.ell == 0 {
            return Err("ell must be >= 1".into());
        }
        if self.gp_m + self.gp_n == 0 {
            return Err("gp_m + gp_n must be >= 1".into());
        }
        Ok(())
    }
}

/// How a solver run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverStatus {
    /// Stopping test satisfied and the true residual confirmed it.
    Converged,
    /// Iteration budget exhausted before the stopping test passed.
    MaxIterations,
    /// A recurrence scalar collapsed; `breakdown_detail` names it.
    Breakdown,
    /// The recurrence claimed convergence but the true residual is more than
    /// ten times the target: the short recurrence drifted from reality.
    FalseConvergence,
    /// The request itself was unusable (bad config, wrong dimensions, missing
    /// capability); `breakdown_detail` explains which requirement failed.
    InvalidInput,
}

impl SolverStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolverStatus::Converged => "converged",
            SolverStatus::MaxIterations => "max-iterations",
            SolverStatus::Breakdown => "breakdown",
            SolverStatus::FalseConvergence => "false-convergence",
            SolverStatus::InvalidInput => "invalid-input",
        }
    }
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of a solver run. Always returned by value — even failed runs carry
/// their partial iterate, verified residual and history.
#[derive(Clone, Debug)]
pub struct SolverOutcome<T: Real> {
    pub status: SolverStatus,
    /// Completed outer iterations (inner steps for GMRES).
    pub iterations: usize,
    /// Final iterate (zeros when the run never started).
    pub x: Vec<Complex<T>>,
    /// `||y - A x|| / ||y||`, recomputed from scratch at exit.
    pub true_rel_residual: T,
    /// `(iteration, recurrence residual norm)` pairs; entry 0 is `||r_0||`.
    /// Empty when history recording is off.
    pub history: Vec<(usize, T)>,
    /// Names the broken scalar or the violated requirement.
    pub breakdown_detail: Option<String>,
}

impl<T: Real> SolverOutcome<T> {
    /// Outcome for a request that failed validation before iterating.
    pub(crate) fn invalid(n: usize, detail: impl Into<String>) -> Self {
        Self {
            status: SolverStatus::InvalidInput,
            iterations: 0,
            x: zeros(n),
            true_rel_residual: T::infinity(),
            history: Vec::new(),
            breakdown_detail: Some(detail.into()),
        }
    }

    pub fn converged(&self) -> bool {
        self.status == SolverStatus::Converged
    }
}

/// The single stopping test used by every method.
///
/// Returns `true` when `rnorm` is exactly zero or falls at or below
/// `epsilon_err` times the denominator selected by `stop_mode`. A non-finite
/// `rnorm` never passes. A zero denominator with a nonzero residual is a
/// caller error (the solvers handle `y = 0` before iterating).
pub fn stopping_test<T: Real>(
    rnorm: T,
    r0norm: T,
    ynorm: T,
    cfg: &SolverConfig<T>,
) -> Result<bool> {
    if !rnorm.is_finite() {
        return Ok(false);
    }
    if rnorm == T::zero() {
        return Ok(true);
    }
    let denom = match cfg.stop_mode {
        StopMode::RelativeToR0 => r0norm,
        StopMode::RelativeToRhs => ynorm,
    };
    if denom == T::zero() {
        return Err(Error::InvalidArgument(
            "stopping test: zero residual denominator with nonzero residual".into(),
        ));
    }
    Ok(rnorm <= cfg.epsilon_err * denom)
}

/// Exit-time verification shared by all solvers.
///
/// Computes the true relative residual with one operator application,
/// downgrades unverified convergence claims, and refuses to mark non-finite
/// results as converged.
#[allow(clippy::too_many_arguments)]
pub fn finalize<T: Real>(
    x: Vec<Complex<T>>,
    a: &dyn LinearOperator<T>,
    y: &[Complex<T>],
    cfg: &SolverConfig<T>,
    history: Vec<(usize, T)>,
    loop_status: SolverStatus,
    iterations: usize,
    breakdown_detail: Option<String>,
) -> SolverOutcome<T> {
    let n = a.dim();
    let mut r = zeros(n);
    a.apply(&x, &mut r);
    for (ri, yi) in r.iter_mut().zip(y) {
        *ri = *yi - *ri;
    }
    let ynorm = norm2(y);
    let rnorm = norm2(&r);
    let true_rel_residual = if ynorm > T::zero() {
        rnorm / ynorm
    } else if rnorm == T::zero() {
        T::zero()
    } else {
        T::infinity()
    };

    let mut status = loop_status;
    let mut detail = breakdown_detail;
    let finite = x.iter().all(|z| is_finite_c(*z)) && true_rel_residual.is_finite();
    if !finite {
        if status != SolverStatus::Breakdown {
            status = SolverStatus::Breakdown;
        }
        let msg = "non-finite values in the final iterate or residual".to_string();
        detail = Some(match detail {
            Some(d) => format!("{d}; {msg}"),
            None => msg,
        });
    } else if status == SolverStatus::Converged
        && true_rel_residual > T::of(10.0) * cfg.epsilon_err
    {
        status = SolverStatus::FalseConvergence;
        detail = Some(format!(
            "recurrence reported convergence but the true relative residual is {true_rel_residual:e}"
        ));
    }

    SolverOutcome { status, iterations, x, true_rel_residual, history, breakdown_detail: detail }
}

/// Breakdown guard for recurrence divisors.
///
/// A divisor is unusable when it is non-finite or when its magnitude falls
/// below `eps^2` times the scale of the quantities it was computed from
/// (e.g. `||u|| * ||v||` for an inner product). The quadratic threshold only
/// trips on genuine collapses, not on small-but-meaningful values.
pub(crate) fn divisor_failure<T: Real>(
    name: &str,
    value: Complex<T>,
    scale: T,
) -> Option<String> {
    if !is_finite_c(value) || !scale.is_finite() {
        return Some(format!("{name} is non-finite"));
    }
    if value.norm() <= T::epsilon() * T::epsilon() * scale || value.norm() == T::zero() {
        return Some(format!("{name} collapsed (|{name}| = {:e})", value.norm()));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DenseMatrix;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn method_names_round_trip() {
        for m in MethodId::ALL {
            let parsed: MethodId = m.name().parse().unwrap();
            assert_eq!(parsed, m);
        }
        assert!("nosuch".parse::<MethodId>().is_err());
        assert_eq!("GMRES".parse::<MethodId>().unwrap(), MethodId::Gmres);
    }

    #[test]
    fn requirement_flags_partition_the_catalog() {
        let hermitian: Vec<_> = MethodId::ALL.iter().filter(|m| m.needs_hermitian()).collect();
        assert_eq!(hermitian.len(), 7);
        let symmetric: Vec<_> = MethodId::ALL.iter().filter(|m| m.needs_symmetric()).collect();
        assert_eq!(symmetric.len(), 3);
        for m in MethodId::ALL {
            assert!(!(m.needs_hermitian() && m.needs_symmetric()), "{m} double-gated");
        }
        assert!(MethodId::Gmres.is_parameterized());
        assert!(!MethodId::Cgs.is_parameterized());
        assert_eq!(MethodId::Csym.precond_side(), None);
        assert_eq!(MethodId::Ilucg.precond_side(), None);
        assert_eq!(MethodId::Gmres.precond_side(), Some(PrecondSide::Right));
        assert_eq!(MethodId::BiCg.precond_side(), Some(PrecondSide::Left));
    }

    #[test]
    fn config_validation_catches_out_of_range_values() {
        let mut cfg = SolverConfig::<f64>::default();
        assert!(cfg.validate().is_ok());
        cfg.epsilon_err = 0.0;
        assert!(cfg.validate().is_err());
        cfg.epsilon_err = 1.0;
        assert!(cfg.validate().is_err());
        cfg.epsilon_err = 1e-8;
        cfg.maxit = 0;
        assert!(cfg.validate().is_err());
        cfg.maxit = 10;
        cfg.gp_m = 0;
        cfg.gp_n = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn stopping_test_semantics() {
        let cfg = SolverConfig::<f64> { epsilon_err: 1e-6, ..Default::default() };
        // Exactly zero always stops.
        assert!(stopping_test(0.0, 0.0, 0.0, &cfg).unwrap());
        // Relative to r0.
        assert!(stopping_test(0.9e-6, 1.0, 2.0, &cfg).unwrap());
        assert!(!stopping_test(1.1e-6, 1.0, 2.0, &cfg).unwrap());
        // Relative to rhs uses the other denominator.
        let cfg_rhs =
            SolverConfig::<f64> { epsilon_err: 1e-6, stop_mode: StopMode::RelativeToRhs, ..Default::default() };
        assert!(stopping_test(1.9e-6, 1.0, 2.0, &cfg_rhs).unwrap());
        assert!(!stopping_test(2.1e-6, 1.0, 2.0, &cfg_rhs).unwrap());
        // NaN never converges.
        assert!(!stopping_test(f64::NAN, 1.0, 1.0, &cfg).unwrap());
        // Zero denominator with nonzero residual is an error.
        assert!(stopping_test(0.5, 0.0, 0.0, &cfg).is_err());
    }

    #[test]
    fn finalize_confirms_honest_convergence() {
        let a = DenseMatrix::<f64>::identity(2);
        let y = [c(3.0, 0.0), c(4.0, 0.0)];
        let cfg = SolverConfig::<f64>::with_tolerance(1e-8, 10);
        let out = finalize(
            vec![c(3.0, 0.0), c(4.0, 0.0)],
            &a,
            &y,
            &cfg,
            vec![(0, 5.0)],
            SolverStatus::Converged,
            1,
            None,
        );
        assert_eq!(out.status, SolverStatus::Converged);
        assert!(out.true_rel_residual < 1e-15);
    }

    #[test]
    fn finalize_downgrades_false_convergence() {
        // Claim convergence with an iterate that is off by 10%: the guard
        // (10x the 1e-8 target) must fire.
        let a = DenseMatrix::<f64>::identity(2);
        let y = [c(1.0, 0.0), c(0.0, 0.0)];
        let cfg = SolverConfig::<f64>::with_tolerance(1e-8, 10);
        let out = finalize(
            vec![c(0.9, 0.0), c(0.0, 0.0)],
            &a,
            &y,
            &cfg,
            Vec::new(),
            SolverStatus::Converged,
            3,
            None,
        );
        assert_eq!(out.status, SolverStatus::FalseConvergence);
        assert!(out.breakdown_detail.is_some());
    }

    #[test]
    fn finalize_never_reports_converged_nan() {
        let a = DenseMatrix::<f64>::identity(1);
        let y = [c(1.0, 0.0)];
        let cfg = SolverConfig::<f64>::default();
        let out = finalize(
            vec![c(f64::NAN, 0.0)],
            &a,
            &y,
            &cfg,
            Vec::new(),
            SolverStatus::Converged,
            1,
            None,
        );
        assert_eq!(out.status, SolverStatus::Breakdown);
        assert!(out.breakdown_detail.unwrap().contains("non-finite"));
    }

    #[test]
    fn divisor_guard_only_trips_on_collapse() {
        assert!(divisor_failure("rho", c(0.0, 0.0), 1.0).is_some());
        assert!(divisor_failure("rho", c(f64::NAN, 0.0), 1.0).is_some());
        // eps^2-scaled threshold: 1e-30 against scale 1 trips...
        assert!(divisor_failure("rho", c(1e-33, 0.0), 1.0).is_some());
        // ...but a small, meaningful value does not.
        assert!(divisor_failure("rho", c(1e-12, 0.0), 1.0).is_none());
        // The message names the scalar.
        let msg = divisor_failure("omega", c(0.0, 0.0), 1.0).unwrap();
        assert!(msg.contains("omega"));
    }
}
