//! Normal-equation methods: CGNR, CGNE and the self-preconditioned ILUCG.
//!
//! Both run plain CG on a Hermitian positive (semi-)definite reformulation:
//! CGNR on `A^H A x = A^H y` (residual-minimizing), CGNE on `A A^H u = y`
//! with `x = A^H u` (error-minimizing, Craig's method). Squaring the
//! condition number makes them slow on generic systems but excellent when
//! `A` is near-unitary — on an exactly unitary operator CGNR converges in
//! one step. ILUCG runs the CGNR loop on the system left-preconditioned by
//! its own ILU(0) factorization of the assembled entries.

use num_complex::Complex;

use crate::control::{divisor_failure, finalize, SolverConfig, SolverOutcome, SolverStatus};
use crate::numerics::{axpy, norm2, xpay, zeros, Real};
use crate::operator::LinearOperator;
use crate::precond::{Ilu0, LeftPreconditioned, Preconditioner};

use super::{precond_vec, Monitor, Step, NON_FINITE_RESIDUAL};

/// The shared CG-on-normal-equations loop for CGNR: `b` is already the
/// (possibly preconditioned) operator and `c` its right-hand side; `a` and
/// `y` are the original system used for exit verification.
fn cgnr_loop<T: Real>(
    b: &dyn LinearOperator<T>,
    c: &[Complex<T>],
    a: &dyn LinearOperator<T>,
    y: &[Complex<T>],
    cfg: &SolverConfig<T>,
) -> SolverOutcome<T> {
    let n = b.dim();
    let r0norm = norm2(c);
    if r0norm == T::zero() {
        return finalize(
            zeros(n),
            a,
            y,
            cfg,
            Vec::new(),
            SolverStatus::Breakdown,
            0,
            Some("the preconditioner annihilated the right-hand side".into()),
        );
    }
    let mut mon = Monitor::new(cfg, r0norm, r0norm);

    let mut x = zeros(n);
    let mut r = c.to_vec();
    let mut g = zeros(n);
    b.apply_hermitian(&r, &mut g);
    let mut gamma = norm2(&g);
    let mut gamma2 = gamma * gamma;
    let mut p = g.clone();
    let mut q = zeros(n);

    let mut status = SolverStatus::MaxIterations;
    let mut detail: Option<String> = None;
    let mut done = 0;

    for k in 1..=cfg.maxit {
        done = k;
        b.apply(&p, &mut q);
        let sigma = norm2(&q);
        let sigma2 = sigma * sigma;
        if let Some(msg) = divisor_failure(
            "sigma",
            Complex::new(sigma2, T::zero()),
            norm2(&p) * norm2(&p),
        ) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        let alpha = Complex::new(gamma2 / sigma2, T::zero());
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);

        match mon.observe(k, norm2(&r)) {
            Step::Converged => {
                status = SolverStatus::Converged;
                break;
            }
            Step::NonFinite => {
                status = SolverStatus::Breakdown;
                detail = Some(NON_FINITE_RESIDUAL.into());
                break;
            }
            Step::Continue => {}
        }
        b.apply_hermitian(&r, &mut g);
        gamma = norm2(&g);
        let gamma2_next = gamma * gamma;
        let beta = Complex::new(gamma2_next / gamma2, T::zero());
        xpay(&g, beta, &mut p);
        gamma2 = gamma2_next;
    }
    finalize(x, a, y, cfg, mon.history, status, done, detail)
}

/// CGNR with left preconditioning: CG on the normal equations of
/// `M^{-1} A x = M^{-1} y`. The monitored residual (of the preconditioned
/// system) decreases monotonically — that is what CGNR minimizes.
pub(super) fn cgnr<T: Real>(
    a: &dyn LinearOperator<T>,
    y: &[Complex<T>],
    m: &dyn Preconditioner<T>,
    cfg: &SolverConfig<T>,
) -> SolverOutcome<T> {
    let b = LeftPreconditioned::new(a, m);
    let c = precond_vec(m, y);
    cgnr_loop(&b, &c, a, y, cfg)
}

/// CGNE (Craig's method) with left preconditioning: CG on
/// `B B^H u = c`, `x = B^H u`, reformulated directly over `x`. Minimizes
/// the error norm rather than the residual norm.
pub(super) fn cgne<T: Real>(
    a: &dyn LinearOperator<T>,
    y: &[Complex<T>],
    m: &dyn Preconditioner<T>,
    cfg: &SolverConfig<T>,
) -> SolverOutcome<T> {
    let n = a.dim();
    let b = LeftPreconditioned::new(a, m);
    let c = precond_vec(m, y);
    let r0norm = norm2(&c);
    if r0norm == T::zero() {
        return finalize(
            zeros(n),
            a,
            y,
            cfg,
            Vec::new(),
            SolverStatus::Breakdown,
            0,
            Some("the preconditioner annihilated the right-hand side".into()),
        );
    }
    let mut mon = Monitor::new(cfg, r0norm, r0norm);

    let mut x = zeros(n);
    let mut r = c.clone();
    let mut p = zeros(n);
    b.apply_hermitian(&r, &mut p);
    let mut rho2 = r0norm * r0norm;
    let mut q = zeros(n);
    let mut g = zeros(n);

    let mut status = SolverStatus::MaxIterations;
    let mut detail: Option<String> = None;
    let mut done = 0;

    for k in 1..=cfg.maxit {
        done = k;
        let pnorm = norm2(&p);
        let sigma2 = pnorm * pnorm;
        if let Some(msg) =
            divisor_failure("sigma", Complex::new(sigma2, T::zero()), norm2(&r) * norm2(&r))
        {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        let alpha = Complex::new(rho2 / sigma2, T::zero());
        axpy(alpha, &p, &mut x);
        b.apply(&p, &mut q);
        axpy(-alpha, &q, &mut r);

        match mon.observe(k, norm2(&r)) {
            Step::Converged => {
                status = SolverStatus::Converged;
                break;
            }
            Step::NonFinite => {
                status = SolverStatus::Breakdown;
                detail = Some(NON_FINITE_RESIDUAL.into());
                break;
            }
            Step::Continue => {}
        }
        let rnorm = norm2(&r);
        let rho2_next = rnorm * rnorm;
        let beta = Complex::new(rho2_next / rho2, T::zero());
        b.apply_hermitian(&r, &mut g);
        xpay(&g, beta, &mut p);
        rho2 = rho2_next;
    }
    finalize(x, a, y, cfg, mon.history, status, done, detail)
}

/// ILUCG: factor the assembled entries as ILU(0), then run the CGNR loop on
/// the left-preconditioned system. Takes no external preconditioner — the
/// factorization is the point of the method. A failed factorization (zero
/// or collapsed pivot) is reported as a breakdown naming the row.
pub(super) fn ilucg<T: Real>(
    a: &dyn LinearOperator<T>,
    entries: &crate::operator::CsrMatrix<T>,
    y: &[Complex<T>],
    cfg: &SolverConfig<T>,
) -> SolverOutcome<T> {
    let ilu = match Ilu0::new(entries) {
        Ok(f) => f,
        Err(e) => {
            return finalize(
                zeros(a.dim()),
                a,
                y,
                cfg,
                Vec::new(),
                SolverStatus::Breakdown,
                0,
                Some(format!("ILU(0) factorization failed: {e}")),
            )
        }
    };
    let b = LeftPreconditioned::new(a, &ilu);
    let c = {
        let mut z = zeros(a.dim());
        ilu.apply(y, &mut z);
        z
    };
    cgnr_loop(&b, &c, a, y, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::MethodId;
    use crate::gallery;
    use crate::operator::DenseMatrix;
    use crate::oracle;
    use crate::solvers::{solve, SystemRef};

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn check_against_direct(method: MethodId, n: usize, seed: u64, tol: f64, rel_err: f64) {
        let a = gallery::random_general::<f64>(n, 0.5 / (n as f64).sqrt(), seed);
        let y = gallery::random_rhs::<f64>(n, seed + 1000);
        let cfg = SolverConfig::with_tolerance(tol, 100 * n);
        let out = solve(method, SystemRef::Dense(&a), &y, None, &cfg);
        assert_eq!(out.status, SolverStatus::Converged, "{method}: {:?}", out.breakdown_detail);
        let exact = oracle::dense_solve(&a, &y).unwrap();
        let num: f64 = out.x.iter().zip(&exact).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = norm2(&exact);
        assert!(num / den < rel_err, "{method}: relative error {:e}", num / den);
    }

    #[test]
    fn cgnr_matches_direct_solver() {
        check_against_direct(MethodId::Cgnr, 12, 71, 1e-10, 1e-6);
    }

    #[test]
    fn cgne_matches_direct_solver() {
        check_against_direct(MethodId::Cgne, 12, 72, 1e-10, 1e-6);
    }

    #[test]
    fn cgnr_residual_history_is_monotone() {
        let a = gallery::random_general::<f64>(16, 0.12, 73);
        let y = gallery::random_rhs::<f64>(16, 74);
        let out = solve(MethodId::Cgnr, SystemRef::Dense(&a), &y, None, &SolverConfig::default());
        assert_eq!(out.status, SolverStatus::Converged);
        for pair in out.history.windows(2) {
            assert!(
                pair[1].1 <= pair[0].1 * (1.0 + 1e-12),
                "CGNR residual rose from {:e} to {:e}",
                pair[0].1,
                pair[1].1
            );
        }
    }

    #[test]
    fn cgnr_converges_in_one_step_on_a_unitary_operator() {
        let f = gallery::dft_unitary::<f64>(8);
        let y = gallery::random_rhs::<f64>(8, 75);
        let out = solve(MethodId::Cgnr, SystemRef::Dense(&f), &y, None, &SolverConfig::default());
        assert_eq!(out.status, SolverStatus::Converged);
        assert_eq!(out.iterations, 1, "A^H A = I collapses CGNR to one step");
    }

    #[test]
    fn ilucg_is_exact_on_a_diagonal_matrix() {
        // ILU(0) of a diagonal matrix is the matrix itself, so the
        // preconditioned system is the identity: one iteration.
        let d = vec![c(2.0, 1.0), c(-1.0, 3.0), c(4.0, 0.0)];
        let a = crate::operator::CsrMatrix::from_diagonal(&d);
        let y = vec![c(2.0, 0.0), c(1.0, 1.0), c(-4.0, 8.0)];
        let out = solve(MethodId::Ilucg, SystemRef::Csr(&a), &y, None, &SolverConfig::default());
        assert_eq!(out.status, SolverStatus::Converged, "{:?}", out.breakdown_detail);
        assert_eq!(out.iterations, 1);
        let exact = oracle::csr_solve(&a, &y).unwrap();
        for (xi, ei) in out.x.iter().zip(&exact) {
            assert!((xi - ei).norm() < 1e-10);
        }
    }

    #[test]
    fn ilucg_solves_a_dense_general_system() {
        let a = gallery::random_general::<f64>(12, 0.2, 76);
        let y = gallery::random_rhs::<f64>(12, 77);
        let cfg = SolverConfig::with_tolerance(1e-10, 200);
        let out = solve(MethodId::Ilucg, SystemRef::Dense(&a), &y, None, &cfg);
        assert_eq!(out.status, SolverStatus::Converged, "{:?}", out.breakdown_detail);
        let exact = oracle::dense_solve(&a, &y).unwrap();
        for (xi, ei) in out.x.iter().zip(&exact) {
            assert!((xi - ei).norm() < 1e-6);
        }
    }

    #[test]
    fn ilucg_reports_factorization_failure_as_breakdown() {
        // Zero diagonal entry: ILU(0) has no pivot to work with.
        let a = crate::operator::CsrMatrix::from_triplets(
            2,
            &[(0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))],
        )
        .unwrap();
        let y = vec![c(1.0, 0.0), c(1.0, 0.0)];
        let out = solve(MethodId::Ilucg, SystemRef::Csr(&a), &y, None, &SolverConfig::default());
        assert_eq!(out.status, SolverStatus::Breakdown);
        assert!(out.breakdown_detail.unwrap().contains("ILU(0)"));
    }

    #[test]
    fn normal_methods_handle_rank_revealing_break() {
        // Singular A: sigma = ||B p||^2 collapses once the range is swept.
        let a = DenseMatrix::new(2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let y = vec![c(0.0, 0.0), c(1.0, 0.0)];
        for method in [MethodId::Cgnr, MethodId::Cgne] {
            let out = solve(method, SystemRef::Dense(&a), &y, None, &SolverConfig::default());
            assert_eq!(out.status, SolverStatus::Breakdown, "{method}");
        }
    }
}
