//! Methods specialized to complex-symmetric systems (`A = A^T`, without
//! conjugation): COCG, COCR and CSYM.
//!
//! COCG and COCR replace the Hermitian inner products of CG/CR with the
//! unconjugated bilinear form `sum_i u_i v_i`, which is exactly the pairing
//! under which a complex-symmetric operator is self-adjoint. CSYM instead
//! builds a genuinely unitary tridiagonalization `A conj(Q) = Q T` and
//! minimizes the true residual over the growing subspace, MINRES-style, so
//! its recurrence residual is monotonically nonincreasing.
//!
//! The driver refuses all three for operators that do not declare
//! `A = A^T`: applied to a general matrix their recurrences silently lose
//! the properties that make them correct.

use num_complex::Complex;

use crate::control::{divisor_failure, finalize, SolverConfig, SolverOutcome, SolverStatus};
use crate::numerics::{axpy, dotu_kernel, norm2, xpay, zeros, Real};
use crate::operator::LinearOperator;
use crate::precond::Preconditioner;

use super::{apply_new, givens, precond_vec, Monitor, Step, NON_FINITE_RESIDUAL};

/// Conjugate Orthogonal CG, left-preconditioned. One product per iteration.
pub(super) fn cocg<T: Real>(
    a: &dyn LinearOperator<T>,
    y: &[Complex<T>],
    m: &dyn Preconditioner<T>,
    cfg: &SolverConfig<T>,
) -> SolverOutcome<T> {
    let n = a.dim();
    let mut x = zeros(n);
    let mut r = y.to_vec();
    let ynorm = norm2(y);
    let mut mon = Monitor::new(cfg, ynorm, ynorm);

    let mut status = SolverStatus::MaxIterations;
    let mut detail: Option<String> = None;
    let mut done = 0;

    let mut rho_prev = Complex::new(T::zero(), T::zero());
    let mut z = zeros(n);
    let mut p = zeros(n);
    let mut q = zeros(n);

    for k in 1..=cfg.maxit {
        done = k;
        m.apply(&r, &mut z);
        let rho = dotu_kernel(&r, &z);
        if let Some(msg) = divisor_failure("rho", rho, norm2(&r) * norm2(&z)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        if k == 1 {
            p.copy_from_slice(&z);
        } else {
            let beta = rho / rho_prev;
            xpay(&z, beta, &mut p);
        }
        a.apply(&p, &mut q);
        let sigma = dotu_kernel(&p, &q);
        if let Some(msg) = divisor_failure("sigma", sigma, norm2(&p) * norm2(&q)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        let alpha = rho / sigma;
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
        rho_prev = rho;
    }
    finalize(x, a, y, cfg, mon.history, status, done, detail)
}

/// Conjugate Orthogonal Conjugate Residual, left-preconditioned. One product
/// per iteration after one at setup; compared to COCG the residual curve is
/// smoother because the update minimizes under the residual pairing.
pub(super) fn cocr<T: Real>(
    a: &dyn LinearOperator<T>,
    y: &[Complex<T>],
    m: &dyn Preconditioner<T>,
    cfg: &SolverConfig<T>,
) -> SolverOutcome<T> {
    let n = a.dim();
    let mut x = zeros(n);
    let mut r = y.to_vec();
    let ynorm = norm2(y);
    let mut mon = Monitor::new(cfg, ynorm, ynorm);

    let mut status = SolverStatus::MaxIterations;
    let mut detail: Option<String> = None;
    let mut done = 0;

    // z = M^{-1} r and w = A z, both maintained by recurrence.
    let mut z = precond_vec(m, &r);
    let mut w = apply_new(a, &z);
    let mut rho = dotu_kernel(&z, &w);
    let mut p = z.clone();
    let mut q = w.clone();
    let mut u = zeros(n);

    for k in 1..=cfg.maxit {
        done = k;
        if let Some(msg) = divisor_failure("rho", rho, norm2(&z) * norm2(&w)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        m.apply(&q, &mut u);
        let sigma = dotu_kernel(&q, &u);
        if let Some(msg) = divisor_failure("sigma", sigma, norm2(&q) * norm2(&u)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        let alpha = rho / sigma;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        axpy(-alpha, &u, &mut z);

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
        a.apply(&z, &mut w);
        let rho_next = dotu_kernel(&z, &w);
        let beta = rho_next / rho;
        xpay(&z, beta, &mut p);
        xpay(&w, beta, &mut q);
        rho = rho_next;
    }
    finalize(x, a, y, cfg, mon.history, status, done, detail)
}

/// CSYM: tridiagonalize with the unitary recurrence
/// `A conj(q_k) = beta_{k-1} q_{k-1} + alpha_k q_k + beta_k q_{k+1}`
/// (real `beta >= 0`), and minimize the true residual over
/// `span{conj(q_1), ..., conj(q_k)}` with a Givens QR of the tridiagonal.
/// One product per iteration; the monitored residual `|phi_bar|` is exact
/// for the subspace and never increases. Takes no preconditioner.
pub(super) fn csym<T: Real>(
    a: &dyn LinearOperator<T>,
    y: &[Complex<T>],
    cfg: &SolverConfig<T>,
) -> SolverOutcome<T> {
    let n = a.dim();
    let mut x = zeros(n);
    let ynorm = norm2(y);
    let mut mon = Monitor::new(cfg, ynorm, ynorm);

    let mut status = SolverStatus::MaxIterations;
    let mut detail: Option<String> = None;
    let mut done = 0;

    let czero = Complex::new(T::zero(), T::zero());
    // Lanczos vectors.
    let mut q: Vec<Complex<T>> = y.iter().map(|z| z / Complex::new(ynorm, T::zero())).collect();
    let mut q_prev = zeros(n);
    let mut beta_prev = T::zero();
    // Rotation history: (c, s) for steps k-1 and k-2.
    let mut rot_prev = (T::one(), czero);
    let mut rot_prev2 = (T::one(), czero);
    // Update directions.
    let mut d_prev = zeros(n);
    let mut d_prev2 = zeros(n);
    let mut qc = zeros(n);
    // Residual carrier.
    let mut phi_bar = Complex::new(ynorm, T::zero());

    for k in 1..=cfg.maxit {
        done = k;
        // One product: w = A conj(q_k).
        for (t, qi) in qc.iter_mut().zip(&q) {
            *t = qi.conj();
        }
        let mut w = apply_new(a, &qc);
        let alpha = crate::numerics::dotc_kernel(&q, &w);
        axpy(-alpha, &q, &mut w);
        if beta_prev > T::zero() {
            axpy(Complex::new(-beta_prev, T::zero()), &q_prev, &mut w);
        }
        let beta = norm2(&w);

        // Rotate the new tridiagonal column (beta_prev, alpha, beta).
        let eps_k = rot_prev2.1 * beta_prev;
        let t_mid = Complex::new(rot_prev2.0 * beta_prev, T::zero());
        let delta = t_mid * rot_prev.0 + rot_prev.1 * alpha;
        let f = -rot_prev.1.conj() * t_mid + alpha * rot_prev.0;
        let (c_new, s_new, r_kk) = givens(f, beta);
        if let Some(msg) =
            divisor_failure("r_kk", r_kk, alpha.norm() + beta_prev + beta)
        {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        // d_k = (conj(q_k) - delta d_{k-1} - eps d_{k-2}) / r_kk
        let mut dk = qc.clone();
        axpy(-delta, &d_prev, &mut dk);
        axpy(-eps_k, &d_prev2, &mut dk);
        for di in dk.iter_mut() {
            *di = *di / r_kk;
        }
        let phi = phi_bar * c_new;
        phi_bar = -s_new.conj() * phi_bar;
        axpy(phi, &dk, &mut x);

        let rnorm = phi_bar.norm();
        match mon.observe(k, rnorm) {
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

        // Prepare the next Lanczos vector; a vanishing beta here means the
        // subspace is exhausted while the residual is still above target.
        if k == cfg.maxit {
            break;
        }
        if let Some(msg) = divisor_failure(
            "beta",
            Complex::new(beta, T::zero()),
            alpha.norm() + beta_prev + T::one(),
        ) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        std::mem::swap(&mut q_prev, &mut q);
        for (qi, wi) in q.iter_mut().zip(&w) {
            *qi = wi / Complex::new(beta, T::zero());
        }
        beta_prev = beta;
        rot_prev2 = rot_prev;
        rot_prev = (c_new, s_new);
        std::mem::swap(&mut d_prev2, &mut d_prev);
        d_prev = dk;
    }
    finalize(x, a, y, cfg, mon.history, status, done, detail)
}
