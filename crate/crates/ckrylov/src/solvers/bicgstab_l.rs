//! BiCGstab(ℓ): the BiCG recurrence interleaved with an ℓ-degree minimal
//! residual polynomial, with grouped ("reliable") updates of the residual
//! and solution.
//!
//! Each outer step performs ℓ BiCG half-sweeps that extend the residual
//! and direction blocks `rs[0..=ℓ]`, `us[0..=ℓ]` by repeated application of
//! the (right-preconditioned) operator, then replaces the ℓ free
//! coefficients by the least-squares minimizer computed from a modified
//! Gram-Schmidt factorization of the residual block. With ℓ = 1 the
//! polynomial part is a single residual-minimizing step and the recurrence
//! is BiCGSTAB's, so that case runs the plain BiCGSTAB loop — identical
//! step for step, in finite precision too, rather than merely in exact
//! arithmetic. Larger ℓ restores convergence on matrices with strongly
//! complex spectra where the one-dimensional residual smoothing of BiCGSTAB
//! stagnates.
//!
//! When the recursive residual drops far below its running maximum the
//! residual is recomputed from scratch (one extra operator product), and on
//! a deeper drop the accumulated solution is shifted into a fresh zero
//! starting point; this keeps the recursive and true residuals from
//! drifting apart over long runs.
//!
//! The iteration count is the number of outer steps: one outer step costs
//! 2ℓ operator products plus one more when the residual is recomputed.

use num_complex::Complex;

use crate::control::{divisor_failure, finalize, SolverConfig, SolverOutcome, SolverStatus};
use crate::numerics::{axpy, dotc_kernel as dotc, norm2, zeros, Real};
use crate::operator::LinearOperator;
use crate::precond::{Preconditioner, RightPreconditioned};

use super::{precond_vec, Monitor, Step, NON_FINITE_RESIDUAL};

/// Fraction of the running residual maximum below which the residual (and,
/// on a second-level drop, the solution) is recomputed from scratch.
const RELIABLE_UPDATE_FRACTION: f64 = 1e-2;

pub(super) fn bicgstab_l<T: Real>(
    a: &dyn LinearOperator<T>,
    y: &[Complex<T>],
    m: &dyn Preconditioner<T>,
    cfg: &SolverConfig<T>,
) -> SolverOutcome<T> {
    if cfg.ell == 1 {
        return super::transpose_free::bicgstab(a, y, m, cfg);
    }
    let n = a.dim();
    let l = cfg.ell;
    let b = RightPreconditioned::new(a, m);
    let delta = T::of(RELIABLE_UPDATE_FRACTION);
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());

    // Working split of the iterate: xs holds the settled part, xw the part
    // accumulated since the last solution shift, solving `B xw = bw`.
    let mut xs = zeros(n);
    let mut xw = zeros(n);
    let mut bw = y.to_vec();

    let mut rs: Vec<Vec<Complex<T>>> = (0..=l).map(|_| zeros(n)).collect();
    let mut us: Vec<Vec<Complex<T>>> = (0..=l).map(|_| zeros(n)).collect();
    rs[0].copy_from_slice(y);
    let rt = y.to_vec(); // shadow residual, fixed at the initial residual

    let r0norm = norm2(y);
    let rtnorm = r0norm;
    let mut mon = Monitor::new(cfg, r0norm, r0norm);
    let mut rnrm = r0norm;
    let mut mxnrmx = r0norm;
    let mut mxnrmr = r0norm;

    let mut rho0 = one;
    let mut alpha = zero;
    let mut omega = one;

    let mut tau = vec![vec![zero; l + 1]; l + 1];
    let mut sigma = vec![T::zero(); l + 1];
    let mut gamma = vec![zero; l + 1];
    let mut gamma_p = vec![zero; l + 1];
    let mut gamma_pp = vec![zero; l + 1];

    let mut status = SolverStatus::MaxIterations;
    let mut detail: Option<String> = None;
    let mut done = 0;

    'outer: for k in 1..=cfg.maxit {
        done = k;

        // --- BiCG part: ℓ half-sweeps against the shadow residual. ---
        rho0 = -omega * rho0;
        for j in 0..l {
            let rho1 = dotc(&rt, &rs[j]);
            if let Some(msg) = divisor_failure("rho", rho0, rtnorm * rnrm) {
                // A collapsed pairing with an already-converged residual is
                // lucky termination, not failure.
                let settled = norm2(&rs[0]);
                if mon.passes(settled) {
                    mon.record(k, settled);
                    status = SolverStatus::Converged;
                } else {
                    status = SolverStatus::Breakdown;
                    detail = Some(msg);
                }
                break 'outer;
            }
            let beta = alpha * (rho1 / rho0);
            rho0 = rho1;
            for i in 0..=j {
                for (ui, ri) in us[i].iter_mut().zip(&rs[i]) {
                    *ui = *ri - beta * *ui;
                }
            }
            {
                let (head, tail) = us.split_at_mut(j + 1);
                b.apply(&head[j], &mut tail[0]);
            }
            let sig = dotc(&rt, &us[j + 1]);
            if let Some(msg) = divisor_failure("sigma", sig, rtnorm * norm2(&us[j + 1])) {
                let settled = norm2(&rs[0]);
                if mon.passes(settled) {
                    mon.record(k, settled);
                    status = SolverStatus::Converged;
                } else {
                    status = SolverStatus::Breakdown;
                    detail = Some(msg);
                }
                break 'outer;
            }
            alpha = rho0 / sig;
            for i in 0..=j {
                axpy(-alpha, &us[i + 1], &mut rs[i]);
            }
            {
                let (head, tail) = rs.split_at_mut(j + 1);
                b.apply(&head[j], &mut tail[0]);
            }
            axpy(alpha, &us[0], &mut xw);
        }

        // --- MR part: orthogonalize rs[1..=l] and minimize over them. ---
        for i in 1..=l {
            for j in 1..i {
                let (head, tail) = rs.split_at_mut(i);
                let t = dotc(&head[j], &tail[0]) / Complex::new(sigma[j], T::zero());
                tau[j][i] = t;
                axpy(-t, &head[j], &mut tail[0]);
            }
            let s = norm2(&rs[i]);
            sigma[i] = s * s;
            if let Some(msg) = divisor_failure(
                "sigma_j",
                Complex::new(sigma[i], T::zero()),
                rnrm * rnrm,
            ) {
                let settled = norm2(&rs[0]);
                if mon.passes(settled) {
                    mon.record(k, settled);
                    status = SolverStatus::Converged;
                } else {
                    status = SolverStatus::Breakdown;
                    detail = Some(msg);
                }
                break 'outer;
            }
            gamma_p[i] = dotc(&rs[i], &rs[0]) / Complex::new(sigma[i], T::zero());
        }

        gamma[l] = gamma_p[l];
        omega = gamma[l];
        for j in (1..l).rev() {
            let mut acc = gamma_p[j];
            for i in j + 1..=l {
                acc -= tau[j][i] * gamma[i];
            }
            gamma[j] = acc;
        }
        for j in 1..l {
            let mut acc = gamma[j + 1];
            for i in j + 1..l {
                acc += tau[j][i] * gamma[i + 1];
            }
            gamma_pp[j] = acc;
        }

        // --- Apply the polynomial update to x, r and u. ---
        axpy(gamma[1], &rs[0], &mut xw);
        for j in 1..l {
            axpy(gamma_pp[j], &rs[j], &mut xw);
        }
        {
            let (head, tail) = rs.split_at_mut(1);
            axpy(-gamma_p[l], &tail[l - 1], &mut head[0]);
            for j in 1..l {
                axpy(-gamma_p[j], &tail[j - 1], &mut head[0]);
            }
        }
        {
            let (head, tail) = us.split_at_mut(1);
            axpy(-gamma[l], &tail[l - 1], &mut head[0]);
            for j in 1..l {
                axpy(-gamma[j], &tail[j - 1], &mut head[0]);
            }
        }

        // --- Reliable update of the recursive residual and the iterate. ---
        rnrm = norm2(&rs[0]);
        mxnrmx = if rnrm > mxnrmx { rnrm } else { mxnrmx };
        mxnrmr = if rnrm > mxnrmr { rnrm } else { mxnrmr };
        let compute_res = rnrm < delta * mxnrmr;
        let update_app = rnrm < delta * mxnrmx;
        if compute_res {
            let mut t = zeros(n);
            b.apply(&xw, &mut t);
            for ((r0i, bi), ti) in rs[0].iter_mut().zip(&bw).zip(&t) {
                *r0i = bi - ti;
            }
            rnrm = norm2(&rs[0]);
            mxnrmr = rnrm;
            if update_app {
                for (si, wi) in xs.iter_mut().zip(xw.iter_mut()) {
                    *si += *wi;
                    *wi = zero;
                }
                bw.copy_from_slice(&rs[0]);
                mxnrmx = rnrm;
            }
        }

        match mon.observe(k, rnrm) {
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
    }

    for (si, wi) in xs.iter_mut().zip(&xw) {
        *si += *wi;
    }
    let x = precond_vec(m, &xs);
    finalize(x, a, y, cfg, mon.history, status, done, detail)
}
