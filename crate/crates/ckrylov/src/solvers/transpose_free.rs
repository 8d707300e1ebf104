//! Transpose-free product methods: CGS, BiCGSTAB, TFQMR and GPBiCG.
//!
//! All four avoid `A^H` entirely by working with products of the BiCG
//! residual polynomial: CGS squares it, BiCGSTAB and GPBiCG multiply it by
//! locally chosen stabilizing factors, TFQMR smooths the CGS iterates with
//! quasi-minimization.

use num_complex::Complex;

use crate::control::{divisor_failure, finalize, SolverConfig, SolverOutcome, SolverStatus};
use crate::numerics::{axpy, dotc_kernel, norm2, xpay, zeros, Real};
use crate::operator::LinearOperator;
use crate::precond::{LeftPreconditioned, Preconditioner};

use super::{apply_new, precond_vec, Monitor, Step, NON_FINITE_RESIDUAL};

/// Conjugate Gradient Squared with left preconditioning. Two products per
/// iteration; convergence is often fast but the squared polynomial makes the
/// residual history erratic.
pub(super) fn cgs<T: Real>(
    a: &dyn LinearOperator<T>,
    y: &[Complex<T>],
    m: &dyn Preconditioner<T>,
    cfg: &SolverConfig<T>,
) -> SolverOutcome<T> {
    let n = a.dim();
    let mut x = zeros(n);
    let mut r = y.to_vec();
    let rt = r.clone();
    let rtnorm = norm2(&rt);
    let ynorm = norm2(y);
    let mut mon = Monitor::new(cfg, ynorm, ynorm);

    let mut status = SolverStatus::MaxIterations;
    let mut detail: Option<String> = None;
    let mut done = 0;

    let mut rho_prev = Complex::new(T::zero(), T::zero());
    let mut u = zeros(n);
    let mut p = zeros(n);
    let mut q = zeros(n);
    let mut uq = zeros(n);

    for k in 1..=cfg.maxit {
        done = k;
        let rho = dotc_kernel(&rt, &r);
        if let Some(msg) = divisor_failure("rho", rho, rtnorm * norm2(&r)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        if k == 1 {
            u.copy_from_slice(&r);
            p.copy_from_slice(&r);
        } else {
            let beta = rho / rho_prev;
            // u = r + beta q
            u.copy_from_slice(&r);
            axpy(beta, &q, &mut u);
            // p = u + beta (q + beta p)
            xpay(&q, beta, &mut p);
            xpay(&u, beta, &mut p);
        }
        let phat = precond_vec(m, &p);
        let v = apply_new(a, &phat);
        let sigma = dotc_kernel(&rt, &v);
        if let Some(msg) = divisor_failure("sigma", sigma, rtnorm * norm2(&v)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        let alpha = rho / sigma;
        // q = u - alpha v
        q.copy_from_slice(&u);
        axpy(-alpha, &v, &mut q);
        // x += alpha * M^{-1}(u + q);  r -= alpha * A M^{-1}(u + q)
        for ((t, ui), qi) in uq.iter_mut().zip(&u).zip(&q) {
            *t = *ui + *qi;
        }
        let uhat = precond_vec(m, &uq);
        axpy(alpha, &uhat, &mut x);
        let qhat = apply_new(a, &uhat);
        axpy(-alpha, &qhat, &mut r);

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

/// BiCGSTAB with right preconditioning. Two products per iteration, with an
/// intermediate residual test that can finish an iteration after one.
pub(super) fn bicgstab<T: Real>(
    a: &dyn LinearOperator<T>,
    y: &[Complex<T>],
    m: &dyn Preconditioner<T>,
    cfg: &SolverConfig<T>,
) -> SolverOutcome<T> {
    let n = a.dim();
    let mut x = zeros(n);
    let mut r = y.to_vec();
    let rt = r.clone();
    let rtnorm = norm2(&rt);
    let ynorm = norm2(y);
    let mut mon = Monitor::new(cfg, ynorm, ynorm);

    let mut status = SolverStatus::MaxIterations;
    let mut detail: Option<String> = None;
    let mut done = 0;

    let mut rho_prev = Complex::new(T::zero(), T::zero());
    let mut alpha = Complex::new(T::zero(), T::zero());
    let mut omega = Complex::new(T::zero(), T::zero());
    let mut p = zeros(n);
    let mut v = zeros(n);
    let mut s = zeros(n);

    for k in 1..=cfg.maxit {
        done = k;
        let rho = dotc_kernel(&rt, &r);
        if let Some(msg) = divisor_failure("rho", rho, rtnorm * norm2(&r)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        if k == 1 {
            p.copy_from_slice(&r);
        } else {
            if let Some(msg) = divisor_failure("omega", omega, T::one()) {
                status = SolverStatus::Breakdown;
                detail = Some(msg);
                break;
            }
            let beta = (rho / rho_prev) * (alpha / omega);
            // p = r + beta (p - omega v)
            axpy(-omega, &v, &mut p);
            xpay(&r, beta, &mut p);
        }
        let phat = precond_vec(m, &p);
        a.apply(&phat, &mut v);
        let sigma = dotc_kernel(&rt, &v);
        if let Some(msg) = divisor_failure("sigma", sigma, rtnorm * norm2(&v)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        alpha = rho / sigma;
        // s = r - alpha v
        s.copy_from_slice(&r);
        axpy(-alpha, &v, &mut s);
        let snorm = norm2(&s);
        if mon.passes(snorm) {
            // Half-finished iteration already satisfies the target.
            axpy(alpha, &phat, &mut x);
            mon.record(k, snorm);
            status = SolverStatus::Converged;
            break;
        }
        let shat = precond_vec(m, &s);
        let t = apply_new(a, &shat);
        let tt = dotc_kernel(&t, &t);
        if let Some(msg) = divisor_failure("t^H t", tt, norm2(&t) * snorm) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        omega = dotc_kernel(&t, &s) / tt;
        // x += alpha phat + omega shat;  r = s - omega t
        axpy(alpha, &phat, &mut x);
        axpy(omega, &shat, &mut x);
        r.copy_from_slice(&s);
        axpy(-omega, &t, &mut r);

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

/// Transpose-free QMR. Each iteration is a pair of half-steps costing two
/// products in total (one when the first half-step already meets the
/// target). The monitored quantity is the quasi-residual bound
/// `tau * sqrt(m + 1)` over half-steps `m`, not the true residual norm, so
/// the exit verification matters especially here.
///
/// With a preconditioner the iteration runs on `M^{-1} A x = M^{-1} y` and
/// the stopping test measures the preconditioned residual.
pub(super) fn tfqmr<T: Real>(
    a: &dyn LinearOperator<T>,
    y: &[Complex<T>],
    m: &dyn Preconditioner<T>,
    cfg: &SolverConfig<T>,
) -> SolverOutcome<T> {
    let n = a.dim();
    let b = LeftPreconditioned::new(a, m);
    let c_rhs = precond_vec(m, y);
    let r0norm = norm2(&c_rhs);
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
    let rt = c_rhs.clone();
    let rtnorm = r0norm;
    let mut w = c_rhs.clone();
    let mut yv = c_rhs.clone();
    let mut v = apply_new(&b, &yv);
    let mut u = v.clone();
    let mut d = zeros(n);

    let mut theta = T::zero();
    let mut eta = Complex::new(T::zero(), T::zero());
    let mut tau = r0norm;
    let mut rho = Complex::new(tau * tau, T::zero());

    let mut status = SolverStatus::MaxIterations;
    let mut detail: Option<String> = None;
    let mut done = 0;
    let mut half_steps = 0usize;

    'outer: for k in 1..=cfg.maxit {
        done = k;
        let sigma = dotc_kernel(&rt, &v);
        if let Some(msg) = divisor_failure("sigma", sigma, rtnorm * norm2(&v)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        let alpha = rho / sigma;
        if let Some(msg) = divisor_failure("alpha", alpha, T::one()) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        for j in 0..2 {
            if j == 1 {
                // Second half-step: advance the direction and its image.
                axpy(-alpha, &v, &mut yv);
                u = apply_new(&b, &yv);
            }
            axpy(-alpha, &u, &mut w);
            let coef = eta * Complex::new(theta * theta, T::zero()) / alpha;
            xpay(&yv, coef, &mut d);
            theta = norm2(&w) / tau;
            let cs = T::one() / (T::one() + theta * theta).sqrt();
            tau = tau * theta * cs;
            eta = alpha * Complex::new(cs * cs, T::zero());
            axpy(eta, &d, &mut x);
            half_steps += 1;
            let bound = tau * (T::of(half_steps as f64) + T::one()).sqrt();
            if !bound.is_finite() {
                mon.record(k, bound);
                status = SolverStatus::Breakdown;
                detail = Some(NON_FINITE_RESIDUAL.into());
                break 'outer;
            }
            if mon.passes(bound) {
                mon.record(k, bound);
                status = SolverStatus::Converged;
                break 'outer;
            }
            if j == 1 {
                mon.record(k, bound);
            }
        }
        let rho_new = dotc_kernel(&rt, &w);
        if let Some(msg) = divisor_failure("rho", rho_new, rtnorm * norm2(&w)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        let beta = rho_new / rho;
        // y1 = w + beta y2;  v = A y1 + beta (A y2 + beta v)
        xpay(&w, beta, &mut yv);
        let u_next = apply_new(&b, &yv);
        xpay(&u, beta, &mut v);
        xpay(&u_next, beta, &mut v);
        u = u_next;
        rho = rho_new;
    }
    finalize(x, a, y, cfg, mon.history, status, done, detail)
}

/// GPBiCG with a cyclic hybrid schedule and right preconditioning: each
/// period runs `gp_m` BiCGSTAB-type steps (stabilizer `zeta` from a 1-D
/// residual minimization, `eta = 0`) followed by `gp_n` GPBiCG-type steps
/// (`zeta`, `eta` from the 2-D minimization over the last two correction
/// directions). Step 0 is always BiCGSTAB-type because no second direction
/// exists yet. Two products per iteration.
pub(super) fn gpbicg<T: Real>(
    a: &dyn LinearOperator<T>,
    y: &[Complex<T>],
    m: &dyn Preconditioner<T>,
    cfg: &SolverConfig<T>,
) -> SolverOutcome<T> {
    let n = a.dim();
    let b = crate::precond::RightPreconditioned::new(a, m);
    let mut xt = zeros(n);
    let mut r = y.to_vec();
    let rt = r.clone();
    let rtnorm = norm2(&rt);
    let ynorm = norm2(y);
    let mut mon = Monitor::new(cfg, ynorm, ynorm);

    let mut status = SolverStatus::MaxIterations;
    let mut detail: Option<String> = None;
    let mut done = 0;

    let zero = Complex::new(T::zero(), T::zero());
    let mut p = zeros(n);
    let mut u = zeros(n);
    let mut z = zeros(n);
    let mut t = zeros(n);
    let mut t_prev = zeros(n);
    let mut q = zeros(n);
    let mut q_prev = zeros(n);
    let mut s = zeros(n);
    let mut s_prev = zeros(n);
    let mut w = zeros(n);
    let mut yv = zeros(n);

    let mut rho_prev = zero;
    let mut alpha = zero;
    let mut zeta = zero;
    let period = cfg.gp_m + cfg.gp_n;

    for k in 1..=cfg.maxit {
        done = k;
        let step = k - 1;
        let rho = dotc_kernel(&rt, &r);
        if let Some(msg) = divisor_failure("rho", rho, rtnorm * norm2(&r)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        let beta = if step == 0 {
            p.copy_from_slice(&r);
            // t_prev, w, u, z all start at zero.
            zero
        } else {
            if let Some(msg) = divisor_failure("zeta", zeta, T::one()) {
                status = SolverStatus::Breakdown;
                detail = Some(msg);
                break;
            }
            let beta = (alpha / zeta) * (rho / rho_prev);
            // w = A t_prev + beta A p_prev, from the saved images.
            for ((wi, si), qi) in w.iter_mut().zip(&s_prev).zip(&q_prev) {
                *wi = *si + beta * *qi;
            }
            // p = r + beta (p - u)
            for ((pi, ri), ui) in p.iter_mut().zip(&r).zip(&u) {
                *pi = *ri + beta * (*pi - *ui);
            }
            beta
        };
        b.apply(&p, &mut q);
        let sigma = dotc_kernel(&rt, &q);
        if let Some(msg) = divisor_failure("sigma", sigma, rtnorm * norm2(&q)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        alpha = rho / sigma;
        // yv = t_prev - r - alpha w + alpha q
        for i in 0..n {
            yv[i] = t_prev[i] - r[i] + alpha * (q[i] - w[i]);
        }
        // t = r - alpha q
        for i in 0..n {
            t[i] = r[i] - alpha * q[i];
        }
        b.apply(&t, &mut s);

        let stab_like = step == 0 || (step % period) < cfg.gp_m;
        let eta;
        if stab_like {
            let ss = dotc_kernel(&s, &s);
            if let Some(msg) = divisor_failure("zeta denominator", ss, norm2(&s) * norm2(&t)) {
                // When the half-step residual t is already below the target,
                // the collapsed stabilizer is lucky termination: finish the
                // update with zeta = eta = 0 instead of failing.
                let tnorm = norm2(&t);
                if mon.passes(tnorm) {
                    for i in 0..n {
                        xt[i] += alpha * p[i];
                    }
                    mon.record(k, tnorm);
                    status = SolverStatus::Converged;
                } else {
                    status = SolverStatus::Breakdown;
                    detail = Some(msg);
                }
                break;
            }
            zeta = dotc_kernel(&s, &t) / ss;
            eta = zero;
        } else {
            let ss = dotc_kernel(&s, &s);
            let yy = dotc_kernel(&yv, &yv);
            let sy = dotc_kernel(&s, &yv);
            let ys = dotc_kernel(&yv, &s);
            let st = dotc_kernel(&s, &t);
            let yt = dotc_kernel(&yv, &t);
            let delta = ss * yy - sy * ys;
            if let Some(msg) = divisor_failure("delta", delta, ss.norm() * yy.norm()) {
                let tnorm = norm2(&t);
                if mon.passes(tnorm) {
                    for i in 0..n {
                        xt[i] += alpha * p[i];
                    }
                    mon.record(k, tnorm);
                    status = SolverStatus::Converged;
                } else {
                    status = SolverStatus::Breakdown;
                    detail = Some(msg);
                }
                break;
            }
            zeta = (yy * st - yt * sy) / delta;
            eta = (ss * yt - ys * st) / delta;
        }
        // u = zeta q + eta (t_prev - r + beta u)
        for i in 0..n {
            u[i] = zeta * q[i] + eta * (t_prev[i] - r[i] + beta * u[i]);
        }
        // z = zeta r + eta z - alpha u
        for i in 0..n {
            z[i] = zeta * r[i] + eta * z[i] - alpha * u[i];
        }
        // x += alpha p + z;  r = t - eta yv - zeta s
        for i in 0..n {
            xt[i] += alpha * p[i] + z[i];
        }
        for i in 0..n {
            r[i] = t[i] - eta * yv[i] - zeta * s[i];
        }

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
        std::mem::swap(&mut t_prev, &mut t);
        std::mem::swap(&mut q_prev, &mut q);
        std::mem::swap(&mut s_prev, &mut s);
    }
    let x = precond_vec(m, &xt);
    finalize(x, a, y, cfg, mon.history, status, done, detail)
}
