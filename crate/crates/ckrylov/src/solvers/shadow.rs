//! Methods that drive a shadow sequence with Hermitian products: BiCG, QMR,
//! BiCOR and CORS.
//!
//! The classical two-sided methods are usually written with `A^T`; here the
//! shadow vectors are stored conjugated so every transpose product becomes a
//! Hermitian product `A^H v` and every transposed inner product becomes the
//! standard one. The two forms produce identical iterates; this one only
//! asks operators for `apply_hermitian`, which composes cleanly with
//! preconditioner adjoints.

use num_complex::Complex;

use crate::control::{divisor_failure, finalize, SolverConfig, SolverOutcome, SolverStatus};
use crate::numerics::{axpy, dotc_kernel, norm2, xpay, zeros, Real};
use crate::operator::LinearOperator;
use crate::precond::{LeftPreconditioned, Preconditioner};

use super::{apply_new, precond_vec, Monitor, Step, NON_FINITE_RESIDUAL};

/// `A^H v` into a fresh vector.
fn apply_herm_new<T: Real>(a: &dyn LinearOperator<T>, v: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut w = zeros(a.dim());
    a.apply_hermitian(v, &mut w);
    w
}

/// BiCG with left preconditioning, the base two-sided recurrence. One
/// product and one Hermitian product per iteration; the monitored residual
/// is the true one.
pub(super) fn bicg<T: Real>(
    a: &dyn LinearOperator<T>,
    y: &[Complex<T>],
    m: &dyn Preconditioner<T>,
    cfg: &SolverConfig<T>,
) -> SolverOutcome<T> {
    let n = a.dim();
    let mut x = zeros(n);
    let mut r = y.to_vec();
    let mut rt = r.clone();
    let ynorm = norm2(y);
    let mut mon = Monitor::new(cfg, ynorm, ynorm);

    let mut status = SolverStatus::MaxIterations;
    let mut detail: Option<String> = None;
    let mut done = 0;

    let mut rho_prev = Complex::new(T::zero(), T::zero());
    let mut z = zeros(n);
    let mut zt = zeros(n);
    let mut p = zeros(n);
    let mut pt = zeros(n);
    let mut q = zeros(n);
    let mut qt = zeros(n);

    for k in 1..=cfg.maxit {
        done = k;
        m.apply(&r, &mut z);
        m.apply_hermitian(&rt, &mut zt);
        let rho = dotc_kernel(&rt, &z);
        if let Some(msg) = divisor_failure("rho", rho, norm2(&rt) * norm2(&z)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        if k == 1 {
            p.copy_from_slice(&z);
            pt.copy_from_slice(&zt);
        } else {
            let beta = rho / rho_prev;
            xpay(&z, beta, &mut p);
            xpay(&zt, beta.conj(), &mut pt);
        }
        a.apply(&p, &mut q);
        a.apply_hermitian(&pt, &mut qt);
        let sigma = dotc_kernel(&pt, &q);
        if let Some(msg) = divisor_failure("sigma", sigma, norm2(&pt) * norm2(&q)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        let alpha = rho / sigma;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        axpy(-alpha.conj(), &qt, &mut rt);

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

/// QMR in the coupled two-term form without look-ahead, left-preconditioned.
/// Smooths the BiCG residual by quasi-minimization; one product and one
/// Hermitian product per iteration. Each of the seven recurrence scalars is
/// guarded and named on breakdown.
pub(super) fn qmr<T: Real>(
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

    let czero = Complex::new(T::zero(), T::zero());

    // v-sequence (Krylov space of A), and the conjugated w-sequence
    // (Krylov space of A^H in this storage).
    let mut vt = r.clone();
    let mut yv = precond_vec(m, &vt);
    let mut rho = norm2(&yv);
    let mut wt: Vec<Complex<T>> = r.iter().map(|z| z.conj()).collect();
    let mut xi = norm2(&wt);
    let mut v = zeros(n);
    let mut w = zeros(n);
    let mut zs = zeros(n);
    let mut p = zeros(n);
    let mut q = zeros(n);
    let mut d = zeros(n);
    let mut s = zeros(n);
    let mut zt = zeros(n);

    let mut gamma = T::one();
    let mut eta = Complex::new(-T::one(), T::zero());
    let mut theta = T::zero();
    let mut eps = czero;

    for k in 1..=cfg.maxit {
        done = k;
        if let Some(msg) = divisor_failure("rho", Complex::new(rho, T::zero()), norm2(&vt)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        if let Some(msg) = divisor_failure("xi", Complex::new(xi, T::zero()), norm2(&wt)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        let rho_c = Complex::new(rho, T::zero());
        let xi_c = Complex::new(xi, T::zero());
        for i in 0..n {
            v[i] = vt[i] / rho_c;
            yv[i] = yv[i] / rho_c;
            w[i] = wt[i] / xi_c;
            zs[i] = wt[i] / xi_c;
        }
        let delta = dotc_kernel(&zs, &yv);
        if let Some(msg) = divisor_failure("delta", delta, norm2(&zs) * norm2(&yv)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        m.apply_hermitian(&zs, &mut zt);
        if k == 1 {
            p.copy_from_slice(&yv);
            q.copy_from_slice(&zt);
        } else {
            // p = y - (xi delta / eps) p;  q = z - (rho delta / eps) q,
            // with the q coefficient conjugated for the stored form.
            let cp = -(xi_c * delta / eps);
            let cq = -((rho_c * delta / eps).conj());
            xpay(&yv, cp, &mut p);
            xpay(&zt, cq, &mut q);
        }
        let pt = apply_new(a, &p);
        eps = dotc_kernel(&q, &pt);
        if let Some(msg) = divisor_failure("epsilon", eps, norm2(&q) * norm2(&pt)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        let beta = eps / delta;
        if let Some(msg) = divisor_failure("beta", beta, T::one()) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        // v~ = A p - beta v, then its preconditioned image.
        vt.copy_from_slice(&pt);
        axpy(-beta, &v, &mut vt);
        m.apply(&vt, &mut yv);
        let rho_next = norm2(&yv);
        // w~ = A^H q - conj(beta) w in the conjugated storage.
        let aq = apply_herm_new(a, &q);
        wt.copy_from_slice(&aq);
        axpy(-beta.conj(), &w, &mut wt);
        let xi_next = norm2(&wt);

        let theta_next = rho_next / (gamma * beta.norm());
        let gamma_next = T::one() / (T::one() + theta_next * theta_next).sqrt();
        if let Some(msg) =
            divisor_failure("gamma", Complex::new(gamma_next, T::zero()), T::one())
        {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        let eta_next = -eta * rho_c * Complex::new(gamma_next * gamma_next, T::zero())
            / (beta * Complex::new(gamma * gamma, T::zero()));
        if k == 1 {
            for i in 0..n {
                d[i] = eta_next * p[i];
                s[i] = eta_next * pt[i];
            }
        } else {
            let cd = Complex::new((theta * gamma_next) * (theta * gamma_next), T::zero());
            for i in 0..n {
                d[i] = eta_next * p[i] + cd * d[i];
                s[i] = eta_next * pt[i] + cd * s[i];
            }
        }
        for i in 0..n {
            x[i] += d[i];
            r[i] -= s[i];
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
        rho = rho_next;
        xi = xi_next;
        gamma = gamma_next;
        eta = eta_next;
        theta = theta_next;
    }
    finalize(x, a, y, cfg, mon.history, status, done, detail)
}

/// BiCOR: the two-sided recurrence biorthogonalized under the `<u, A v>`
/// pairing, with the shadow seeded by the conjugate of the initial residual.
/// One product and one Hermitian product per iteration. On complex-symmetric
/// systems its iterates coincide with COCR's.
///
/// With a preconditioner the iteration runs on `M^{-1} A x = M^{-1} y`.
pub(super) fn bicor<T: Real>(
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
    let mut r = c_rhs.clone();
    let mut rh: Vec<Complex<T>> = r.iter().map(|z| z.conj()).collect();

    let mut status = SolverStatus::MaxIterations;
    let mut detail: Option<String> = None;
    let mut done = 0;

    let mut rho_prev = Complex::new(T::zero(), T::zero());
    let mut p = zeros(n);
    let mut ph = zeros(n);
    let mut q = zeros(n);
    let mut z = zeros(n);

    for k in 1..=cfg.maxit {
        done = k;
        b.apply(&r, &mut z);
        let rho = dotc_kernel(&rh, &z);
        if let Some(msg) = divisor_failure("rho", rho, norm2(&rh) * norm2(&z)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        if k == 1 {
            p.copy_from_slice(&r);
            q.copy_from_slice(&z);
            ph.copy_from_slice(&rh);
        } else {
            let beta = rho / rho_prev;
            xpay(&r, beta, &mut p);
            // A p tracks p by the same recurrence: A p = A r + beta (A p).
            xpay(&z, beta, &mut q);
            xpay(&rh, beta.conj(), &mut ph);
        }
        let qh = apply_herm_new(&b, &ph);
        let sigma = dotc_kernel(&qh, &q);
        if let Some(msg) = divisor_failure("sigma", sigma, norm2(&qh) * norm2(&q)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        let alpha = rho / sigma;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        axpy(-alpha.conj(), &qh, &mut rh);

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

/// CORS: the Sonneveld squaring of BiCOR. The shadow sequence collapses to
/// one fixed vector `A^H conj(r_0)` computed up front; after that the loop
/// is transpose-free with two products per iteration.
///
/// With a preconditioner the iteration runs on `M^{-1} A x = M^{-1} y`.
pub(super) fn cors<T: Real>(
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
    let mut r = c_rhs.clone();
    // The fixed shadow: hh = B^H conj(r_0).
    let r0c: Vec<Complex<T>> = r.iter().map(|z| z.conj()).collect();
    let hh = apply_herm_new(&b, &r0c);
    let hhnorm = norm2(&hh);

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
        let rho = dotc_kernel(&hh, &r);
        if let Some(msg) = divisor_failure("rho", rho, hhnorm * norm2(&r)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        if k == 1 {
            u.copy_from_slice(&r);
            p.copy_from_slice(&r);
        } else {
            let beta = rho / rho_prev;
            u.copy_from_slice(&r);
            axpy(beta, &q, &mut u);
            xpay(&q, beta, &mut p);
            xpay(&u, beta, &mut p);
        }
        let v = apply_new(&b, &p);
        let sigma = dotc_kernel(&hh, &v);
        if let Some(msg) = divisor_failure("sigma", sigma, hhnorm * norm2(&v)) {
            status = SolverStatus::Breakdown;
            detail = Some(msg);
            break;
        }
        let alpha = rho / sigma;
        q.copy_from_slice(&u);
        axpy(-alpha, &v, &mut q);
        for ((t, ui), qi) in uq.iter_mut().zip(&u).zip(&q) {
            *t = *ui + *qi;
        }
        axpy(alpha, &uq, &mut x);
        let w = apply_new(&b, &uq);
        axpy(-alpha, &w, &mut r);

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
        let cfg = SolverConfig::with_tolerance(tol, 50 * n);
        let out = solve(method, SystemRef::Dense(&a), &y, None, &cfg);
        assert_eq!(out.status, SolverStatus::Converged, "{method}: {:?}", out.breakdown_detail);
        let exact = oracle::dense_solve(&a, &y).unwrap();
        let num: f64 = out.x.iter().zip(&exact).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = norm2(&exact);
        assert!(num / den < rel_err, "{method}: relative error {:e}", num / den);
    }

    #[test]
    fn bicg_matches_direct_solver() {
        check_against_direct(MethodId::BiCg, 12, 31, 1e-10, 1e-7);
        check_against_direct(MethodId::BiCg, 24, 32, 1e-10, 1e-7);
    }

    #[test]
    fn qmr_matches_direct_solver() {
        check_against_direct(MethodId::Qmr, 12, 33, 1e-10, 1e-7);
        check_against_direct(MethodId::Qmr, 24, 34, 1e-10, 1e-7);
    }

    #[test]
    fn bicor_matches_direct_solver() {
        check_against_direct(MethodId::BiCor, 12, 35, 1e-10, 1e-7);
    }

    #[test]
    fn cors_matches_direct_solver() {
        check_against_direct(MethodId::Cors, 12, 36, 1e-10, 1e-7);
    }

    #[test]
    fn bicg_recovers_a_diagonal_system_quickly() {
        let a = DenseMatrix::from_diagonal(&[c(2.0, 0.0), c(0.0, 3.0), c(1.0, -1.0)]);
        let y = vec![c(2.0, 0.0), c(3.0, 3.0), c(0.0, 2.0)];
        let out = solve(MethodId::BiCg, SystemRef::Dense(&a), &y, None, &SolverConfig::default());
        assert_eq!(out.status, SolverStatus::Converged);
        // Three distinct eigenvalues: at most three iterations.
        assert!(out.iterations <= 3, "iterations = {}", out.iterations);
        let exact = oracle::dense_solve(&a, &y).unwrap();
        for (xi, ei) in out.x.iter().zip(&exact) {
            assert!((xi - ei).norm() < 1e-9);
        }
    }

    #[test]
    fn qmr_residual_history_is_smoother_than_bicg_peaks() {
        // Not a general theorem, but on a mild random system the QMR
        // history should never spike above its starting residual by the
        // margins BiCG allows; this guards the quasi-minimization chain.
        let a = gallery::random_general::<f64>(20, 0.35 / (20f64).sqrt(), 40);
        let y = gallery::random_rhs::<f64>(20, 41);
        let cfg = SolverConfig::with_tolerance(1e-9, 400);
        let out = solve(MethodId::Qmr, SystemRef::Dense(&a), &y, None, &cfg);
        assert_eq!(out.status, SolverStatus::Converged);
        let r0 = out.history[0].1;
        for (_, rn) in &out.history {
            assert!(*rn <= 10.0 * r0, "QMR residual spiked to {rn:e} from {r0:e}");
        }
    }

    #[test]
    fn bicor_iterates_match_cocr_on_a_symmetric_system() {
        // On A = A^T with the conjugate-seeded shadow, BiCOR's recurrence
        // collapses onto COCR's; histories should agree to rounding.
        let a = gallery::random_complex_symmetric::<f64>(14, 0.3, 4.0, 42);
        let y = gallery::random_rhs::<f64>(14, 43);
        let cfg = SolverConfig::with_tolerance(1e-9, 300);
        let bicor_out = solve(MethodId::BiCor, SystemRef::Dense(&a), &y, None, &cfg);
        let cocr_out = solve(MethodId::Cocr, SystemRef::Dense(&a), &y, None, &cfg);
        assert_eq!(bicor_out.status, SolverStatus::Converged);
        assert_eq!(cocr_out.status, SolverStatus::Converged);
        assert_eq!(bicor_out.iterations, cocr_out.iterations);
        for ((k1, r1), (k2, r2)) in bicor_out.history.iter().zip(&cocr_out.history) {
            assert_eq!(k1, k2);
            let scale = r1.max(*r2).max(1e-300);
            assert!((r1 - r2).abs() / scale < 1e-6, "histories diverge: {r1:e} vs {r2:e}");
        }
    }

    #[test]
    fn shadow_methods_use_hermitian_products_only() {
        // An operator that panics on apply_transpose proves the loops only
        // ever call apply / apply_hermitian.
        struct HermOnly(DenseMatrix<f64>);
        impl LinearOperator<f64> for HermOnly {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn apply(&self, x: &[C], y: &mut [C]) {
                self.0.apply(x, y);
            }
            fn supports_hermitian(&self) -> bool {
                true
            }
            fn apply_hermitian(&self, x: &[C], y: &mut [C]) {
                self.0.apply_hermitian(x, y);
            }
            fn supports_transpose(&self) -> bool {
                false
            }
            fn apply_transpose(&self, _: &[C], _: &mut [C]) {
                panic!("transpose product must not be used");
            }
        }
        let a = HermOnly(gallery::random_general::<f64>(10, 0.2, 50));
        let y = gallery::random_rhs::<f64>(10, 51);
        for method in [MethodId::BiCg, MethodId::Qmr, MethodId::BiCor, MethodId::Cors] {
            let out = solve(method, SystemRef::Op(&a), &y, None, &SolverConfig::default());
            assert_eq!(out.status, SolverStatus::Converged, "{method}");
        }
    }
}
