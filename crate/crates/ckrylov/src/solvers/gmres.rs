//! Restarted GMRES with right preconditioning.
//!
//! Each cycle builds an Arnoldi basis of the Krylov space of `A M^{-1}` by
//! modified Gram-Schmidt and reduces the Hessenberg matrix on the fly with
//! Givens rotations, so the least-squares residual norm is available at
//! every step without forming the iterate. The iterate is reconstructed
//! once per cycle by a triangular solve. Right preconditioning keeps the
//! monitored quantity equal to the true residual norm of the original
//! system (in exact arithmetic), and the estimate is non-increasing within
//! a cycle.
//!
//! The iteration budget counts inner (Arnoldi) steps across all cycles;
//! each restart after the first costs one extra operator product to form
//! the fresh residual.

use num_complex::Complex;

use crate::control::{divisor_failure, finalize, SolverConfig, SolverOutcome, SolverStatus};
use crate::numerics::{axpy, dotc_kernel as dotc, norm2, zeros, Real};
use crate::operator::LinearOperator;
use crate::precond::{Preconditioner, RightPreconditioned};

use super::{apply_new, givens, precond_vec, Monitor, Step, NON_FINITE_RESIDUAL};

/// Back-substitution for the reduced upper-triangular system. `hcols[j]`
/// holds column `j` of R in its leading entries; `scale` calibrates the
/// pivot guard.
fn solve_reduced<T: Real>(
    hcols: &[Vec<Complex<T>>],
    g: &[Complex<T>],
    k: usize,
    scale: T,
) -> Result<Vec<Complex<T>>, String> {
    let mut yv = vec![Complex::new(T::zero(), T::zero()); k];
    for i in (0..k).rev() {
        let mut sum = g[i];
        for (l, yl) in yv.iter().enumerate().skip(i + 1) {
            sum -= hcols[l][i] * *yl;
        }
        if let Some(msg) = divisor_failure("h_ii", hcols[i][i], scale) {
            return Err(msg);
        }
        yv[i] = sum / hcols[i][i];
    }
    Ok(yv)
}

pub(super) fn gmres<T: Real>(
    a: &dyn LinearOperator<T>,
    y: &[Complex<T>],
    m: &dyn Preconditioner<T>,
    cfg: &SolverConfig<T>,
) -> SolverOutcome<T> {
    let n = a.dim();
    let b = RightPreconditioned::new(a, m);
    let ynorm = norm2(y);
    let mut mon = Monitor::new(cfg, ynorm, ynorm);
    let m_eff = cfg.restart_m.min(n).min(cfg.maxit);

    let mut xt = zeros(n); // iterate of the right-preconditioned system
    let mut k_total = 0usize;
    let mut status = SolverStatus::MaxIterations;
    let mut detail: Option<String> = None;
    let mut first_cycle = true;

    'outer: while k_total < cfg.maxit {
        // Fresh residual: free on the first cycle (x = 0), one product later.
        let r = if first_cycle {
            y.to_vec()
        } else {
            let mut w = apply_new(&b, &xt);
            for (wi, yi) in w.iter_mut().zip(y) {
                *wi = yi - *wi;
            }
            w
        };
        first_cycle = false;
        let beta = norm2(&r);
        if !beta.is_finite() {
            status = SolverStatus::Breakdown;
            detail = Some(NON_FINITE_RESIDUAL.into());
            break;
        }
        if mon.passes(beta) {
            status = SolverStatus::Converged;
            break;
        }

        let mut vs: Vec<Vec<Complex<T>>> = Vec::with_capacity(m_eff + 1);
        let mut v0 = r;
        let inv_beta = Complex::new(beta.recip(), T::zero());
        for vi in v0.iter_mut() {
            *vi = *vi * inv_beta;
        }
        vs.push(v0);

        let mut hcols: Vec<Vec<Complex<T>>> = Vec::with_capacity(m_eff);
        let mut cs: Vec<T> = Vec::with_capacity(m_eff);
        let mut sn: Vec<Complex<T>> = Vec::with_capacity(m_eff);
        let mut g = zeros(m_eff + 1);
        g[0] = Complex::new(beta, T::zero());
        let mut hscale = T::zero();

        let mut j = 0usize;
        let mut cycle_converged = false;
        let mut poisoned = false;

        while j < m_eff && k_total < cfg.maxit {
            let mut w = apply_new(&b, &vs[j]);
            let wnorm0 = norm2(&w);
            hscale = if wnorm0 > hscale { wnorm0 } else { hscale };

            let mut hcol = zeros(j + 2);
            for (i, vi) in vs.iter().enumerate() {
                let hij = dotc(vi, &w);
                hcol[i] = hij;
                axpy(-hij, vi, &mut w);
            }
            let hlast = norm2(&w);
            let happy = hlast <= T::epsilon() * wnorm0;

            for i in 0..j {
                let t = hcol[i] * cs[i] + sn[i] * hcol[i + 1];
                hcol[i + 1] = hcol[i + 1] * cs[i] - sn[i].conj() * hcol[i];
                hcol[i] = t;
            }
            let (c, s, rr) = givens(hcol[j], hlast);
            cs.push(c);
            sn.push(s);
            hcol[j] = rr;
            hcol[j + 1] = Complex::new(T::zero(), T::zero());
            hcols.push(hcol);

            let gj = g[j];
            g[j] = gj * c;
            g[j + 1] = -(s.conj() * gj);
            let est = g[j + 1].norm();

            k_total += 1;
            j += 1;

            if !happy {
                let inv_h = Complex::new(hlast.recip(), T::zero());
                for wi in w.iter_mut() {
                    *wi = *wi * inv_h;
                }
            }
            vs.push(w);

            match mon.observe(k_total, est) {
                Step::Converged => {
                    cycle_converged = true;
                    break;
                }
                Step::NonFinite => {
                    status = SolverStatus::Breakdown;
                    detail = Some(NON_FINITE_RESIDUAL.into());
                    poisoned = true;
                    break;
                }
                Step::Continue => {}
            }
            if happy {
                // The basis is exhausted: the least-squares solve over the
                // current space reproduces the solution exactly.
                cycle_converged = true;
                break;
            }
        }

        if !poisoned && j > 0 {
            match solve_reduced(&hcols, &g, j, hscale) {
                Ok(yv) => {
                    for (i, yi) in yv.iter().enumerate() {
                        axpy(*yi, &vs[i], &mut xt);
                    }
                }
                Err(msg) => {
                    status = SolverStatus::Breakdown;
                    detail = Some(msg);
                    break 'outer;
                }
            }
        }
        if cycle_converged {
            status = SolverStatus::Converged;
            break 'outer;
        }
        if poisoned {
            break 'outer;
        }
    }

    let x = precond_vec(m, &xt);
    finalize(x, a, y, cfg, mon.history, status, k_total, detail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::MethodId;
    use crate::gallery;
    use crate::operator::DenseMatrix;
    use crate::oracle;
    use crate::precond::Jacobi;
    use crate::solvers::{solve, SystemRef};

    type C = Complex<f64>;

    #[test]
    fn gmres_matches_direct_solver() {
        let n = 12;
        let a = gallery::random_general::<f64>(n, 0.5 / (n as f64).sqrt(), 81);
        let y = gallery::random_rhs::<f64>(n, 82);
        let cfg = SolverConfig::with_tolerance(1e-12, 100 * n);
        let out = solve(MethodId::Gmres, SystemRef::Dense(&a), &y, None, &cfg);
        assert_eq!(out.status, SolverStatus::Converged, "{:?}", out.breakdown_detail);
        let exact = oracle::dense_solve(&a, &y).unwrap();
        let num: f64 = out.x.iter().zip(&exact).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(num / norm2(&exact) < 1e-7, "relative error {:e}", num / norm2(&exact));
    }

    #[test]
    fn gmres_without_restart_terminates_in_at_most_n_steps() {
        let n = 8;
        let a = gallery::random_general::<f64>(n, 0.3, 83);
        let y = gallery::random_rhs::<f64>(n, 84);
        let mut cfg = SolverConfig::with_tolerance(1e-13, 10 * n);
        cfg.restart_m = n; // full GMRES
        let out = solve(MethodId::Gmres, SystemRef::Dense(&a), &y, None, &cfg);
        assert_eq!(out.status, SolverStatus::Converged);
        assert!(
            out.iterations <= n + 2,
            "full GMRES needed {} steps on an {n}-dimensional space",
            out.iterations
        );
    }

    #[test]
    fn gmres_restarted_cycles_are_internally_monotone() {
        let n = 20;
        let a = gallery::random_general::<f64>(n, 0.15, 85);
        let y = gallery::random_rhs::<f64>(n, 86);
        let mut cfg = SolverConfig::with_tolerance(1e-10, 400);
        cfg.restart_m = 5;
        let out = solve(MethodId::Gmres, SystemRef::Dense(&a), &y, None, &cfg);
        assert_eq!(out.status, SolverStatus::Converged);
        for pair in out.history.windows(2) {
            let (k_prev, e_prev) = pair[0];
            let (k, e) = pair[1];
            assert_eq!(k, k_prev + 1);
            if (k - 1) % 5 != 0 {
                // Within a cycle the least-squares estimate cannot rise.
                assert!(
                    e <= e_prev * (1.0 + 1e-12),
                    "estimate rose mid-cycle at step {k}: {e_prev:e} -> {e:e}"
                );
            }
        }
    }

    #[test]
    fn gmres_detects_the_exhausted_basis_on_the_identity() {
        let a = DenseMatrix::identity(5);
        let y = gallery::random_rhs::<f64>(5, 87);
        let out = solve(MethodId::Gmres, SystemRef::Dense(&a), &y, None, &SolverConfig::default());
        assert_eq!(out.status, SolverStatus::Converged);
        assert_eq!(out.iterations, 1, "the identity spans its Krylov space in one step");
        for (xi, yi) in out.x.iter().zip(&y) {
            assert!((xi - yi).norm() < 1e-14);
        }
    }

    #[test]
    fn gmres_with_jacobi_solves_a_diagonal_system_in_one_step() {
        let d = vec![C::new(3.0, 1.0), C::new(-2.0, 0.5), C::new(0.1, -4.0)];
        let a = DenseMatrix::from_diagonal(&d);
        let y = gallery::random_rhs::<f64>(3, 88);
        let m = Jacobi::from_diagonal(d.clone()).unwrap();
        let out = solve(
            MethodId::Gmres,
            SystemRef::Dense(&a),
            &y,
            Some(&m),
            &SolverConfig::default(),
        );
        assert_eq!(out.status, SolverStatus::Converged);
        assert_eq!(out.iterations, 1, "A * diag(A)^-1 = I here, so one step suffices");
    }

    #[test]
    fn gmres_counts_inner_steps_against_the_budget() {
        let n = 20;
        let a = gallery::random_general::<f64>(n, 0.45, 89);
        let y = gallery::random_rhs::<f64>(n, 90);
        let mut cfg = SolverConfig::with_tolerance(1e-15, 7);
        cfg.restart_m = 3;
        let out = solve(MethodId::Gmres, SystemRef::Dense(&a), &y, None, &cfg);
        assert_eq!(out.status, SolverStatus::MaxIterations);
        assert_eq!(out.iterations, 7, "budget is counted in inner steps, not cycles");
    }
}
