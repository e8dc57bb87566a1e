//! MINRES for symmetric (possibly indefinite or singular) sparse systems.
//!
//! The recurrence follows Paige & Saunders with an optional SPD
//! preconditioner. Besides ordinary solves it projects vectors onto the null
//! space of a singular matrix, which is what the kernel search in `nullspace`
//! uses.

use super::precond::Preconditioner;
use super::sparse::{axpy, norm2, CsrMatrix};

/// Outcome of an iterative solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// True Euclidean residual `||b - A x|| / ||b||` of the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
    /// Preconditioned residual norm estimate after every MINRES step (non-increasing
    /// within one Krylov cycle; restarts are concatenated).
    pub history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MinresOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// SPD preconditioner, applied as `P^{-1}`.
    pub preconditioner: Option<Preconditioner>,
}

impl MinresOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            preconditioner: None,
        }
    }

    /// Diagonal preconditioner `P = diag(d)`.
    ///
    /// Panics if an entry is not positive.
    pub fn with_diagonal(self, diag: Vec<f64>) -> Self {
        self.with_preconditioner(Preconditioner::diagonal(&diag).expect("preconditioner must be SPD"))
    }

    pub fn with_preconditioner(mut self, p: Preconditioner) -> Self {
        self.preconditioner = Some(p);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stop {
    Residual,
    LeastSquares,
    Breakdown,
    MaxIter,
}

struct Cycle {
    x: Vec<f64>,
    iterations: usize,
    stop: Stop,
}

/// One MINRES Krylov cycle from `x = 0` on `A x = b`.
///
/// Stops when the preconditioned residual drops below `rtol * ||b||_{P^-1}`, or
/// when `||A r|| <= lstol * ||A|| ||r||` (least-squares convergence).
fn minres_cycle(
    a: &CsrMatrix,
    b: &[f64],
    precond: Option<&Preconditioner>,
    rtol: f64,
    lstol: f64,
    max_iter: usize,
    history: &mut Vec<f64>,
) -> Cycle {
    let n = b.len();
    let eps = f64::EPSILON;
    let psolve = |r: &[f64], out: &mut Vec<f64>| match precond {
        Some(p) => p.apply(r, out),
        None => {
            out.clear();
            out.extend_from_slice(r);
        }
    };

    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = Vec::with_capacity(n);
    psolve(&r1, &mut y);
    let beta1 = super::sparse::dot(&r1, &y).max(0.0).sqrt();
    if beta1 == 0.0 {
        return Cycle {
            x,
            iterations: 0,
            stop: Stop::Residual,
        };
    }

    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut tnorm2 = 0.0;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut r2 = r1.clone();
    let mut v = vec![0.0; n];
    let mut av = vec![0.0; n];

    let mut itn = 0;
    let stop = loop {
        if itn >= max_iter {
            break Stop::MaxIter;
        }
        itn += 1;
        let s = 1.0 / beta;
        for i in 0..n {
            v[i] = s * y[i];
        }
        a.mul_vec_into(&v, &mut av);
        if itn >= 2 {
            let c = beta / oldb;
            for i in 0..n {
                av[i] -= c * r1[i];
            }
        }
        let alfa = super::sparse::dot(&v, &av);
        let c = alfa / beta;
        for i in 0..n {
            av[i] -= c * r2[i];
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&av);
        psolve(&r2, &mut y);
        oldb = beta;
        beta = super::sparse::dot(&r2, &y).max(0.0).sqrt();
        tnorm2 += alfa * alfa + oldb * oldb + beta * beta;

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let root = gbar.hypot(dbar);
        let gamma = gbar.hypot(beta);
        if gamma <= 100.0 * eps * tnorm2.sqrt() {
            // Singular tridiagonal with an exhausted Krylov space: the current
            // iterate already minimizes the residual.
            break Stop::LeastSquares;
        }
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - oldeps * w1 - delta * w2[i]) * denom;
        }
        axpy(phi, &w, &mut x);
        history.push(phibar);

        let anorm = tnorm2.sqrt();
        if phibar <= rtol * beta1 {
            break Stop::Residual;
        }
        if anorm > 0.0 && root / anorm <= lstol {
            break Stop::LeastSquares;
        }
        if beta <= 10.0 * eps * beta1 {
            // Lanczos found an invariant subspace: the Krylov solution is final.
            break Stop::Breakdown;
        }
    };
    Cycle {
        x,
        iterations: itn,
        stop,
    }
}

fn residual(a: &CsrMatrix, b: &[f64], x: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

/// Solve `A x = b` for symmetric `A`. On return `report.converged` implies
/// `||b - A x|| <= tol ||b||` in the Euclidean norm. Cycles are restarted from
/// the current iterate when the preconditioned estimate converged but the true
/// residual did not yet.
pub fn minres(a: &CsrMatrix, b: &[f64], opts: &MinresOptions) -> (Vec<f64>, SolveReport) {
    assert_eq!(a.rows(), a.cols());
    assert_eq!(a.rows(), b.len());
    let bnorm = norm2(b);
    let mut x = vec![0.0; b.len()];
    let mut history = Vec::new();
    if bnorm == 0.0 {
        return (
            x,
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
                history,
            },
        );
    }
    let mut iterations = 0;
    let mut r = b.to_vec();
    let mut rel = 1.0;
    let mut stalled = 0;
    while iterations < opts.max_iter {
        let rnorm = norm2(&r);
        let inner_tol = (0.5 * opts.tol * bnorm / rnorm).clamp(1e-15, 0.5);
        let cycle = minres_cycle(
            a,
            &r,
            opts.preconditioner.as_ref(),
            inner_tol,
            0.0,
            opts.max_iter - iterations,
            &mut history,
        );
        iterations += cycle.iterations;
        axpy(1.0, &cycle.x, &mut x);
        r = residual(a, b, &x);
        let new_rel = norm2(&r) / bnorm;
        if new_rel <= opts.tol {
            rel = new_rel;
            break;
        }
        if new_rel >= 0.5 * rel {
            stalled += 1;
            if stalled >= 3 {
                rel = new_rel;
                break;
            }
        }
        rel = new_rel;
        if cycle.stop == Stop::MaxIter || cycle.iterations == 0 {
            break;
        }
    }
    (
        x,
        SolveReport {
            iterations,
            relative_residual: rel,
            converged: rel <= opts.tol,
            history,
        },
    )
}

/// Unpreconditioned MINRES.
pub fn minres_solve(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, SolveReport) {
    minres(a, b, &MinresOptions::new(tol, max_iter))
}

/// Component of `z` in `ker A` for symmetric `A`, with the iteration count.
///
/// Solves the consistent system `A x = A z`, whose Krylov space lies in the
/// range of `A`, and returns `z - x`. A few refinement passes are made until
/// `||A r|| <= lstol ||A||_inf ||r||`.
pub fn least_squares_residual(a: &CsrMatrix, z: &[f64], lstol: f64, max_iter: usize) -> (Vec<f64>, usize) {
    let mut history = Vec::new();
    let mut r = z.to_vec();
    let mut iterations = 0;
    let anorm = a.norm_inf();
    for _ in 0..4 {
        let ar = a.mul_vec(&r);
        let (rn, arn) = (norm2(&r), norm2(&ar));
        if rn == 0.0 || arn <= lstol * anorm * rn || iterations >= max_iter {
            break;
        }
        let rtol = (lstol * anorm * rn / arn).clamp(1e-14, 0.1);
        let cycle = minres_cycle(a, &ar, None, rtol, 0.0, max_iter - iterations, &mut history);
        iterations += cycle.iterations;
        axpy(-1.0, &cycle.x, &mut r);
    }
    (r, iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sparse::Triplets;
    use nalgebra::DMatrix;

    #[test]
    fn identity_converges_immediately() {
        let a = CsrMatrix::identity(5);
        let b = [1.0, -2.0, 3.0, 0.5, 7.0];
        let (x, rep) = minres_solve(&a, &b, 1e-12, 10);
        assert!(rep.converged);
        assert!(rep.iterations <= 2);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn indefinite_permutation() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 1, 1.0);
        t.push(1, 0, 1.0);
        let a = t.into_csr();
        let (x, rep) = minres_solve(&a, &[1.0, 0.0], 1e-12, 10);
        assert!(rep.converged);
        assert!(x[0].abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn residual_history_is_monotone() {
        // Symmetric indefinite tridiagonal.
        let n = 60;
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, if i % 2 == 0 { 2.0 } else { -1.5 } + 0.01 * i as f64);
            if i + 1 < n {
                t.push(i, i + 1, 1.0);
                t.push(i + 1, i, 1.0);
            }
        }
        let a = t.into_csr();
        let b: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let (x, rep) = minres_solve(&a, &b, 1e-10, 1000);
        assert!(rep.converged, "{rep:?}");
        for w in rep.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        let dense = a.to_dense().lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        for i in 0..n {
            assert!((x[i] - dense[i]).abs() < 1e-8 * dense.amax());
        }
    }

    #[test]
    fn preconditioned_badly_scaled_system() {
        // A = D K D with wild diagonal scaling D.
        let n = 40;
        let d: Vec<f64> = (0..n).map(|i| 10f64.powi((i % 7) as i32 - 3)).collect();
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, 4.0 * d[i] * d[i]);
            if i + 1 < n {
                t.push(i, i + 1, -(d[i] * d[i + 1]));
                t.push(i + 1, i, -(d[i] * d[i + 1]));
            }
        }
        let a = t.into_csr();
        let b = vec![1.0; n];
        let opts = MinresOptions::new(1e-10, 2000).with_diagonal(d.iter().map(|x| x * x).collect());
        let (x, rep) = minres(&a, &b, &opts);
        assert!(rep.converged, "{rep:?}");
        let r = residual(&a, &b, &x);
        assert!(norm2(&r) <= 1e-10 * norm2(&b));
    }

    #[test]
    fn least_squares_residual_projects_onto_kernel() {
        let a = CsrMatrix::from_dense(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            0.0, 1.0, -2.0, 3.0,
        ])));
        let (r, _) = least_squares_residual(&a, &[1.0, 1.0, 1.0, 1.0], 1e-14, 50);
        assert!((r[0] - 1.0).abs() < 1e-12);
        for v in &r[1..] {
            assert!(v.abs() < 1e-12);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn solves_random_symmetric_indefinite(seed in 0u64..1000, n in 3usize..40) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            // Block [[A, B^T], [B, 0]] with A SPD and B of full row rank.
            let m = n / 3 + 1;
            let mut t = Triplets::new(n + m, n + m);
            for i in 0..n {
                t.push(i, i, 2.0 + rng.gen_range(0.0..1.0));
            }
            for i in 0..m {
                t.push(n + i, i, 1.0);
                t.push(i, n + i, 1.0);
                let j = rng.gen_range(0..n);
                let v = rng.gen_range(-0.5..0.5);
                t.push(n + i, j, v);
                t.push(j, n + i, v);
            }
            let a = t.into_csr();
            let b: Vec<f64> = (0..n + m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (x, rep) = minres_solve(&a, &b, 1e-11, 10 * (n + m));
            proptest::prop_assert!(rep.converged);
            let r: Vec<f64> = a.mul_vec(&x).iter().zip(&b).map(|(ax, bi)| ax - bi).collect();
            proptest::prop_assert!(norm2(&r) <= 1e-10 * norm2(&b));
        }
    }
}
