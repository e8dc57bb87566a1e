//! Null-space extraction for large symmetric matrices.
//!
//! Each candidate starts from a fixed pseudo-random vector, is deflated against
//! the vectors already found, and is pushed onto `ker A` by subtracting the
//! MINRES solution of `A x = A z`: for symmetric `A` this leaves exactly the
//! kernel component of `z`. This is the zero-shift limit of inverse iteration
//! and needs no factorization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::minres::least_squares_residual;
use super::sparse::{axpy, dot, norm2, CsrMatrix};
use crate::error::{Error, Result};

const SEED: u64 = 0x5eed_da7a_2024_0001;

#[derive(Debug, Clone)]
pub struct NullSpaceOptions {
    /// Acceptance test for a kernel vector: `||A z|| <= tol ||A||_inf`.
    pub tol: f64,
    /// Target `||A r|| / (||A|| ||r||)` of the kernel projection.
    pub lstol: f64,
    pub max_iter: usize,
    /// Extra random starts allowed beyond the expected dimension.
    pub extra_trials: usize,
}

impl Default for NullSpaceOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            lstol: 1e-12,
            max_iter: 200_000,
            extra_trials: 2,
        }
    }
}

fn start_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn deflate(v: &mut [f64], basis: &[Vec<f64>]) {
    // Classical Gram-Schmidt applied twice.
    for _ in 0..2 {
        for q in basis {
            let c = dot(v, q);
            axpy(-c, q, v);
        }
    }
}

enum Candidate {
    Kernel(Vec<f64>),
    Empty { relative: f64 },
    Residual { ratio: f64 },
}

fn next_candidate(
    a: &CsrMatrix,
    basis: &[Vec<f64>],
    rng: &mut ChaCha8Rng,
    anorm: f64,
    opts: &NullSpaceOptions,
    accept: f64,
) -> Candidate {
    let n = a.rows();
    let mut z = start_vector(rng, n);
    deflate(&mut z, basis);
    let zn = norm2(&z);
    for v in z.iter_mut() {
        *v /= zn;
    }
    let (mut r, _) = least_squares_residual(a, &z, opts.lstol, opts.max_iter);
    deflate(&mut r, basis);
    let rn = norm2(&r);
    // A random unit vector carries ~ 1/sqrt(n) of every kernel direction; a
    // residual far below that is round-off, not kernel.
    if rn <= 1e-6 / (n as f64).sqrt() {
        return Candidate::Empty { relative: rn };
    }
    for v in r.iter_mut() {
        *v /= rn;
    }
    let ratio = norm2(&a.mul_vec(&r)) / anorm;
    if ratio <= accept {
        Candidate::Kernel(r)
    } else {
        Candidate::Residual { ratio }
    }
}

/// Euclidean-orthonormal basis of `ker A` with exactly `expected_dim` columns.
pub fn null_space_basis(a: &CsrMatrix, expected_dim: usize, tol: f64) -> Result<Vec<Vec<f64>>> {
    null_space_basis_with(
        a,
        expected_dim,
        &NullSpaceOptions {
            tol,
            ..Default::default()
        },
    )
}

pub fn null_space_basis_with(a: &CsrMatrix, expected_dim: usize, opts: &NullSpaceOptions) -> Result<Vec<Vec<f64>>> {
    assert_eq!(a.rows(), a.cols());
    if expected_dim == 0 {
        return Ok(Vec::new());
    }
    if expected_dim > a.rows() {
        return Err(Error::invalid(format!(
            "expected kernel dimension {expected_dim} exceeds matrix size {}",
            a.rows()
        )));
    }
    let anorm = a.norm_inf().max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(expected_dim);
    let mut notes = Vec::new();
    let mut trials = 0;
    while basis.len() < expected_dim && trials < expected_dim + opts.extra_trials {
        trials += 1;
        match next_candidate(a, &basis, &mut rng, anorm, opts, opts.tol) {
            Candidate::Kernel(v) => basis.push(v),
            Candidate::Empty { relative } => {
                notes.push(format!("trial {trials}: no kernel component left ({relative:.2e})"))
            }
            Candidate::Residual { ratio } => notes.push(format!(
                "trial {trials}: residual ratio {ratio:.2e} above {:.1e}",
                opts.tol
            )),
        }
    }
    if basis.len() < expected_dim {
        return Err(Error::KernelExtraction {
            degree: None,
            expected: expected_dim,
            found: basis.len(),
            detail: notes.join("; "),
        });
    }
    Ok(basis)
}

/// Kernel basis with the dimension detected numerically: directions whose
/// `||A z|| / ||A||_inf` falls below `threshold` count as kernel. Stops at the
/// first random start with no kernel component left, or at `max_dim`.
pub fn detect_null_space(a: &CsrMatrix, threshold: f64, max_dim: usize, opts: &NullSpaceOptions) -> Vec<Vec<f64>> {
    let anorm = a.norm_inf().max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut basis = Vec::new();
    let ls = NullSpaceOptions {
        // Least-squares stop at the detection threshold, so that directions of
        // size below it are retained in the residual.
        lstol: opts.lstol.max(threshold * 1e-3),
        ..opts.clone()
    };
    while basis.len() < max_dim.min(a.rows()) {
        match next_candidate(a, &basis, &mut rng, anorm, &ls, threshold) {
            Candidate::Kernel(v) => basis.push(v),
            _ => break,
        }
    }
    basis
}
