//! SPD preconditioners applied as `P^{-1} r`.

use nalgebra::DMatrix;

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub enum Preconditioner {
    /// Inverse of a positive diagonal.
    Diagonal(Vec<f64>),
    /// Exact inverses of principal submatrices on disjoint index groups.
    Block(BlockJacobi),
}

impl Preconditioner {
    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        diag.iter()
            .map(|&d| {
                if d > 0.0 && d.is_finite() {
                    Ok(1.0 / d)
                } else {
                    Err(Error::SingularMatrix(format!(
                        "preconditioner diagonal entry {d} is not positive"
                    )))
                }
            })
            .collect::<Result<Vec<f64>>>()
            .map(Preconditioner::Diagonal)
    }

    pub fn apply(&self, r: &[f64], out: &mut Vec<f64>) {
        out.clear();
        match self {
            Preconditioner::Diagonal(inv) => out.extend(r.iter().zip(inv).map(|(a, b)| a * b)),
            Preconditioner::Block(b) => b.apply(r, out),
        }
    }
}

/// Groups completed with singletons for every index not covered.
fn complete_groups(n: usize, groups: &[Vec<usize>]) -> Result<Vec<Vec<usize>>> {
    let mut seen = vec![false; n];
    let mut all: Vec<Vec<usize>> = Vec::with_capacity(groups.len());
    for g in groups {
        for &i in g {
            if i >= n || seen[i] {
                return Err(Error::invalid(
                    "block preconditioner groups must be disjoint and in range",
                ));
            }
            seen[i] = true;
        }
        if !g.is_empty() {
            all.push(g.clone());
        }
    }
    all.extend((0..n).filter(|&i| !seen[i]).map(|i| vec![i]));
    Ok(all)
}

fn block_cholesky(a: &CsrMatrix, g: &[usize]) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let m = g.len();
    DMatrix::from_fn(m, m, |i, j| a.get(g[i], g[j]))
        .cholesky()
        .ok_or_else(|| Error::SingularMatrix("preconditioner block is not positive definite".into()))
}

/// Block-diagonal `S` with `S^T A[g, g] S = I` on every group, `S_g = L_g^{-T}`.
pub fn block_inverse_factor(a: &CsrMatrix, groups: &[Vec<usize>]) -> Result<CsrMatrix> {
    let n = a.rows();
    let mut t = super::sparse::Triplets::new(n, n);
    for g in complete_groups(n, groups)? {
        let l = block_cholesky(a, &g)?.l();
        let m = g.len();
        let linv = l
            .solve_lower_triangular(&DMatrix::identity(m, m))
            .ok_or_else(|| Error::SingularMatrix("singular Cholesky factor".into()))?;
        // S_g = L^{-T}: entry (i, j) is linv[(j, i)].
        for i in 0..m {
            for j in 0..m {
                let v = linv[(j, i)];
                if v != 0.0 {
                    t.push(g[i], g[j], v);
                }
            }
        }
    }
    Ok(t.into_csr())
}

#[derive(Clone, Debug)]
pub struct BlockJacobi {
    n: usize,
    groups: Vec<Vec<usize>>,
    /// Row-major inverse of each block.
    inverses: Vec<Vec<f64>>,
}

impl BlockJacobi {
    /// Invert `A[g, g]` for every group `g`. Indices outside all groups are
    /// treated as singleton blocks.
    pub fn new(a: &CsrMatrix, groups: &[Vec<usize>]) -> Result<Self> {
        let n = a.rows();
        let all = complete_groups(n, groups)?;
        let inverses = all
            .iter()
            .map(|g| {
                let m = g.len();
                let inv = block_cholesky(a, g)?.inverse();
                Ok((0..m)
                    .flat_map(|i| (0..m).map(move |j| (i, j)))
                    .map(|(i, j)| inv[(i, j)])
                    .collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self {
            n,
            groups: all,
            inverses,
        })
    }

    pub fn apply(&self, r: &[f64], out: &mut Vec<f64>) {
        out.resize(self.n, 0.0);
        for (g, inv) in self.groups.iter().zip(&self.inverses) {
            let m = g.len();
            for i in 0..m {
                out[g[i]] = (0..m).map(|j| inv[i * m + j] * r[g[j]]).sum();
            }
        }
    }
}
