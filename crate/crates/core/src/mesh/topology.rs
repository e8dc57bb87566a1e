//! Boundary operators and exact simplicial homology ranks.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedMul, CheckedSub, Zero};

use super::SimplicialMesh;
use crate::error::{Error, Result};

/// Signed boundary operator `∂_k` from `k`-chains to `(k-1)`-chains, stored by
/// columns (one column per `k`-simplex).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    pub k: usize,
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<i8>,
}

impl IncidenceMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Nonzeros of column `j` as `(row, value)`, rows increasing.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, i8)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.column(j).find(|&(r, _)| r == i).map_or(0, |(_, v)| v)
    }

    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let mut d = vec![vec![0i64; self.cols]; self.rows];
        for j in 0..self.cols {
            for (i, v) in self.column(j) {
                d[i][j] = v as i64;
            }
        }
        d
    }

    /// Integer product `self * rhs`, as sparse columns of `(row, value)`.
    pub fn compose(&self, rhs: &IncidenceMatrix) -> Result<Vec<Vec<(usize, i64)>>> {
        if self.cols != rhs.rows {
            return Err(Error::invalid("incidence shapes do not compose"));
        }
        let mut out = Vec::with_capacity(rhs.cols);
        let mut acc = vec![0i64; self.rows];
        for j in 0..rhs.cols {
            let mut touched = Vec::new();
            for (mid, b) in rhs.column(j) {
                for (i, a) in self.column(mid) {
                    if acc[i] == 0 {
                        touched.push(i);
                    }
                    acc[i] += a as i64 * b as i64;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            let col = touched
                .iter()
                .filter_map(|&i| {
                    let v = std::mem::take(&mut acc[i]);
                    (v != 0).then_some((i, v))
                })
                .collect();
            out.push(col);
        }
        Ok(out)
    }
}

/// `∂_k` for `1 <= k <= dim`: the face opposite local vertex `i` enters with
/// sign `(-1)^i`.
pub fn incidence_matrix(mesh: &SimplicialMesh, k: usize) -> Result<IncidenceMatrix> {
    if k == 0 || k > mesh.dim() {
        return Err(Error::invalid(format!(
            "incidence matrix degree {k} outside 1..={}",
            mesh.dim()
        )));
    }
    let cols = mesh.n_simplices(k);
    let mut col_ptr = Vec::with_capacity(cols + 1);
    let mut row_idx = Vec::with_capacity(cols * (k + 1));
    let mut values = Vec::with_capacity(cols * (k + 1));
    col_ptr.push(0);
    let mut face = Vec::with_capacity(k);
    for j in 0..cols {
        let s = mesh.simplex(k, j);
        let mut entries: Vec<(usize, i8)> = (0..=k)
            .map(|omit| {
                face.clear();
                face.extend(s.iter().enumerate().filter(|&(i, _)| i != omit).map(|(_, &v)| v));
                let row = mesh.find_simplex(&face).expect("face of a mesh simplex");
                (row, if omit % 2 == 0 { 1 } else { -1 })
            })
            .collect();
        entries.sort_unstable();
        for (r, v) in entries {
            row_idx.push(r);
            values.push(v);
        }
        col_ptr.push(row_idx.len());
    }
    Ok(IncidenceMatrix {
        k,
        rows: mesh.n_simplices(k - 1),
        cols,
        col_ptr,
        row_idx,
        values,
    })
}

/// Field operations used by the column reduction. The checked variants
/// report overflow by returning `None`.
trait Exact: Clone + PartialEq {
    fn from_i8(v: i8) -> Self;
    fn is_zero(&self) -> bool;
    /// `self - f * other`
    fn sub_mul(&self, f: &Self, other: &Self) -> Option<Self>;
    fn ratio(&self, other: &Self) -> Option<Self>;
}

impl Exact for Ratio<i64> {
    fn from_i8(v: i8) -> Self {
        Ratio::from_integer(v as i64)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn sub_mul(&self, f: &Self, other: &Self) -> Option<Self> {
        self.checked_sub(&f.checked_mul(other)?)
    }
    fn ratio(&self, other: &Self) -> Option<Self> {
        num_traits::CheckedDiv::checked_div(self, other)
    }
}

impl Exact for BigRational {
    fn from_i8(v: i8) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn sub_mul(&self, f: &Self, other: &Self) -> Option<Self> {
        Some(self - f * other)
    }
    fn ratio(&self, other: &Self) -> Option<Self> {
        Some(self / other)
    }
}

/// Column reduction with pivots at the lowest nonzero row. Returns `None` on
/// arithmetic overflow.
fn reduce_rank<T: Exact>(m: &IncidenceMatrix) -> Option<usize> {
    let mut pivot_of_row: Vec<Option<usize>> = vec![None; m.rows];
    let mut reduced: Vec<Vec<(usize, T)>> = Vec::new();
    for j in 0..m.cols {
        let mut col: Vec<(usize, T)> = m.column(j).map(|(r, v)| (r, T::from_i8(v))).collect();
        while let Some((low, val)) = col.last().cloned() {
            match pivot_of_row[low] {
                Some(p) => {
                    let piv = &reduced[p];
                    let f = val.ratio(&piv.last().expect("nonempty pivot").1)?;
                    col = axpy_sparse(&col, &f, piv)?;
                }
                None => {
                    pivot_of_row[low] = Some(reduced.len());
                    reduced.push(col);
                    break;
                }
            }
        }
    }
    Some(reduced.len())
}

/// `a - f * b` for sorted sparse columns, dropping exact zeros.
fn axpy_sparse<T: Exact>(a: &[(usize, T)], f: &T, b: &[(usize, T)]) -> Option<Vec<(usize, T)>> {
    let zero = T::from_i8(0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ra = a.get(i).map_or(usize::MAX, |e| e.0);
        let rb = b.get(j).map_or(usize::MAX, |e| e.0);
        let (row, v) = if ra < rb {
            i += 1;
            (ra, a[i - 1].1.clone())
        } else if rb < ra {
            j += 1;
            (rb, zero.sub_mul(f, &b[j - 1].1)?)
        } else {
            i += 1;
            j += 1;
            (ra, a[i - 1].1.sub_mul(f, &b[j - 1].1)?)
        };
        if !v.is_zero() {
            out.push((row, v));
        }
    }
    Some(out)
}

/// Rank over the rationals, computed exactly. Machine-size rationals are
/// tried first; on overflow the reduction restarts with arbitrary precision.
pub fn exact_rank(m: &IncidenceMatrix) -> usize {
    reduce_rank::<Ratio<i64>>(m)
        .unwrap_or_else(|| reduce_rank::<BigRational>(m).expect("arbitrary precision does not overflow"))
}

/// Betti numbers `b_k = dim ker ∂_k - rank ∂_{k+1}` for `k = 0..=dim`.
pub fn betti_numbers(mesh: &SimplicialMesh) -> Vec<usize> {
    let d = mesh.dim();
    let mut rank = vec![0usize; d + 2];
    for k in 1..=d {
        rank[k] = exact_rank(&incidence_matrix(mesh, k).expect("degree in range"));
    }
    (0..=d).map(|k| mesh.n_simplices(k) - rank[k] - rank[k + 1]).collect()
}
