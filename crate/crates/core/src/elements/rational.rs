//! Dense exact linear algebra over the rationals.

use num_traits::{One, Zero};

use super::poly::{PolyForm, Q};

/// Dense rational matrix stored by rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<Q>>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![vec![Q::zero(); cols]; rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i][i] = Q::one();
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.data[i][j]
    }

    pub fn mul(&self, other: &RationalMatrix) -> RationalMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = &self.data[i][l];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other.data[l][j];
                    if !b.is_zero() {
                        out.data[i][j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.iter().all(Zero::is_zero))
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.data
            .iter()
            .map(|r| r.iter().map(super::poly::to_f64).collect())
            .collect()
    }

    /// Inverse by Gauss-Jordan elimination; `None` if singular.
    pub fn inverse(&self) -> Option<RationalMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        for col in 0..n {
            let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
            a.swap(col, piv);
            inv.swap(col, piv);
            let p = a[col][col].clone();
            for j in 0..n {
                a[col][j] /= &p;
                inv[col][j] /= &p;
            }
            for r in 0..n {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let f = a[r][col].clone();
                for j in 0..n {
                    let (ac, ic) = (a[col][j].clone(), inv[col][j].clone());
                    a[r][j] -= &f * ac;
                    inv[r][j] -= &f * ic;
                }
            }
        }
        Some(RationalMatrix {
            rows: n,
            cols: n,
            data: inv,
        })
    }

    pub fn rank(&self) -> usize {
        let mut e = Echelon::new(self.cols);
        self.data.iter().filter(|r| e.insert(r)).count()
    }
}

/// Incrementally built row echelon form used to test linear independence.
pub struct Echelon {
    cols: usize,
    /// Reduced rows with their pivot column; pivot entry normalized to 1.
    rows: Vec<(usize, Vec<Q>)>,
}

impl Echelon {
    pub fn new(cols: usize) -> Self {
        Self { cols, rows: Vec::new() }
    }

    /// Reduce `v` against the stored rows and keep it if it is independent.
    pub fn insert(&mut self, v: &[Q]) -> bool {
        assert_eq!(v.len(), self.cols);
        let mut w = v.to_vec();
        for (p, row) in &self.rows {
            if w[*p].is_zero() {
                continue;
            }
            let f = w[*p].clone();
            for (wi, ri) in w.iter_mut().zip(row) {
                if !ri.is_zero() {
                    *wi -= &f * ri;
                }
            }
        }
        match w.iter().position(|x| !x.is_zero()) {
            None => false,
            Some(p) => {
                let s = w[p].clone();
                for x in w.iter_mut() {
                    *x /= &s;
                }
                // Keep earlier rows reduced in the new pivot column.
                for (_, row) in self.rows.iter_mut() {
                    if !row[p].is_zero() {
                        let f = row[p].clone();
                        for (ri, wi) in row.iter_mut().zip(&w) {
                            if !wi.is_zero() {
                                *ri -= &f * wi;
                            }
                        }
                    }
                }
                self.rows.push((p, w));
                true
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }
}

/// Greedy maximal linearly independent subfamily, in input order.
pub fn independent_forms(forms: Vec<PolyForm>) -> Vec<PolyForm> {
    let flat: Vec<_> = forms.iter().map(PolyForm::flatten).collect();
    let mut keys: Vec<_> = flat.iter().flat_map(|m| m.keys().copied()).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut ech = Echelon::new(keys.len());
    let mut out = Vec::new();
    for (f, m) in forms.into_iter().zip(&flat) {
        let v: Vec<Q> = keys.iter().map(|k| m.get(k).cloned().unwrap_or_else(Q::zero)).collect();
        if ech.insert(&v) {
            out.push(f);
        }
    }
    out
}
