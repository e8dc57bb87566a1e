use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

/// Coordinate-format accumulator. Duplicates are summed in insertion order when
/// the matrix is finalized, so the result only depends on the push sequence.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(rows: usize, cols: usize, cap: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.entries.push((row, col, value));
    }

    /// Append another buffer (used to merge per-batch buffers in a fixed order).
    pub fn extend(&mut self, other: Triplets) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn into_csr(self) -> CsrMatrix {
        CsrMatrix::from_triplets(self)
    }
}

/// Compressed sparse row matrix with sorted, unique column indices and no
/// stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut t = Triplets::new(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            t.push(i, i, d);
        }
        t.into_csr()
    }

    pub fn from_triplets(t: Triplets) -> Self {
        let Triplets { rows, cols, entries } = t;
        // Counting sort by row keeps insertion order within a row.
        let mut counts = vec![0usize; rows + 1];
        for &(r, _, _) in &entries {
            counts[r + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut by_row: Vec<(usize, f64)> = vec![(0, 0.0); entries.len()];
        for &(r, c, v) in &entries {
            by_row[next[r]] = (c, v);
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        row_ptr.push(0);
        for r in 0..rows {
            let seg = &mut by_row[counts[r]..counts[r + 1]];
            // Stable: equal columns stay in insertion order, so summation order is fixed.
            seg.sort_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < seg.len() {
                let c = seg[i].0;
                let mut acc = 0.0;
                while i < seg.len() && seg[i].0 == c {
                    acc += seg[i].1;
                    i += 1;
                }
                if acc != 0.0 {
                    col_idx.push(c);
                    values.push(acc);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut t = Triplets::new(a.nrows(), a.ncols());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    t.push(i, j, a[(i, j)]);
                }
            }
        }
        t.into_csr()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// y = A x. Rows are processed in parallel, each row summed sequentially, so
    /// the result is bit-identical for any thread count.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        const PAR_THRESHOLD: usize = 20_000;
        let kernel = |(i, yi): (usize, &mut f64)| {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        };
        if self.rows >= PAR_THRESHOLD {
            y.par_iter_mut().enumerate().with_min_len(2048).for_each(kernel);
        } else {
            y.iter_mut().enumerate().for_each(kernel);
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = Triplets::with_capacity(self.cols, self.rows, self.nnz());
        for (i, j, v) in self.triplets() {
            t.push(j, i, v);
        }
        t.into_csr()
    }

    /// Sparse product self * other.
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.cols, other.rows);
        let mut t = Triplets::new(self.rows, other.cols);
        let mut acc = vec![0.0; other.cols];
        let mut mark = vec![usize::MAX; other.cols];
        let mut touched = Vec::new();
        for i in 0..self.rows {
            touched.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                t.push(i, j, acc[j]);
            }
        }
        t.into_csr()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Exact structural and value symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && self.max_asymmetry() == 0.0
    }

    /// max |A_ij - A_ji|.
    pub fn max_asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for (i, j, v) in self.triplets() {
            m = m.max((v - self.get(j, i)).abs());
        }
        m
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    /// D_r A D_c with diagonal scalings given as vectors.
    pub fn scaled(&self, left: &[f64], right: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[k] *= left[i] * right[self.col_idx[k]];
            }
        }
        out
    }

    /// Restrict to the given rows and columns, renumbered in the order given.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.cols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut t = Triplets::new(rows.len(), cols.len());
        for (new_i, &old_i) in rows.iter().enumerate() {
            for (j, v) in self.row(old_i) {
                let nj = col_map[j];
                if nj != usize::MAX {
                    t.push(new_i, nj, v);
                }
            }
        }
        t.into_csr()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            a[(i, j)] = v;
        }
        a
    }

    /// Coordinate text export: `row col value` per line, 17 significant digits.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.rows, self.cols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(w, "{} {} {:.16e}", i, j, v)?;
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += alpha x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_zeros_dropped() {
        let mut t = Triplets::new(2, 3);
        t.push(1, 2, 1.0);
        t.push(0, 1, 2.0);
        t.push(1, 2, 0.5);
        t.push(0, 0, 1.0);
        t.push(0, 0, -1.0);
        let a = t.into_csr();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 1), 2.0);
        assert_eq!(a.get(1, 2), 1.5);
        assert_eq!(a.get(0, 0), 0.0);
        assert_eq!(a.col_indices(), &[1, 2]);
    }

    #[test]
    fn columns_sorted_per_row() {
        let mut t = Triplets::new(1, 5);
        for &c in &[4, 0, 3, 1] {
            t.push(0, c, c as f64 + 1.0);
        }
        let a = t.into_csr();
        assert_eq!(a.col_indices(), &[0, 1, 3, 4]);
    }

    #[test]
    fn matmul_and_transpose_agree_with_dense() {
        let mut t = Triplets::new(3, 2);
        t.push(0, 0, 1.0);
        t.push(1, 1, 2.0);
        t.push(2, 0, -1.0);
        t.push(2, 1, 3.0);
        let a = t.into_csr();
        let ata = a.transpose().matmul(&a);
        let dense = a.to_dense().transpose() * a.to_dense();
        assert_eq!(ata.to_dense(), dense);
        assert!(ata.is_symmetric());
    }

    #[test]
    fn select_renumbers() {
        let a = CsrMatrix::from_dense(&DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0],
        ));
        let s = a.select(&[2, 0], &[1, 2]);
        assert_eq!(s.to_dense(), DMatrix::from_row_slice(2, 2, &[8.0, 9.0, 2.0, 3.0]));
    }

    #[test]
    fn coordinate_export_has_17_digits() {
        let a = CsrMatrix::from_diagonal(&[1.0 / 3.0]);
        let mut buf = Vec::new();
        a.write_coordinate(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().nth(1).unwrap();
        let value: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
        assert_eq!(value, 1.0 / 3.0);
        assert!(line.contains("3.3333333333333331e-1"));
    }

    proptest::proptest! {
        #[test]
        fn csr_agrees_with_dense_accumulation(
            entries in proptest::collection::vec((0usize..6, 0usize..5, -10.0f64..10.0), 0..60),
            x in proptest::collection::vec(-1.0f64..1.0, 5),
        ) {
            let mut t = Triplets::new(6, 5);
            let mut dense = DMatrix::<f64>::zeros(6, 5);
            for &(i, j, v) in &entries {
                t.push(i, j, v);
                dense[(i, j)] += v;
            }
            let a = t.into_csr();
            for i in 0..6 {
                let cols: Vec<usize> = a.row(i).map(|(j, _)| j).collect();
                proptest::prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
                for j in 0..5 {
                    proptest::prop_assert!((a.get(i, j) - dense[(i, j)]).abs() <= 1e-12);
                }
            }
            let y = a.mul_vec(&x);
            let yd = &dense * nalgebra::DVector::from_column_slice(&x);
            for i in 0..6 {
                proptest::prop_assert!((y[i] - yd[i]).abs() <= 1e-11);
            }
            proptest::prop_assert_eq!(a.transpose().transpose(), a);
        }
    }
}
