//! Mass matrices, derivative blocks, loads and the Hodge-Dirac system.
//!
//! Cell loops run in parallel over fixed batches of cells. Each batch fills its
//! own triplet buffer and the buffers are merged in batch order, so results are
//! bit-identical for any number of threads.

use std::sync::Arc;

use rayon::prelude::*;

use crate::elements::{check_sequence_step, quadrature, QuadratureRule};
use crate::error::{Error, Result};
use crate::fespace::{push, CellGeometry, FormSpace};
use crate::harmonic::HarmonicBasis;
use crate::linalg::{BlockJacobi, CsrMatrix, Preconditioner, Triplets};

const BATCH: usize = 256;

/// A field returning physical form components at a point.
pub type FormField = Arc<dyn Fn(&[f64; 3]) -> Vec<f64> + Send + Sync>;

/// Right-hand side data, indexed by form degree.
///
/// `f[k]` is the source paired with `v_k`. `codiff[k]` is a `(k+1)`-form `g`
/// entering the equation of degree `k` as the functional `v -> <g, d v>`.
#[derive(Clone, Default)]
pub struct SourceData {
    pub f: Vec<Option<FormField>>,
    pub codiff: Vec<Option<FormField>>,
}

impl SourceData {
    pub fn zero(dim: usize) -> Self {
        Self {
            f: vec![None; dim + 1],
            codiff: vec![None; dim + 1],
        }
    }

    pub fn with_f(mut self, k: usize, field: FormField) -> Self {
        self.f[k] = Some(field);
        self
    }

    pub fn with_codiff(mut self, k: usize, field: FormField) -> Self {
        self.codiff[k] = Some(field);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.f.iter().chain(&self.codiff).all(Option::is_none)
    }
}

impl std::fmt::Debug for SourceData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let flags = |v: &[Option<FormField>]| v.iter().map(Option::is_some).collect::<Vec<_>>();
        f.debug_struct("SourceData")
            .field("f", &flags(&self.f))
            .field("codiff", &flags(&self.codiff))
            .finish()
    }
}

pub fn mass_order(space: &FormSpace) -> usize {
    2 * space.family().r + 2
}

pub fn load_order(space: &FormSpace) -> usize {
    (2 * space.family().r + 2).max(6)
}

fn batches(n_cells: usize) -> Vec<std::ops::Range<usize>> {
    (0..n_cells.div_ceil(BATCH))
        .map(|b| b * BATCH..((b + 1) * BATCH).min(n_cells))
        .collect()
}

/// Physical values of all local basis forms (or their derivatives) of a cell:
/// `[point][basis][component]`.
fn physical(tab: &[f64], nq: usize, nloc: usize, p: &[Vec<f64>]) -> Vec<f64> {
    let nc = p.len();
    let mut out = vec![0.0; tab.len()];
    for q in 0..nq {
        for l in 0..nloc {
            let base = (q * nloc + l) * nc;
            let v = push(p, &tab[base..base + nc]);
            out[base..base + nc].copy_from_slice(&v);
        }
    }
    out
}

fn cell_matrix_triplets(
    row: &FormSpace,
    col: &FormSpace,
    rule: &QuadratureRule,
    row_tab: &[f64],
    col_tab: &[f64],
    row_deg: usize,
    col_deg: usize,
    symmetric: bool,
) -> CsrMatrix {
    let mesh = row.mesh();
    let (nr, ncl) = (row.n_local(), col.n_local());
    let nc = crate::combinatorics::binomial(mesh.dim(), row_deg);
    let nq = rule.len();
    let parts: Vec<Triplets> = batches(mesh.n_cells())
        .into_par_iter()
        .map(|range| {
            let mut t = Triplets::with_capacity(row.n_dofs(), col.n_dofs(), range.len() * nr * ncl);
            let mut local = vec![0.0; nr * ncl];
            for c in range {
                let geo = CellGeometry::new(mesh, c);
                let rv = physical(row_tab, nq, nr, &geo.pushforward(row_deg));
                let cv = physical(col_tab, nq, ncl, &geo.pushforward(col_deg));
                let w0 = geo.abs_det();
                local.iter_mut().for_each(|x| *x = 0.0);
                for (q, w) in rule.weights.iter().enumerate() {
                    let w = w * w0;
                    for i in 0..nr {
                        let a = &rv[(q * nr + i) * nc..(q * nr + i + 1) * nc];
                        let j0 = if symmetric { i } else { 0 };
                        for j in j0..ncl {
                            let b = &cv[(q * ncl + j) * nc..(q * ncl + j + 1) * nc];
                            let s: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                            local[i * ncl + j] += w * s;
                        }
                    }
                }
                let (rd, cd) = (row.cell_dofs(c), col.cell_dofs(c));
                let (rs, cs) = (row.cell_signs(c), col.cell_signs(c));
                for i in 0..nr {
                    if symmetric {
                        for j in i..ncl {
                            let v = local[i * ncl + j] * f64::from(rs[i] * cs[j]);
                            t.push(rd[i], cd[j], v);
                            if i != j {
                                t.push(cd[j], rd[i], v);
                            }
                        }
                    } else {
                        for j in 0..ncl {
                            t.push(rd[i], cd[j], local[i * ncl + j] * f64::from(rs[i] * cs[j]));
                        }
                    }
                }
            }
            t
        })
        .collect();
    let mut all = Triplets::new(row.n_dofs(), col.n_dofs());
    for p in parts {
        all.extend(p);
    }
    all.into_csr()
}

/// Gram matrix `M_ij = <φ_j, φ_i>` over all DOFs of a space.
pub fn mass_matrix(space: &FormSpace) -> CsrMatrix {
    mass_matrix_with_order(space, mass_order(space))
}

pub fn mass_matrix_with_order(space: &FormSpace, order: usize) -> CsrMatrix {
    let rule = quadrature(space.mesh().dim(), order).expect("quadrature order in range");
    let tab = space.basis().tabulate(&rule);
    let k = space.degree();
    cell_matrix_triplets(space, space, &rule, &tab, &tab, k, k, true)
}

fn check_pair(src: &FormSpace, dst: &FormSpace) -> Result<()> {
    if !Arc::ptr_eq(src.mesh_arc(), dst.mesh_arc()) {
        return Err(Error::InvalidSequence("spaces live on different meshes".into()));
    }
    check_sequence_step(src.family(), dst.family())
}

/// `B_ij = <d φ_j^src, φ_i^dst>`, shape `dst.n_dofs x src.n_dofs`.
pub fn derivative_block(src: &FormSpace, dst: &FormSpace) -> Result<CsrMatrix> {
    check_pair(src, dst)?;
    let order = 2 * src.family().r.max(dst.family().r) + 2;
    let rule = quadrature(src.mesh().dim(), order)?;
    let dtab = src.basis().tabulate_d(&rule);
    let tab = dst.basis().tabulate(&rule);
    let k = dst.degree();
    Ok(cell_matrix_triplets(dst, src, &rule, &tab, &dtab, k, k, false))
}

fn assemble_vector(
    space: &FormSpace,
    field: &(dyn Fn(&[f64; 3]) -> Vec<f64> + Sync),
    use_d: bool,
    order: usize,
) -> Vec<f64> {
    let mesh = space.mesh();
    let rule = quadrature(mesh.dim(), order).expect("quadrature order in range");
    let tab = if use_d {
        space.basis().tabulate_d(&rule)
    } else {
        space.basis().tabulate(&rule)
    };
    let deg = space.degree() + usize::from(use_d);
    let nloc = space.n_local();
    let nq = rule.len();
    let nc = crate::combinatorics::binomial(mesh.dim(), deg);
    let parts: Vec<Vec<(usize, f64)>> = batches(mesh.n_cells())
        .into_par_iter()
        .map(|range| {
            let mut out = Vec::with_capacity(range.len() * nloc);
            for c in range {
                let geo = CellGeometry::new(mesh, c);
                let v = physical(&tab, nq, nloc, &geo.pushforward(deg));
                let w0 = geo.abs_det();
                let mut local = vec![0.0; nloc];
                for (q, (pt, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                    let f = field(&geo.map(pt));
                    for (i, li) in local.iter_mut().enumerate() {
                        let b = &v[(q * nloc + i) * nc..(q * nloc + i + 1) * nc];
                        *li += w * w0 * b.iter().zip(&f).map(|(x, y)| x * y).sum::<f64>();
                    }
                }
                let (dofs, signs) = (space.cell_dofs(c), space.cell_signs(c));
                for i in 0..nloc {
                    out.push((dofs[i], local[i] * f64::from(signs[i])));
                }
            }
            out
        })
        .collect();
    let mut b = vec![0.0; space.n_dofs()];
    for p in parts {
        for (i, v) in p {
            b[i] += v;
        }
    }
    b
}

/// Block-diagonal mass matrix over the free DOFs of all spaces, followed by
/// `extra` identity rows, together with the DOF groups of every mesh simplex.
pub fn free_mass_blocks(spaces: &[FormSpace], masses: &[CsrMatrix], extra: usize) -> (CsrMatrix, Vec<Vec<usize>>) {
    let n = spaces.iter().map(|s| s.free_dofs().len()).sum::<usize>() + extra;
    let mut t = Triplets::new(n, n);
    let mut groups = Vec::new();
    let mut off = 0;
    for (s, m) in spaces.iter().zip(masses) {
        let free = s.free_dofs();
        for (i, j, v) in m.select(free, free).triplets() {
            t.push(off + i, off + j, v);
        }
        for range in s.dof_groups() {
            let g: Vec<usize> = range.filter_map(|i| s.free_index(i)).map(|i| off + i).collect();
            if !g.is_empty() {
                groups.push(g);
            }
        }
        off += free.len();
    }
    for i in off..n {
        t.push(i, i, 1.0);
    }
    (t.into_csr(), groups)
}

/// `b_i = <f, φ_i>`.
pub fn load_vector(space: &FormSpace, field: &(dyn Fn(&[f64; 3]) -> Vec<f64> + Sync)) -> Vec<f64> {
    assemble_vector(space, field, false, load_order(space))
}

/// `b_i = <g, d φ_i>` for a `(k+1)`-form `g`.
pub fn codiff_load(space: &FormSpace, g: &(dyn Fn(&[f64; 3]) -> Vec<f64> + Sync)) -> Vec<f64> {
    assemble_vector(space, g, true, load_order(space))
}

/// The assembled symmetric system with unknowns `[u_0, ..., u_dim, p]`,
/// restricted to the free DOFs of every space.
#[derive(Clone, Debug)]
pub struct HodgeDiracSystem {
    pub dim: usize,
    /// Full mass matrices `M_k` (all DOFs).
    pub masses: Vec<CsrMatrix>,
    /// Full derivative blocks `B_k` (all DOFs).
    pub derivatives: Vec<CsrMatrix>,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Load vectors per degree over all DOFs, before lifting and restriction.
    pub loads: Vec<Vec<f64>>,
    /// Start of each degree block in the reduced system; the last entry is the
    /// start of the harmonic unknowns.
    pub offsets: Vec<usize>,
    /// Form degree of every harmonic unknown.
    pub harmonic_degrees: Vec<usize>,
}

impl HodgeDiracSystem {
    pub fn n_unknowns(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_harmonic(&self) -> usize {
        self.harmonic_degrees.len()
    }

    /// Diagonal preconditioner: `diag M_k` on form blocks, 1 on harmonic unknowns.
    pub fn preconditioner_diagonal(&self, spaces: &[FormSpace]) -> Vec<f64> {
        let mut d = Vec::with_capacity(self.n_unknowns());
        for (s, m) in spaces.iter().zip(&self.masses) {
            let diag = m.diagonal();
            d.extend(s.free_dofs().iter().map(|&i| diag[i]));
        }
        d.extend(std::iter::repeat_n(1.0, self.n_harmonic()));
        d
    }

    /// Block Jacobi preconditioner: exact inverses of the mass-matrix blocks
    /// coupling the DOFs of one mesh simplex, 1 on harmonic unknowns.
    pub fn preconditioner_blocks(&self, spaces: &[FormSpace]) -> Result<Preconditioner> {
        let (m, groups) = free_mass_blocks(spaces, &self.masses, self.n_harmonic());
        Ok(Preconditioner::Block(BlockJacobi::new(&m, &groups)?))
    }

    /// Split a reduced solution vector into full coefficient vectors (with
    /// prescribed values restored) and harmonic coefficients.
    pub fn split(&self, spaces: &[FormSpace], x: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let u = spaces
            .iter()
            .enumerate()
            .map(|(k, s)| s.extend(&x[self.offsets[k]..self.offsets[k + 1]]))
            .collect();
        (u, x[self.offsets[spaces.len()]..].to_vec())
    }
}

/// Derivative blocks `B_0..B_{dim-1}` of a sequence.
pub fn derivative_blocks(spaces: &[FormSpace]) -> Result<Vec<CsrMatrix>> {
    spaces.windows(2).map(|w| derivative_block(&w[0], &w[1])).collect()
}

fn reduced_offsets(spaces: &[FormSpace]) -> Vec<usize> {
    let mut offsets = vec![0];
    for s in spaces {
        offsets.push(offsets.last().unwrap() + s.free_dofs().len());
    }
    offsets
}

fn push_derivative_blocks(t: &mut Triplets, spaces: &[FormSpace], blocks: &[CsrMatrix], offsets: &[usize]) {
    for (k, b) in blocks.iter().enumerate() {
        let (src, dst) = (&spaces[k], &spaces[k + 1]);
        for (i, j, v) in b.triplets() {
            if let (Some(fi), Some(fj)) = (dst.free_index(i), src.free_index(j)) {
                t.push(offsets[k + 1] + fi, offsets[k] + fj, v);
                t.push(offsets[k] + fj, offsets[k + 1] + fi, v);
            }
        }
    }
}

/// The Hodge-Dirac matrix on the free DOFs, without the harmonic block.
pub fn hodge_dirac_matrix(spaces: &[FormSpace], blocks: &[CsrMatrix]) -> CsrMatrix {
    let offsets = reduced_offsets(spaces);
    let n = *offsets.last().unwrap();
    let mut t = Triplets::new(n, n);
    push_derivative_blocks(&mut t, spaces, blocks, &offsets);
    t.into_csr()
}

/// Assemble the full system for a sequence of spaces, harmonic forms and sources.
pub fn assemble_system(
    spaces: &[FormSpace],
    harmonic: &HarmonicBasis,
    source: &SourceData,
) -> Result<HodgeDiracSystem> {
    let dim = spaces
        .first()
        .map(|s| s.mesh().dim())
        .ok_or_else(|| Error::invalid("empty sequence"))?;
    if spaces.len() != dim + 1 {
        return Err(Error::InvalidSequence(format!(
            "{} spaces in dimension {dim}",
            spaces.len()
        )));
    }
    if harmonic.n_degrees() != dim + 1 {
        return Err(Error::InvalidHarmonicSpace(format!(
            "harmonic basis has {} degrees, sequence has {}",
            harmonic.n_degrees(),
            dim + 1
        )));
    }
    for (k, s) in spaces.iter().enumerate() {
        for h in harmonic.vectors(k) {
            if h.len() != s.n_dofs() {
                return Err(Error::InvalidHarmonicSpace(format!(
                    "harmonic {k}-form has {} coefficients, space has {}",
                    h.len(),
                    s.n_dofs()
                )));
            }
            if (0..s.n_dofs()).any(|i| s.is_constrained(i) && h[i] != 0.0) {
                return Err(Error::InvalidHarmonicSpace(format!(
                    "harmonic {k}-form does not satisfy the essential conditions"
                )));
            }
        }
    }
    let masses: Vec<CsrMatrix> = spaces.iter().map(mass_matrix).collect();
    let derivatives = derivative_blocks(spaces)?;
    let offsets = reduced_offsets(spaces);
    let n_forms = *offsets.last().unwrap();
    let harmonic_degrees: Vec<usize> = (0..=dim)
        .flat_map(|k| std::iter::repeat_n(k, harmonic.vectors(k).len()))
        .collect();
    let n = n_forms + harmonic_degrees.len();
    let mut t = Triplets::new(n, n);
    push_derivative_blocks(&mut t, spaces, &derivatives, &offsets);
    let mut col = n_forms;
    for k in 0..=dim {
        for h in harmonic.vectors(k) {
            let mh = masses[k].mul_vec(h);
            for (i, v) in mh.into_iter().enumerate() {
                if let Some(fi) = spaces[k].free_index(i) {
                    if v != 0.0 {
                        t.push(offsets[k] + fi, col, v);
                        t.push(col, offsets[k] + fi, v);
                    }
                }
            }
            col += 1;
        }
    }
    let matrix = t.into_csr();

    let mut full: Vec<Vec<f64>> = spaces
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut b = match source.f.get(k).and_then(Option::as_ref) {
                Some(f) => load_vector(s, f.as_ref()),
                None => vec![0.0; s.n_dofs()],
            };
            if let Some(g) = source.codiff.get(k).and_then(Option::as_ref) {
                if k < dim {
                    let c = codiff_load(s, g.as_ref());
                    b.iter_mut().zip(c).for_each(|(x, y)| *x += y);
                }
            }
            b
        })
        .collect();
    let loads = full.clone();
    // Lift prescribed values to the right-hand side.
    for (k, b) in derivatives.iter().enumerate() {
        let (lo, hi) = (&spaces[k], &spaces[k + 1]);
        if lo.n_constrained() > 0 {
            let y = b.mul_vec(lo.prescribed());
            full[k + 1].iter_mut().zip(y).for_each(|(x, v)| *x -= v);
        }
        if hi.n_constrained() > 0 {
            let y = b.transpose().mul_vec(hi.prescribed());
            full[k].iter_mut().zip(y).for_each(|(x, v)| *x -= v);
        }
    }
    let mut rhs = Vec::with_capacity(n);
    for (s, b) in spaces.iter().zip(&full) {
        rhs.extend(s.restrict(b));
    }
    rhs.resize(n, 0.0);
    Ok(HodgeDiracSystem {
        dim,
        masses,
        derivatives,
        matrix,
        rhs,
        loads,
        offsets,
        harmonic_degrees,
    })
}

#[cfg(test)]
mod tests;
