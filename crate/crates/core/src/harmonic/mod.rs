//! Discrete harmonic forms as the kernel of the Hodge-Dirac matrix.
//!
//! The kernel is searched on the symmetrically scaled matrix `S A S` with
//! `S = diag(M)^{-1/2}`. Each kernel vector splits into per-degree pieces which
//! are harmonic on their own; those are re-orthonormalized in the `M_k` inner
//! product degree by degree.

use std::io::Write;

use crate::assembly::{derivative_blocks, free_mass_blocks, hodge_dirac_matrix, mass_matrix};
use crate::error::{Error, Result};
use crate::fespace::{form_to_vector, BoundaryCondition, FormSpace, Identification};
use crate::linalg::{block_inverse_factor, detect_null_space, dot, null_space_basis_with, CsrMatrix, NullSpaceOptions};

/// Kernel vectors whose scaled residual is below this count as harmonic when
/// the dimension is not known in advance.
pub const MIXED_THRESHOLD: f64 = 1e-7;

/// `M_k`-orthonormal harmonic forms per degree, stored as full coefficient vectors.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    vectors: Vec<Vec<Vec<f64>>>,
    masses: Vec<CsrMatrix>,
    expected: Option<Vec<usize>>,
}

impl HarmonicBasis {
    /// Basis with no harmonic forms at any degree.
    pub fn empty(spaces: &[FormSpace]) -> Self {
        Self {
            vectors: vec![Vec::new(); spaces.len()],
            masses: spaces.iter().map(mass_matrix).collect(),
            expected: None,
        }
    }

    /// Assemble a basis from given vectors; they are `M_k`-orthonormalized.
    pub fn from_vectors(spaces: &[FormSpace], vectors: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let masses: Vec<CsrMatrix> = spaces.iter().map(mass_matrix).collect();
        if vectors.len() != spaces.len() {
            return Err(Error::InvalidHarmonicSpace(format!(
                "{} degrees given, {} expected",
                vectors.len(),
                spaces.len()
            )));
        }
        let mut out = Vec::new();
        for (k, vs) in vectors.into_iter().enumerate() {
            let n = vs.len();
            let ortho = m_orthonormalize(&masses[k], vs, 1e-10);
            if ortho.len() != n {
                return Err(Error::InvalidHarmonicSpace(format!(
                    "{k}-form vectors are linearly dependent"
                )));
            }
            out.push(ortho);
        }
        Ok(Self {
            vectors: out,
            masses,
            expected: None,
        })
    }

    pub fn n_degrees(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self, k: usize) -> &[Vec<f64>] {
        &self.vectors[k]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.vectors.iter().map(Vec::len).collect()
    }

    /// Dimensions predicted by topology, if the regime has a prediction.
    pub fn expected(&self) -> Option<&[usize]> {
        self.expected.as_deref()
    }

    pub fn mass(&self, k: usize) -> &CsrMatrix {
        &self.masses[k]
    }

    /// `<a, b>_{M_k}`.
    pub fn inner(&self, k: usize, a: &[f64], b: &[f64]) -> f64 {
        dot(a, &self.masses[k].mul_vec(b))
    }

    /// Coefficients `<v, h_i>_{M_k}` of the projection onto the harmonic forms.
    pub fn coefficients(&self, k: usize, v: &[f64]) -> Vec<f64> {
        let mv = self.masses[k].mul_vec(v);
        self.vectors[k].iter().map(|h| dot(h, &mv)).collect()
    }

    pub fn combine(&self, k: usize, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.masses[k].rows()];
        for (h, c) in self.vectors[k].iter().zip(coeffs) {
            for (o, x) in out.iter_mut().zip(h) {
                *o += c * x;
            }
        }
        out
    }
}

/// `Σ_i <v, h_i>_{M_k} h_i`.
pub fn project_harmonic(basis: &HarmonicBasis, k: usize, v: &[f64]) -> Vec<f64> {
    basis.combine(k, &basis.coefficients(k, v))
}

/// Topological prediction of harmonic dimensions: the Betti numbers for
/// natural conditions, reversed for essential ones, none for mixed.
pub fn expected_dims(betti: &[usize], bc: &BoundaryCondition) -> Option<Vec<usize>> {
    match bc {
        BoundaryCondition::NaturalAll => Some(betti.to_vec()),
        BoundaryCondition::EssentialAll => Some(betti.iter().rev().copied().collect()),
        BoundaryCondition::Mixed(_) => None,
    }
}

/// Modified Gram-Schmidt in the `M` inner product with greedy pivoting on the
/// largest remaining norm; vectors whose remaining norm falls below
/// `rel_tol` of their original norm are dropped.
fn m_orthonormalize(m: &CsrMatrix, mut vs: Vec<Vec<f64>>, rel_tol: f64) -> Vec<Vec<f64>> {
    let norm = |v: &[f64]| dot(v, &m.mul_vec(v)).max(0.0).sqrt();
    let orig: Vec<f64> = vs.iter().map(|v| norm(v)).collect();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut alive: Vec<usize> = (0..vs.len()).filter(|&i| orig[i] > 0.0).collect();
    while !alive.is_empty() {
        let (pos, best, nb) = alive
            .iter()
            .enumerate()
            .map(|(p, &i)| (p, i, norm(&vs[i]) / orig[i]))
            .fold((0, 0, -1.0), |a, x| if x.2 > a.2 { x } else { a });
        if nb <= rel_tol {
            break;
        }
        alive.swap_remove(pos);
        let mut q = vs[best].clone();
        // Re-orthogonalize once more for stability.
        for _ in 0..2 {
            let mq = m.mul_vec(&q);
            for e in &out {
                let c = dot(e, &mq);
                q.iter_mut().zip(e).for_each(|(a, b)| *a -= c * b);
            }
        }
        let n = norm(&q);
        q.iter_mut().for_each(|x| *x /= n);
        let mq = m.mul_vec(&q);
        for &i in &alive {
            let c = dot(&vs[i], &mq);
            let v = &mut vs[i];
            v.iter_mut().zip(&q).for_each(|(a, b)| *a -= c * b);
        }
        out.push(q);
    }
    out
}

/// Options for the harmonic search.
#[derive(Clone, Debug)]
pub struct HarmonicOptions {
    pub kernel: NullSpaceOptions,
    pub mixed_threshold: f64,
    /// Largest kernel dimension searched for under mixed conditions.
    pub max_mixed_dim: usize,
}

impl Default for HarmonicOptions {
    fn default() -> Self {
        Self {
            kernel: NullSpaceOptions::default(),
            mixed_threshold: MIXED_THRESHOLD,
            max_mixed_dim: 16,
        }
    }
}

/// Harmonic forms of a sequence under the boundary regime its spaces were
/// built with; `betti` are the Betti numbers of the mesh.
pub fn harmonic_basis(spaces: &[FormSpace], bc: &BoundaryCondition, betti: &[usize]) -> Result<HarmonicBasis> {
    harmonic_basis_with(spaces, expected_dims(betti, bc), &HarmonicOptions::default())
}

/// Harmonic search with a known per-degree dimension (`Some`) or numerical
/// detection (`None`).
pub fn harmonic_basis_with(
    spaces: &[FormSpace],
    expected: Option<Vec<usize>>,
    opts: &HarmonicOptions,
) -> Result<HarmonicBasis> {
    if let Some(e) = &expected {
        if e.len() != spaces.len() {
            return Err(Error::InvalidHarmonicSpace(format!(
                "{} expected dimensions for {} spaces",
                e.len(),
                spaces.len()
            )));
        }
    }
    let masses: Vec<CsrMatrix> = spaces.iter().map(mass_matrix).collect();
    let blocks = derivative_blocks(spaces)?;
    let a = hodge_dirac_matrix(spaces, &blocks);
    // Work in coordinates where the mass-matrix blocks of every mesh simplex
    // are the identity.
    let (mb, groups) = free_mass_blocks(spaces, &masses, 0);
    let scale = block_inverse_factor(&mb, &groups)?;
    let sas = scale.transpose().matmul(&a).matmul(&scale);
    let raw = match &expected {
        Some(e) => {
            let total: usize = e.iter().sum();
            null_space_basis_with(&sas, total, &opts.kernel)?
        }
        None => detect_null_space(&sas, opts.mixed_threshold, opts.max_mixed_dim, &opts.kernel),
    };
    let mut offsets = vec![0];
    for s in spaces {
        offsets.push(offsets.last().unwrap() + s.free_dofs().len());
    }
    let mapped: Vec<Vec<f64>> = raw.iter().map(|z| scale.mul_vec(z)).collect();
    let mut vectors = Vec::with_capacity(spaces.len());
    for (k, s) in spaces.iter().enumerate() {
        let parts: Vec<Vec<f64>> = raw
            .iter()
            .zip(&mapped)
            .map(|(z, x)| {
                let mut full = vec![0.0; s.n_dofs()];
                // Kernel vectors have unit scaled norm; a block far below that
                // is round-off from the other degrees.
                let block = &z[offsets[k]..offsets[k + 1]];
                if dot(block, block).sqrt() < 1e-6 {
                    return full;
                }
                for (l, &i) in s.free_dofs().iter().enumerate() {
                    full[i] = x[offsets[k] + l];
                }
                full
            })
            .collect();
        let mut ortho = m_orthonormalize(&masses[k], parts, 1e-6);
        if let Some(e) = &expected {
            if ortho.len() < e[k] {
                return Err(Error::KernelExtraction {
                    degree: Some(k),
                    expected: e[k],
                    found: ortho.len(),
                    detail: "kernel vectors do not span the expected harmonic space at this degree".into(),
                });
            }
            ortho.truncate(e[k]);
        }
        vectors.push(ortho);
    }
    if let Some(e) = &expected {
        let got: Vec<usize> = vectors.iter().map(Vec::len).collect();
        if &got != e {
            let k = got.iter().zip(e).position(|(a, b)| a != b).unwrap();
            return Err(Error::KernelExtraction {
                degree: Some(k),
                expected: e[k],
                found: got[k],
                detail: format!("dimensions {got:?}"),
            });
        }
    }
    Ok(HarmonicBasis {
        vectors,
        masses,
        expected,
    })
}

/// `||A h|| / ||A||_inf` for a harmonic form placed at degree `k` of the
/// reduced Hodge-Dirac matrix, measured after diagonal scaling.
pub fn harmonicity_residual(spaces: &[FormSpace], k: usize, h: &[f64]) -> Result<f64> {
    let blocks = derivative_blocks(spaces)?;
    let mut worst: f64 = 0.0;
    let nrm = |v: &[f64]| dot(v, v).sqrt();
    let hn = nrm(h).max(f64::MIN_POSITIVE);
    if k + 1 < spaces.len() {
        let dh = spaces[k + 1].restrict(&blocks[k].mul_vec(h));
        worst = worst.max(nrm(&dh) / (blocks[k].norm_inf().max(f64::MIN_POSITIVE) * hn));
    }
    if k > 0 {
        let dh = spaces[k - 1].restrict(&blocks[k - 1].transpose().mul_vec(h));
        worst = worst.max(nrm(&dh) / (blocks[k - 1].norm_inf().max(f64::MIN_POSITIVE) * hn));
    }
    Ok(worst)
}

/// CSV export of a form sampled at the mesh vertices: coordinates, then the
/// vector (or scalar) components.
pub fn write_field_csv<W: Write>(space: &FormSpace, coeffs: &[f64], ident: Identification, mut w: W) -> Result<()> {
    let mesh = space.mesh();
    let dim = mesh.dim();
    let k = space.degree();
    let axes = ["x", "y", "z"];
    let ncomp = if k == 0 || k == dim { 1 } else { dim };
    let mut header: Vec<String> = axes[..dim].iter().map(|s| s.to_string()).collect();
    if ncomp == 1 {
        header.push("v".into());
    } else {
        header.extend(axes[..dim].iter().map(|s| format!("v{s}")));
    }
    writeln!(w, "{}", header.join(","))?;
    for (v, vals) in space.sample_vertices(coeffs).iter().enumerate() {
        let vec = form_to_vector(dim, k, ident, vals);
        let mut row: Vec<String> = mesh.vertex(v).iter().map(|x| format!("{x:.6e}")).collect();
        row.extend(vec.iter().map(|x| format!("{x:.6e}")));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
