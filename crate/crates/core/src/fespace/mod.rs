//! Global discrete form spaces over a mesh.
//!
//! Every mesh simplex is stored with sorted vertices, so the local DOFs of a
//! cell attached to a sub-simplex are defined in terms of that simplex alone.
//! Neighbouring cells therefore agree on them without any sign flips and the
//! global index of a DOF is `offset[m] + face * per_face[m] + moment`.

mod geometry;
mod proxy;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

pub use geometry::CellGeometry;
pub use proxy::{form_to_vector, vector_to_form, Identification};

use crate::combinatorics::subsets;
use crate::elements::poly::Q;
use crate::elements::{
    check_sequence_step, is_supported, local_derivative_inclusion, quadrature, shared_basis, ElementFamily,
    ReferenceBasis, MAX_ORDER,
};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, Triplets};
use crate::mesh::SimplicialMesh;

/// Boundary regime applied to every space of a sequence.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum BoundaryCondition {
    #[default]
    NaturalAll,
    EssentialAll,
    /// Essential on facets carrying one of the tags, natural elsewhere.
    Mixed(Vec<i32>),
}

impl std::fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryCondition::NaturalAll => f.write_str("natural"),
            BoundaryCondition::EssentialAll => f.write_str("essential"),
            BoundaryCondition::Mixed(tags) => {
                let t: Vec<String> = tags.iter().map(i32::to_string).collect();
                write!(f, "mixed:{}", t.join(","))
            }
        }
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "natural" => return Ok(BoundaryCondition::NaturalAll),
            "essential" => return Ok(BoundaryCondition::EssentialAll),
            _ => {}
        }
        let rest = s
            .strip_prefix("mixed:")
            .ok_or_else(|| Error::invalid(format!("unknown boundary condition '{s}'")))?;
        let tags = rest
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i32>()
                    .map_err(|_| Error::invalid(format!("bad boundary tag '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundaryCondition::Mixed(tags))
    }
}

/// Element families for form degrees `0..=dim`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceSpec {
    pub families: Vec<ElementFamily>,
}

impl SequenceSpec {
    /// `P_r^- Λ^0 -> P_r^- Λ^1 -> ...`
    pub fn trimmed(dim: usize, r: usize) -> Self {
        Self {
            families: (0..=dim).map(|k| ElementFamily::trimmed(r, k)).collect(),
        }
    }

    /// `P_r Λ^0 -> P_{r-1} Λ^1 -> ...`
    pub fn full(dim: usize, r: usize) -> Self {
        Self {
            families: (0..=dim).map(|k| ElementFamily::full(r.saturating_sub(k), k)).collect(),
        }
    }

    /// Named presets: `trimmed-r1`, `trimmed-r2`, `trimmed-r3`, `full-210`,
    /// `full-321`, `whitney-3d`.
    pub fn preset(name: &str, dim: usize) -> Result<Self> {
        let spec = match name.trim() {
            "trimmed-r1" => Self::trimmed(dim, 1),
            "trimmed-r2" => Self::trimmed(dim, 2),
            "trimmed-r3" => Self::trimmed(dim, 3),
            "full-210" if dim == 2 => Self::full(2, 2),
            "full-321" if dim == 2 => Self::full(2, 3),
            "full-210" | "full-321" => return Err(Error::UnsupportedElement(format!("{name} in dimension {dim}"))),
            "whitney-3d" if dim == 3 => Self::trimmed(3, 1),
            "whitney-3d" => return Err(Error::invalid("whitney-3d needs a 3D mesh")),
            other => return Err(Error::invalid(format!("unknown sequence preset '{other}'"))),
        };
        spec.validate(dim)?;
        Ok(spec)
    }

    /// A preset name, or families listed in degree order separated by `,` or `->`.
    pub fn parse(s: &str, dim: usize) -> Result<Self> {
        let s = s.trim();
        if !s.contains(',') && !s.contains("->") {
            return Self::preset(s, dim);
        }
        let families = s
            .split(',')
            .flat_map(|part| part.split("->"))
            .map(str::parse)
            .collect::<Result<Vec<ElementFamily>>>()?;
        let spec = Self { families };
        spec.validate(dim)?;
        Ok(spec)
    }

    /// Check form degrees, the degree rule between neighbours, and support.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.families.len() != dim + 1 {
            return Err(Error::InvalidSequence(format!(
                "{} families given for a sequence of {} spaces",
                self.families.len(),
                dim + 1
            )));
        }
        for (k, f) in self.families.iter().enumerate() {
            if f.k != k {
                return Err(Error::InvalidSequence(format!("{f} placed at form degree {k}")));
            }
        }
        for w in self.families.windows(2) {
            check_sequence_step(w[0], w[1])?;
        }
        for f in &self.families {
            if !is_supported(*f, dim) {
                return Err(Error::UnsupportedElement(format!("{f} in dimension {dim}")));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<String> = self.families.iter().map(ElementFamily::to_string).collect();
        f.write_str(&names.join(" -> "))
    }
}

/// A global space `V_h^k` of one element family on a mesh.
#[derive(Clone, Debug)]
pub struct FormSpace {
    mesh: Arc<SimplicialMesh>,
    family: ElementFamily,
    basis: Arc<ReferenceBasis>,
    identification: Identification,
    n_dofs: usize,
    offsets: Vec<usize>,
    per_face: Vec<usize>,
    n_local: usize,
    cell_dofs: Vec<usize>,
    cell_signs: Vec<i8>,
    constrained: Vec<bool>,
    prescribed: Vec<f64>,
    free: Vec<usize>,
    free_index: Vec<usize>,
}

impl FormSpace {
    pub fn new(mesh: Arc<SimplicialMesh>, family: ElementFamily, bc: &BoundaryCondition) -> Result<Self> {
        let dim = mesh.dim();
        let basis = shared_basis(family, dim)?;
        let per_face: Vec<usize> = (0..=dim).map(|m| basis.moments_per_face(m)).collect();
        let mut offsets = Vec::with_capacity(dim + 1);
        let mut n_dofs = 0;
        for m in 0..=dim {
            offsets.push(n_dofs);
            n_dofs += per_face[m] * mesh.n_simplices(m);
        }
        let n_local = basis.n_dofs();
        let mut cell_dofs = Vec::with_capacity(n_local * mesh.n_cells());
        for c in 0..mesh.n_cells() {
            for d in basis.dof_descriptors() {
                let g = mesh.cell_faces(c, d.sub_dim)[d.sub_index];
                cell_dofs.push(offsets[d.sub_dim] + g * per_face[d.sub_dim] + d.moment);
            }
        }
        let cell_signs = vec![1; cell_dofs.len()];

        let facets: Vec<usize> = match bc {
            BoundaryCondition::NaturalAll => Vec::new(),
            BoundaryCondition::EssentialAll => mesh.boundary_markers().keys().copied().collect(),
            BoundaryCondition::Mixed(tags) => {
                let known = mesh.boundary_tags();
                if let Some(t) = tags.iter().find(|t| !known.contains(t)) {
                    return Err(Error::invalid(format!("boundary tag {t} not present on the mesh")));
                }
                mesh.facets_with_tags(tags)
            }
        };
        let mut constrained = vec![false; n_dofs];
        for f in facets {
            let verts = mesh.simplex(dim - 1, f).to_vec();
            for m in 0..dim {
                if per_face[m] == 0 {
                    continue;
                }
                for sub in subsets(dim, m + 1) {
                    let vs: Vec<usize> = sub.iter().map(|&i| verts[i]).collect();
                    let g = mesh.find_simplex(&vs).expect("sub-simplex of a facet is in the mesh");
                    for j in 0..per_face[m] {
                        constrained[offsets[m] + g * per_face[m] + j] = true;
                    }
                }
            }
        }
        let free: Vec<usize> = (0..n_dofs).filter(|&i| !constrained[i]).collect();
        let mut free_index = vec![usize::MAX; n_dofs];
        for (l, &i) in free.iter().enumerate() {
            free_index[i] = l;
        }
        Ok(Self {
            mesh,
            family,
            basis,
            identification: Identification::None,
            n_dofs,
            offsets,
            per_face,
            n_local,
            cell_dofs,
            cell_signs,
            constrained,
            prescribed: vec![0.0; n_dofs],
            free,
            free_index,
        })
    }

    pub fn with_identification(mut self, ident: Identification) -> Self {
        self.identification = ident;
        self
    }

    /// Prescribe essential values by interpolating `field` on the constrained DOFs.
    pub fn with_boundary_values(mut self, field: &(dyn Fn(&[f64; 3]) -> Vec<f64> + Sync)) -> Self {
        let all = self.interpolate(field);
        for i in 0..self.n_dofs {
            if self.constrained[i] {
                self.prescribed[i] = all[i];
            }
        }
        self
    }

    pub fn mesh(&self) -> &SimplicialMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<SimplicialMesh> {
        &self.mesh
    }

    pub fn family(&self) -> ElementFamily {
        self.family
    }

    pub fn degree(&self) -> usize {
        self.family.k
    }

    pub fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    pub fn identification(&self) -> Identification {
        self.identification
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn n_comps(&self) -> usize {
        self.basis.n_comps()
    }

    /// Global DOF indices of the local basis functions of cell `c`.
    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        &self.cell_dofs[c * self.n_local..(c + 1) * self.n_local]
    }

    pub fn cell_signs(&self, c: usize) -> &[i8] {
        &self.cell_signs[c * self.n_local..(c + 1) * self.n_local]
    }

    /// Global index of moment `j` on the `m`-simplex `face`.
    pub fn face_dof(&self, m: usize, face: usize, j: usize) -> usize {
        self.offsets[m] + face * self.per_face[m] + j
    }

    /// Index ranges of the DOFs attached to each mesh simplex.
    pub fn dof_groups(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        for m in 0..=self.mesh.dim() {
            let n = self.per_face[m];
            if n == 0 {
                continue;
            }
            for g in 0..self.mesh.n_simplices(m) {
                let start = self.face_dof(m, g, 0);
                out.push(start..start + n);
            }
        }
        out
    }

    pub fn is_constrained(&self, i: usize) -> bool {
        self.constrained[i]
    }

    pub fn n_constrained(&self) -> usize {
        self.n_dofs - self.free.len()
    }

    pub fn prescribed(&self) -> &[f64] {
        &self.prescribed
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    /// Position of a DOF among the free ones.
    pub fn free_index(&self, i: usize) -> Option<usize> {
        let l = self.free_index[i];
        (l != usize::MAX).then_some(l)
    }

    pub fn restrict(&self, v: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| v[i]).collect()
    }

    /// Full coefficient vector from free values, with prescribed values elsewhere.
    pub fn extend(&self, free_values: &[f64]) -> Vec<f64> {
        let mut out = self.prescribed.clone();
        for (&i, &v) in self.free.iter().zip(free_values) {
            out[i] = v;
        }
        out
    }

    /// Apply the DOF functionals to a field given by its physical form components.
    pub fn interpolate(&self, field: &(dyn Fn(&[f64; 3]) -> Vec<f64> + Sync)) -> Vec<f64> {
        let mesh = &*self.mesh;
        let order = (2 * self.family.r + 6).min(MAX_ORDER);
        let mut out = vec![0.0; self.n_dofs];
        for m in 0..=mesh.dim() {
            let n = self.per_face[m];
            if n == 0 {
                continue;
            }
            let rule = quadrature(m, order).expect("order within range");
            let vals: Vec<Vec<f64>> = (0..mesh.n_simplices(m))
                .into_par_iter()
                .map(|g| {
                    let pts = mesh.simplex_points(m, g);
                    self.basis.face_moments(&pts, field, &rule)
                })
                .collect();
            for (g, v) in vals.into_iter().enumerate() {
                let start = self.face_dof(m, g, 0);
                out[start..start + n].copy_from_slice(&v);
            }
        }
        out
    }

    /// Interpolate a vector field through the space's identification.
    pub fn interpolate_vector(&self, field: &(dyn Fn(&[f64; 3]) -> Vec<f64> + Sync)) -> Vec<f64> {
        let (dim, k, id) = (self.mesh.dim(), self.degree(), self.identification);
        self.interpolate(&|x| vector_to_form(dim, k, id, &field(x)))
    }

    /// Physical form components of `coeffs` at reference point `xi` of cell `c`.
    pub fn eval_cell(&self, coeffs: &[f64], c: usize, xi: &[f64; 3]) -> Vec<f64> {
        let geo = CellGeometry::new(&self.mesh, c);
        let vals = self.basis.eval(xi);
        let nc = self.n_comps();
        let mut ref_val = vec![0.0; nc];
        for (l, &g) in self.cell_dofs(c).iter().enumerate() {
            for q in 0..nc {
                ref_val[q] += coeffs[g] * vals[l][q];
            }
        }
        push(&geo.pushforward(self.degree()), &ref_val)
    }

    /// Physical components of `d(coeffs)` at a reference point of cell `c`.
    pub fn eval_cell_d(&self, coeffs: &[f64], c: usize, xi: &[f64; 3]) -> Vec<f64> {
        let geo = CellGeometry::new(&self.mesh, c);
        let vals = self.basis.eval_d(xi);
        let nc = self.basis.n_dcomps();
        let mut ref_val = vec![0.0; nc];
        for (l, &g) in self.cell_dofs(c).iter().enumerate() {
            for q in 0..nc {
                ref_val[q] += coeffs[g] * vals[l][q];
            }
        }
        push(&geo.pushforward(self.degree() + 1), &ref_val)
    }

    /// Form components at a physical point, searching for a containing cell.
    pub fn eval_at(&self, coeffs: &[f64], x: &[f64; 3]) -> Option<Vec<f64>> {
        let dim = self.mesh.dim();
        (0..self.mesh.n_cells()).find_map(|c| {
            let geo = CellGeometry::new(&self.mesh, c);
            let xi = geo.inverse_map(x);
            let s: f64 = xi[..dim].iter().sum();
            let inside = xi[..dim].iter().all(|&t| t >= -1e-12) && s <= 1.0 + 1e-12;
            inside.then(|| self.eval_cell(coeffs, c, &xi))
        })
    }

    /// Form components at every mesh vertex, averaged over the cells around it.
    pub fn sample_vertices(&self, coeffs: &[f64]) -> Vec<Vec<f64>> {
        let mesh = &*self.mesh;
        let nc = self.n_comps();
        let mut sum = vec![vec![0.0; nc]; mesh.n_vertices()];
        let mut count = vec![0usize; mesh.n_vertices()];
        for c in 0..mesh.n_cells() {
            for (i, &v) in mesh.cell(c).iter().enumerate() {
                let mut xi = [0.0; 3];
                if i > 0 {
                    xi[i - 1] = 1.0;
                }
                let val = self.eval_cell(coeffs, c, &xi);
                for q in 0..nc {
                    sum[v][q] += val[q];
                }
                count[v] += 1;
            }
        }
        for (s, &n) in sum.iter_mut().zip(&count) {
            for x in s.iter_mut() {
                *x /= n.max(1) as f64;
            }
        }
        sum
    }
}

pub(crate) fn push(p: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    p.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Build the spaces of a sequence on one mesh, all with the same boundary regime.
pub fn build_sequence(
    mesh: &Arc<SimplicialMesh>,
    spec: &SequenceSpec,
    bc: &BoundaryCondition,
) -> Result<Vec<FormSpace>> {
    spec.validate(mesh.dim())?;
    spec.families
        .iter()
        .map(|&f| FormSpace::new(mesh.clone(), f, bc))
        .collect()
}

fn inclusion_entries(src: &FormSpace, dst: &FormSpace) -> Result<BTreeMap<(usize, usize), Q>> {
    if !Arc::ptr_eq(&src.mesh, &dst.mesh) && src.mesh.simplex_counts() != dst.mesh.simplex_counts() {
        return Err(Error::InvalidSequence("spaces live on different meshes".into()));
    }
    let local = local_derivative_inclusion(&src.basis, &dst.basis)?;
    let mut out: BTreeMap<(usize, usize), Q> = BTreeMap::new();
    for c in 0..src.mesh.n_cells() {
        let (sd, dd) = (src.cell_dofs(c), dst.cell_dofs(c));
        for (i, &gi) in dd.iter().enumerate() {
            for (j, &gj) in sd.iter().enumerate() {
                let v = local.get(i, j);
                if num_traits::Zero::is_zero(v) {
                    continue;
                }
                match out.get(&(gi, gj)) {
                    Some(prev) if prev != v => {
                        return Err(Error::InvalidSequence(format!(
                            "inconsistent inclusion entry at ({gi}, {gj})"
                        )))
                    }
                    Some(_) => {}
                    None => {
                        out.insert((gi, gj), v.clone());
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Global inclusion `G` with `d(φ_j^src) = Σ_i G_ij φ_i^dst`, in exact arithmetic.
pub fn global_inclusion_exact(src: &FormSpace, dst: &FormSpace) -> Result<BTreeMap<(usize, usize), Q>> {
    inclusion_entries(src, dst)
}

/// Global inclusion matrix in floating point, shape `dst.n_dofs x src.n_dofs`.
pub fn global_inclusion(src: &FormSpace, dst: &FormSpace) -> Result<CsrMatrix> {
    let entries = inclusion_entries(src, dst)?;
    let mut t = Triplets::with_capacity(dst.n_dofs, src.n_dofs, entries.len());
    for ((i, j), v) in entries {
        t.push(i, j, crate::elements::poly::to_f64(&v));
    }
    Ok(t.into_csr())
}
