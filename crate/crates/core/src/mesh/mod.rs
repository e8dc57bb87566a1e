//! Oriented simplicial meshes in two and three dimensions.

mod domain;
mod generators;
mod io;
mod refine;
mod topology;

use std::collections::{BTreeMap, HashMap};

pub use domain::Domain;
pub use generators::{
    build_annulus, build_hollow_cube, build_two_hole_disk, build_unit_cube, build_unit_square, reference_simplex,
};
pub use io::{read_mesh, write_mesh};
pub use refine::refine_uniform;
pub use topology::{betti_numbers, exact_rank, incidence_matrix, IncidenceMatrix};

use crate::combinatorics::{binomial, subsets};
use crate::error::{Error, Result};

/// Sorted vertex tuple padded with `usize::MAX`, used as a hash key.
type Key = [usize; 4];

fn key_of(verts: &[usize]) -> Key {
    let mut k = [usize::MAX; 4];
    k[..verts.len()].copy_from_slice(verts);
    k
}

/// A conforming simplicial mesh.
///
/// All simplices are stored with strictly increasing vertex indices. For
/// `k < dim` this sorted order is the orientation. Cells additionally carry the
/// sign of their geometric orientation in sorted order.
#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    dim: usize,
    coords: Vec<f64>,
    /// `simplices[k]` flattened with stride `k + 1`; `simplices[0]` is `0..nv`.
    simplices: Vec<Vec<usize>>,
    lookup: Vec<HashMap<Key, usize>>,
    cell_sign: Vec<i8>,
    /// `cell_faces[m]`: global index of every local `m`-face of every cell,
    /// in the lexicographic order of local vertex subsets.
    cell_faces: Vec<Vec<usize>>,
    /// Number of cells containing each facet.
    facet_degree: Vec<u8>,
    boundary_markers: BTreeMap<usize, i32>,
    h_max: f64,
}

impl SimplicialMesh {
    /// Build a mesh from vertex coordinates (flat, stride `dim`) and cells.
    /// Cell vertex order is irrelevant. Every boundary facet gets tag 0.
    pub fn from_cells(dim: usize, coords: Vec<f64>, cells: &[Vec<usize>]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::invalid(format!("mesh dimension {dim} not in {{2, 3}}")));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid("coordinate array length not a multiple of dim"));
        }
        let nv = coords.len() / dim;
        if cells.is_empty() {
            return Err(Error::invalid("mesh has no cells"));
        }
        let mut sorted_cells = Vec::with_capacity(cells.len() * (dim + 1));
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() != dim + 1 {
                return Err(Error::invalid(format!(
                    "cell {c} has {} vertices, expected {}",
                    cell.len(),
                    dim + 1
                )));
            }
            let mut s = cell.clone();
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) || s[dim] >= nv {
                return Err(Error::invalid(format!("cell {c} has invalid vertices {cell:?}")));
            }
            sorted_cells.extend_from_slice(&s);
        }
        let ncells = cells.len();

        let mut simplices = vec![Vec::new(); dim + 1];
        let mut lookup = vec![HashMap::new(); dim + 1];
        simplices[0] = (0..nv).collect();
        for v in 0..nv {
            lookup[0].insert(key_of(&[v]), v);
        }
        for m in 1..dim {
            let mut all: Vec<Key> = Vec::new();
            for c in 0..ncells {
                let cell = &sorted_cells[c * (dim + 1)..(c + 1) * (dim + 1)];
                for sub in subsets(dim + 1, m + 1) {
                    let verts: Vec<usize> = sub.iter().map(|&i| cell[i]).collect();
                    all.push(key_of(&verts));
                }
            }
            all.sort_unstable();
            all.dedup();
            let mut flat = Vec::with_capacity(all.len() * (m + 1));
            for (i, k) in all.iter().enumerate() {
                flat.extend_from_slice(&k[..m + 1]);
                lookup[m].insert(*k, i);
            }
            simplices[m] = flat;
        }
        // Cells keep their input order.
        for c in 0..ncells {
            lookup[dim].insert(key_of(&sorted_cells[c * (dim + 1)..(c + 1) * (dim + 1)]), c);
        }
        if lookup[dim].len() != ncells {
            return Err(Error::invalid("duplicate cells"));
        }
        simplices[dim] = sorted_cells;

        let mut cell_faces = vec![Vec::new(); dim + 1];
        for m in 0..=dim {
            let subs = subsets(dim + 1, m + 1);
            let mut out = Vec::with_capacity(ncells * subs.len());
            for c in 0..ncells {
                let cell = &simplices[dim][c * (dim + 1)..(c + 1) * (dim + 1)];
                for sub in &subs {
                    let verts: Vec<usize> = sub.iter().map(|&i| cell[i]).collect();
                    out.push(lookup[m][&key_of(&verts)]);
                }
            }
            cell_faces[m] = out;
        }

        let nfacets = simplices[dim - 1].len() / dim;
        let mut facet_degree = vec![0u8; nfacets];
        for &f in &cell_faces[dim - 1] {
            facet_degree[f] = facet_degree[f].saturating_add(1);
        }
        if let Some(f) = facet_degree.iter().position(|&d| d > 2) {
            return Err(Error::invalid(format!("facet {f} shared by more than two cells")));
        }

        let mut mesh = SimplicialMesh {
            dim,
            coords,
            simplices,
            lookup,
            cell_sign: Vec::with_capacity(ncells),
            cell_faces,
            facet_degree,
            boundary_markers: BTreeMap::new(),
            h_max: 0.0,
        };
        for c in 0..ncells {
            let det = mesh.jacobian_det(c);
            if det == 0.0 || !det.is_finite() {
                return Err(Error::invalid(format!("cell {c} is degenerate")));
            }
            mesh.cell_sign.push(if det > 0.0 { 1 } else { -1 });
        }
        mesh.h_max = (0..ncells).map(|c| mesh.cell_diameter(c)).fold(0.0, f64::max);
        for f in 0..nfacets {
            if mesh.facet_degree[f] == 1 {
                mesh.boundary_markers.insert(f, 0);
            }
        }
        Ok(mesh)
    }

    /// Tag boundary facets by a function of their centroid.
    pub fn with_tags_by(mut self, tag: impl Fn(&[f64]) -> i32) -> Self {
        let facets: Vec<usize> = self.boundary_markers.keys().copied().collect();
        for f in facets {
            let c = self.centroid(self.dim - 1, f);
            self.boundary_markers.insert(f, tag(&c));
        }
        self
    }

    /// Tag boundary facets from a map keyed by sorted vertex tuples. Facets not
    /// present keep their current tag.
    pub fn with_facet_tags(mut self, tags: &HashMap<Vec<usize>, i32>) -> Result<Self> {
        for (verts, &t) in tags {
            let f = self
                .find_simplex(verts)
                .ok_or_else(|| Error::invalid(format!("tagged facet {verts:?} is not in the mesh")))?;
            if self.facet_degree.get(f).copied() != Some(1) || verts.len() != self.dim {
                return Err(Error::invalid(format!(
                    "tagged facet {verts:?} is not a boundary facet"
                )));
            }
            self.boundary_markers.insert(f, t);
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.simplices[0].len()
    }

    pub fn n_cells(&self) -> usize {
        self.simplices[self.dim].len() / (self.dim + 1)
    }

    pub fn n_simplices(&self, k: usize) -> usize {
        self.simplices[k].len() / (k + 1)
    }

    /// Simplex counts for `k = 0..=dim`.
    pub fn simplex_counts(&self) -> Vec<usize> {
        (0..=self.dim).map(|k| self.n_simplices(k)).collect()
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Sorted vertex tuple of the `i`-th `k`-simplex.
    pub fn simplex(&self, k: usize, i: usize) -> &[usize] {
        &self.simplices[k][i * (k + 1)..(i + 1) * (k + 1)]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        self.simplex(self.dim, c)
    }

    /// Orientation sign of a simplex relative to its sorted vertex order.
    pub fn orientation(&self, k: usize, i: usize) -> i8 {
        if k == self.dim {
            self.cell_sign[i]
        } else {
            1
        }
    }

    /// Global indices of the local `m`-faces of cell `c`, ordered like the
    /// lexicographic `(m+1)`-subsets of the cell's local vertices.
    pub fn cell_faces(&self, c: usize, m: usize) -> &[usize] {
        let n = binomial(self.dim + 1, m + 1);
        &self.cell_faces[m][c * n..(c + 1) * n]
    }

    /// Index of the simplex with the given sorted vertex tuple.
    pub fn find_simplex(&self, verts: &[usize]) -> Option<usize> {
        if verts.is_empty() || verts.len() > self.dim + 1 {
            return None;
        }
        let mut s = verts.to_vec();
        s.sort_unstable();
        self.lookup[verts.len() - 1].get(&key_of(&s)).copied()
    }

    pub fn boundary_markers(&self) -> &BTreeMap<usize, i32> {
        &self.boundary_markers
    }

    pub fn is_boundary_facet(&self, f: usize) -> bool {
        self.facet_degree[f] == 1
    }

    /// Number of cells sharing facet `f` (1 on the boundary, 2 inside).
    pub fn facet_degree(&self, f: usize) -> usize {
        self.facet_degree[f] as usize
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Coordinates of the vertices of cell `c` in sorted order, padded to 3D.
    pub fn cell_points(&self, c: usize) -> Vec<[f64; 3]> {
        self.simplex_points(self.dim, c)
    }

    pub fn simplex_points(&self, k: usize, i: usize) -> Vec<[f64; 3]> {
        self.simplex(k, i)
            .iter()
            .map(|&v| {
                let mut p = [0.0; 3];
                p[..self.dim].copy_from_slice(self.vertex(v));
                p
            })
            .collect()
    }

    pub fn centroid(&self, k: usize, i: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for &v in self.simplex(k, i) {
            for (a, x) in c.iter_mut().zip(self.vertex(v)) {
                *a += x;
            }
        }
        for a in c.iter_mut() {
            *a /= (k + 1) as f64;
        }
        c
    }

    /// Determinant of `[v1 - v0, ..., vd - v0]` in sorted vertex order.
    pub fn jacobian_det(&self, c: usize) -> f64 {
        let p = self.cell_points(c);
        let e = |i: usize, j: usize| p[i + 1][j] - p[0][j];
        if self.dim == 2 {
            e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0)
        } else {
            e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
        }
    }

    /// Signed volume after orientation correction; positive for valid cells.
    pub fn oriented_volume(&self, c: usize) -> f64 {
        let fact = if self.dim == 2 { 2.0 } else { 6.0 };
        self.cell_sign[c] as f64 * self.jacobian_det(c) / fact
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        self.oriented_volume(c).abs()
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        let p = self.cell_points(c);
        let mut h: f64 = 0.0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                let d2: f64 = (0..3).map(|a| (p[i][a] - p[j][a]).powi(2)).sum();
                h = h.max(d2.sqrt());
            }
        }
        h
    }

    /// Alternating sum of simplex counts.
    pub fn euler_characteristic(&self) -> i64 {
        (0..=self.dim)
            .map(|k| {
                let n = self.n_simplices(k) as i64;
                if k % 2 == 0 {
                    n
                } else {
                    -n
                }
            })
            .sum()
    }

    /// Connected components of the boundary, via shared vertices.
    pub fn boundary_component_count(&self) -> usize {
        let nv = self.n_vertices();
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut on_boundary = vec![false; nv];
        for &f in self.boundary_markers.keys() {
            let verts = self.simplex(self.dim - 1, f);
            for &v in verts {
                on_boundary[v] = true;
            }
            let a = find(&mut parent, verts[0]);
            for &v in &verts[1..] {
                let b = find(&mut parent, v);
                parent[b] = a;
            }
        }
        (0..nv).filter(|&v| on_boundary[v] && find(&mut parent, v) == v).count()
    }

    /// Boundary facets carrying any of the given tags.
    pub fn facets_with_tags(&self, tags: &[i32]) -> Vec<usize> {
        self.boundary_markers
            .iter()
            .filter(|(_, t)| tags.contains(t))
            .map(|(&f, _)| f)
            .collect()
    }

    /// Distinct boundary tags in increasing order.
    pub fn boundary_tags(&self) -> Vec<i32> {
        let mut t: Vec<i32> = self.boundary_markers.values().copied().collect();
        t.sort_unstable();
        t.dedup();
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_triangle_structure() {
        let m = reference_simplex(2);
        assert_eq!(m.simplex_counts(), vec![3, 3, 1]);
        assert_eq!(m.boundary_markers().len(), 3);
        assert!(m.oriented_volume(0) > 0.0);
        assert_eq!(m.cell_faces(0, 1), &[0, 1, 2]);
        assert_eq!(m.find_simplex(&[2, 0]), Some(1));
    }

    #[test]
    fn degenerate_cell_rejected() {
        let r = SimplicialMesh::from_cells(2, vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0], &[vec![0, 1, 2]]);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn nonmanifold_rejected() {
        let coords = vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, -1.0, 1.0, 1.0];
        let cells = vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 1, 4]];
        assert!(SimplicialMesh::from_cells(2, coords, &cells).is_err());
    }

    #[test]
    fn negative_orientation_recorded() {
        // Sorted order (0, 1, 2) is clockwise here.
        let m = SimplicialMesh::from_cells(2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0], &[vec![0, 1, 2]]).unwrap();
        assert_eq!(m.orientation(2, 0), -1);
        assert!(m.oriented_volume(0) > 0.0);
    }
}
