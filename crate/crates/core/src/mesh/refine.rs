use std::collections::HashMap;

use super::SimplicialMesh;

/// Red refinement: every triangle into 4, every tetrahedron into 8. The inner
/// octahedron of a tetrahedron is cut along its shortest diagonal (first one
/// on ties). Boundary tags are inherited; new boundary vertices are edge
/// midpoints, so curved boundaries keep their coarse polygonal shape.
pub fn refine_uniform(mesh: &SimplicialMesh) -> SimplicialMesh {
    let dim = mesh.dim();
    let nv = mesh.n_vertices();
    let ne = mesh.n_simplices(1);
    let mut coords = mesh.coords().to_vec();
    coords.reserve(ne * dim);
    for e in 0..ne {
        let s = mesh.simplex(1, e);
        let (a, b) = (mesh.vertex(s[0]), mesh.vertex(s[1]));
        for i in 0..dim {
            coords.push(0.5 * (a[i] + b[i]));
        }
    }
    let mid = |a: usize, b: usize| nv + mesh.find_simplex(&[a.min(b), a.max(b)]).expect("edge");
    let point = |v: usize| &coords[v * dim..(v + 1) * dim];

    let mut cells = Vec::with_capacity(mesh.n_cells() * if dim == 2 { 4 } else { 8 });
    for c in 0..mesh.n_cells() {
        let v = mesh.cell(c);
        if dim == 2 {
            let (m01, m02, m12) = (mid(v[0], v[1]), mid(v[0], v[2]), mid(v[1], v[2]));
            cells.push(vec![v[0], m01, m02]);
            cells.push(vec![v[1], m01, m12]);
            cells.push(vec![v[2], m02, m12]);
            cells.push(vec![m01, m02, m12]);
        } else {
            let m = |i: usize, j: usize| mid(v[i], v[j]);
            let (m01, m02, m03, m12, m13, m23) = (m(0, 1), m(0, 2), m(0, 3), m(1, 2), m(1, 3), m(2, 3));
            cells.push(vec![v[0], m01, m02, m03]);
            cells.push(vec![v[1], m01, m12, m13]);
            cells.push(vec![v[2], m02, m12, m23]);
            cells.push(vec![v[3], m03, m13, m23]);
            let diagonals = [(m01, m23), (m02, m13), (m03, m12)];
            let len =
                |(p, q): (usize, usize)| -> f64 { point(p).iter().zip(point(q)).map(|(a, b)| (a - b).powi(2)).sum() };
            let mut best = 0;
            for d in 1..3 {
                if len(diagonals[d]) < len(diagonals[best]) {
                    best = d;
                }
            }
            let (p, q) = diagonals[best];
            let (a, b) = (diagonals[(best + 1) % 3], diagonals[(best + 2) % 3]);
            let ring = [a.0, b.0, a.1, b.1];
            for i in 0..4 {
                cells.push(vec![p, q, ring[i], ring[(i + 1) % 4]]);
            }
        }
    }

    let mut tags = HashMap::new();
    for (&f, &t) in mesh.boundary_markers() {
        let s = mesh.simplex(dim - 1, f);
        let mut children: Vec<Vec<usize>> = Vec::new();
        if dim == 2 {
            let m = mid(s[0], s[1]);
            children.push(vec![s[0], m]);
            children.push(vec![s[1], m]);
        } else {
            let (m01, m02, m12) = (mid(s[0], s[1]), mid(s[0], s[2]), mid(s[1], s[2]));
            children.push(vec![s[0], m01, m02]);
            children.push(vec![s[1], m01, m12]);
            children.push(vec![s[2], m02, m12]);
            children.push(vec![m01, m02, m12]);
        }
        for mut ch in children {
            ch.sort_unstable();
            tags.insert(ch, t);
        }
    }
    SimplicialMesh::from_cells(dim, coords, &cells)
        .and_then(|m| m.with_facet_tags(&tags))
        .expect("refinement of a valid mesh is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_annulus, build_unit_cube, build_unit_square};

    #[test]
    fn square_refinement_halves_h() {
        let m = build_unit_square(10).unwrap();
        let r = refine_uniform(&m);
        assert_eq!(r.n_cells(), 4 * m.n_cells());
        assert!((r.h_max() - 0.0707).abs() < 1e-4);
        assert_eq!(r.facets_with_tags(&[3]).len(), 20);
        assert_eq!(r.boundary_markers().len(), 2 * m.boundary_markers().len());
    }

    #[test]
    fn cube_refinement_is_conforming() {
        let m = build_unit_cube(2).unwrap();
        let r = refine_uniform(&m);
        assert_eq!(r.n_cells(), 8 * m.n_cells());
        assert!((r.h_max() - m.h_max() / 2.0).abs() < 1e-12);
        let vol: f64 = (0..r.n_cells()).map(|c| r.cell_volume(c)).sum();
        assert!((vol - 1.0).abs() < 1e-12);
        assert_eq!(r.boundary_markers().len(), 4 * m.boundary_markers().len());
        assert!(r.boundary_markers().values().all(|&t| (1..=6).contains(&t)));
        assert_eq!(r.euler_characteristic(), 1);
    }

    #[test]
    fn annulus_refinement_keeps_tags() {
        let m = build_annulus(0.5, 1.0, 16).unwrap();
        let r = refine_uniform(&m);
        assert_eq!(r.facets_with_tags(&[1]).len(), 32);
        assert_eq!(r.euler_characteristic(), 0);
    }
}
