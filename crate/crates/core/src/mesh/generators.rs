use std::collections::HashMap;
use std::f64::consts::PI;

use super::SimplicialMesh;
use crate::error::{Error, Result};

const EPS: f64 = 1e-10;

/// The reference triangle or tetrahedron as a one-cell mesh.
pub fn reference_simplex(dim: usize) -> SimplicialMesh {
    let mut coords = vec![0.0; dim * (dim + 1)];
    for i in 0..dim {
        coords[(i + 1) * dim + i] = 1.0;
    }
    SimplicialMesh::from_cells(dim, coords, &[(0..=dim).collect()]).expect("reference simplex")
}

fn side_tag_2d(c: &[f64]) -> i32 {
    if c[0] < EPS {
        1
    } else if c[0] > 1.0 - EPS {
        2
    } else if c[1] < EPS {
        3
    } else {
        4
    }
}

fn side_tag_3d(c: &[f64]) -> i32 {
    for (axis, &x) in c.iter().enumerate() {
        if x < EPS {
            return 2 * axis as i32 + 1;
        }
        if x > 1.0 - EPS {
            return 2 * axis as i32 + 2;
        }
    }
    0
}

/// Structured triangulation of the unit square: `n x n` squares split along
/// alternating diagonals, `(i, j)-(i+1, j+1)` when `i + j` is even and
/// `(i+1, j)-(i, j+1)` otherwise.
///
/// Tags: left 1, right 2, bottom 3, top 4.
pub fn build_unit_square(n: usize) -> Result<SimplicialMesh> {
    if n == 0 {
        return Err(Error::invalid("unit square needs n >= 1"));
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut coords = Vec::with_capacity(2 * (n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            coords.push(i as f64 / n as f64);
            coords.push(j as f64 / n as f64);
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if (i + j) % 2 == 0 {
                cells.push(vec![a, b, c]);
                cells.push(vec![a, c, d]);
            } else {
                cells.push(vec![a, b, d]);
                cells.push(vec![b, c, d]);
            }
        }
    }
    Ok(SimplicialMesh::from_cells(2, coords, &cells)?.with_tags_by(side_tag_2d))
}

/// Kuhn tetrahedra of the grid cube with lower corner `(i, j, k)`, given a
/// vertex index function. The split is mirrored along every axis whose cube
/// index is odd, so neighbouring cubes are reflections of each other.
fn kuhn_cells(i: usize, j: usize, k: usize, idx: &dyn Fn(usize, usize, usize) -> usize) -> Vec<Vec<usize>> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let base = [i, j, k];
    let corner = |o: [usize; 3]| {
        let p: Vec<usize> = (0..3)
            .map(|a| base[a] + if base[a] % 2 == 1 { 1 - o[a] } else { o[a] })
            .collect();
        idx(p[0], p[1], p[2])
    };
    PERMS
        .iter()
        .map(|perm| {
            let mut o = [0; 3];
            let mut cell = vec![corner(o)];
            for &axis in perm {
                o[axis] = 1;
                cell.push(corner(o));
            }
            cell
        })
        .collect()
}

/// Subdivision of the unit cube into `6 n^3` tetrahedra, mirrored Kuhn cubes.
///
/// Tags: x=0 1, x=1 2, y=0 3, y=1 4, z=0 5, z=1 6.
pub fn build_unit_cube(n: usize) -> Result<SimplicialMesh> {
    if n == 0 {
        return Err(Error::invalid("unit cube needs n >= 1"));
    }
    let m = n + 1;
    let idx = move |i: usize, j: usize, k: usize| (k * m + j) * m + i;
    let mut coords = Vec::with_capacity(3 * m * m * m);
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                coords.extend_from_slice(&[i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64]);
            }
        }
    }
    let mut cells = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                cells.extend(kuhn_cells(i, j, k, &idx));
            }
        }
    }
    Ok(SimplicialMesh::from_cells(3, coords, &cells)?.with_tags_by(side_tag_3d))
}

/// Unit cube with the central cube `[1/3, 2/3]^3` removed, on a Kuhn grid of
/// `3n` cells per side. Outer faces are tagged as in [`build_unit_cube`], the
/// inner void boundary gets tag 7.
pub fn build_hollow_cube(n: usize) -> Result<SimplicialMesh> {
    if n == 0 {
        return Err(Error::invalid("hollow cube needs n >= 1"));
    }
    let g = 3 * n;
    let hole = |i: usize| i >= n && i < 2 * n;
    let mut cells_raw = Vec::new();
    let full = |i: usize, j: usize, k: usize| (k * (g + 1) + j) * (g + 1) + i;
    for k in 0..g {
        for j in 0..g {
            for i in 0..g {
                if hole(i) && hole(j) && hole(k) {
                    continue;
                }
                cells_raw.extend(kuhn_cells(i, j, k, &full));
            }
        }
    }
    let mut renum = HashMap::new();
    let mut coords = Vec::new();
    let mut cells = Vec::with_capacity(cells_raw.len());
    for cell in cells_raw {
        let mapped = cell
            .iter()
            .map(|&v| {
                *renum.entry(v).or_insert_with(|| {
                    let i = v % (g + 1);
                    let j = (v / (g + 1)) % (g + 1);
                    let k = v / ((g + 1) * (g + 1));
                    coords.extend_from_slice(&[i as f64 / g as f64, j as f64 / g as f64, k as f64 / g as f64]);
                    coords.len() / 3 - 1
                })
            })
            .collect();
        cells.push(mapped);
    }
    let mesh = SimplicialMesh::from_cells(3, coords, &cells)?;
    let (lo, hi) = (1.0 / 3.0 - EPS, 2.0 / 3.0 + EPS);
    Ok(mesh.with_tags_by(move |c| {
        let inner = c.iter().all(|&x| x > lo && x < hi);
        if inner {
            7
        } else {
            side_tag_3d(c)
        }
    }))
}

/// Layered ring between two closed polylines sampled with the same number of
/// points. Returns cells referencing `ring(l, j)` vertex ids.
fn ring_cells(layers: usize, cols: usize, id: &dyn Fn(usize, usize) -> usize) -> Vec<Vec<usize>> {
    let mut cells = Vec::with_capacity(2 * layers * cols);
    for l in 0..layers {
        for j in 0..cols {
            let jn = (j + 1) % cols;
            let (a, b, c, d) = (id(l, j), id(l, jn), id(l + 1, jn), id(l + 1, j));
            cells.push(vec![a, b, c]);
            cells.push(vec![a, c, d]);
        }
    }
    cells
}

/// Annulus `r_in <= |x| <= r_out` with `n` points per circle and enough
/// radial layers to keep cells roughly isotropic.
///
/// Tags: inner circle 1, outer circle 2.
pub fn build_annulus(r_in: f64, r_out: f64, n: usize) -> Result<SimplicialMesh> {
    if !(r_in > 0.0 && r_in < r_out) || !r_out.is_finite() {
        return Err(Error::invalid(format!(
            "annulus needs 0 < r_in < r_out, got {r_in}, {r_out}"
        )));
    }
    if n < 8 {
        return Err(Error::invalid("annulus needs n >= 8"));
    }
    let r_mid = 0.5 * (r_in + r_out);
    let spacing = 2.0 * PI * r_mid / n as f64;
    let layers = (((r_out - r_in) / spacing) - 1e-9).ceil().max(1.0) as usize;
    let mut coords = Vec::with_capacity(2 * n * (layers + 1));
    for l in 0..=layers {
        let r = r_in + (r_out - r_in) * l as f64 / layers as f64;
        for j in 0..n {
            let t = 2.0 * PI * j as f64 / n as f64;
            coords.push(r * t.cos());
            coords.push(r * t.sin());
        }
    }
    let cells = ring_cells(layers, n, &|l, j| l * n + j);
    let mesh = SimplicialMesh::from_cells(2, coords, &cells)?;
    Ok(mesh.with_tags_by(move |c| if c[0].hypot(c[1]) < r_mid { 1 } else { 2 }))
}

/// The rectangle `[0,2] x [0,1]` with circular holes of radius 1/4 centred at
/// `(1/2, 1/2)` and `(3/2, 1/2)`. Each unit square is meshed as a layered ring
/// between its hole and its outline; `n` (rounded up to a multiple of 8) is the
/// number of points per hole.
///
/// Tags: left hole 1, right hole 2, outer rectangle 3.
pub fn build_two_hole_disk(n: usize) -> Result<SimplicialMesh> {
    if n < 8 {
        return Err(Error::invalid("two-hole disk needs n >= 8"));
    }
    let pts = n.div_ceil(8) * 8;
    let radius = 0.25;
    let spacing = 2.0 * PI * 0.375 / pts as f64;
    let layers = ((0.25 / spacing) - 1e-9).ceil().max(1.0) as usize;
    let mut coords: Vec<f64> = Vec::new();
    let mut dedup: HashMap<(i64, i64), usize> = HashMap::new();
    let mut add = |x: f64, y: f64, coords: &mut Vec<f64>| -> usize {
        let key = ((x * 1e9).round() as i64, (y * 1e9).round() as i64);
        *dedup.entry(key).or_insert_with(|| {
            coords.push(x);
            coords.push(y);
            coords.len() / 2 - 1
        })
    };
    let mut cells = Vec::new();
    for cx in [0.5, 1.5] {
        let mut ids = vec![vec![0usize; pts]; layers + 1];
        for j in 0..pts {
            let t = 2.0 * PI * j as f64 / pts as f64;
            let (ct, st) = (t.cos(), t.sin());
            let s = 0.5 / ct.abs().max(st.abs());
            let inner = (cx + radius * ct, 0.5 + radius * st);
            let outer = (cx + s * ct, 0.5 + s * st);
            for (l, row) in ids.iter_mut().enumerate() {
                let w = l as f64 / layers as f64;
                let x = if l == layers {
                    outer.0
                } else {
                    inner.0 + w * (outer.0 - inner.0)
                };
                let y = if l == layers {
                    outer.1
                } else {
                    inner.1 + w * (outer.1 - inner.1)
                };
                row[j] = add(x, y, &mut coords);
            }
        }
        cells.extend(ring_cells(layers, pts, &|l, j| ids[l][j]));
    }
    let mesh = SimplicialMesh::from_cells(2, coords, &cells)?;
    Ok(mesh.with_tags_by(|c| {
        if (c[0] - 0.5).hypot(c[1] - 0.5) < 0.4 {
            1
        } else if (c[0] - 1.5).hypot(c[1] - 0.5) < 0.4 {
            2
        } else {
            3
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_counts() {
        let m = build_unit_square(1).unwrap();
        assert_eq!(m.simplex_counts(), vec![4, 5, 2]);
        let m = build_unit_square(2).unwrap();
        assert_eq!(m.simplex_counts(), vec![9, 16, 8]);
        assert_eq!(m.euler_characteristic(), 1);
        let m = build_unit_square(10).unwrap();
        assert!((m.h_max() - 0.1414).abs() < 1e-4);
        assert_eq!(m.boundary_tags(), vec![1, 2, 3, 4]);
        assert_eq!(m.facets_with_tags(&[1]).len(), 10);
        assert!(build_unit_square(0).is_err());
    }

    #[test]
    fn unit_cube_counts() {
        let m = build_unit_cube(1).unwrap();
        assert_eq!(m.n_cells(), 6);
        assert_eq!(m.n_vertices(), 8);
        assert_eq!(build_unit_cube(2).unwrap().euler_characteristic(), 1);
        let m = build_unit_cube(5).unwrap();
        assert!((m.h_max() - 0.3464).abs() < 1e-4);
        assert_eq!(m.boundary_tags(), vec![1, 2, 3, 4, 5, 6]);
        assert!((0..m.n_cells()).all(|c| m.oriented_volume(c) > 0.0));
        assert!(build_unit_cube(0).is_err());
    }

    #[test]
    fn annulus_geometry() {
        let m = build_annulus(0.5, 1.0, 16).unwrap();
        assert_eq!(m.euler_characteristic(), 0);
        assert_eq!(m.boundary_component_count(), 2);
        let m = build_annulus(0.25, 1.0, 32).unwrap();
        for v in 0..m.n_vertices() {
            let p = m.vertex(v);
            let r = p[0].hypot(p[1]);
            assert!((0.25 - 1e-12..=1.0 + 1e-12).contains(&r));
        }
        assert!(build_annulus(1.0, 0.5, 16).is_err());
        assert!(build_annulus(0.5, 1.0, 4).is_err());
    }

    #[test]
    fn two_hole_disk_geometry() {
        let m = build_two_hole_disk(16).unwrap();
        assert_eq!(m.euler_characteristic(), -1);
        assert_eq!(build_two_hole_disk(32).unwrap().boundary_component_count(), 3);
        assert_eq!(m.boundary_tags(), vec![1, 2, 3]);
        let area: f64 = (0..m.n_cells()).map(|c| m.cell_volume(c)).sum();
        // Polygonal holes are slightly smaller than discs.
        assert!(area > 2.0 - 2.0 * PI / 16.0 && area < 2.0 - 0.9 * 2.0 * PI / 16.0);
    }

    #[test]
    fn hollow_cube_shape() {
        let m = build_hollow_cube(1).unwrap();
        assert_eq!(m.n_cells(), 6 * 26);
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.boundary_component_count(), 2);
        assert_eq!(m.facets_with_tags(&[7]).len(), 12);
    }
}
