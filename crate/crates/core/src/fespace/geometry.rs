//! Affine cell maps and the pushforward of form components.

use crate::combinatorics::subsets;
use crate::elements::poly::minor;
use crate::mesh::SimplicialMesh;

/// Affine map `x = x0 + J xi` of a cell with vertices in sorted order.
#[derive(Clone, Debug)]
pub struct CellGeometry {
    pub dim: usize,
    pub x0: [f64; 3],
    pub jac: [[f64; 3]; 3],
    pub jinv: [[f64; 3]; 3],
    /// Signed determinant of `J`.
    pub det: f64,
}

impl CellGeometry {
    pub fn new(mesh: &SimplicialMesh, c: usize) -> Self {
        let dim = mesh.dim();
        let p = mesh.cell_points(c);
        let mut jac = [[0.0; 3]; 3];
        for j in 0..dim {
            for i in 0..dim {
                jac[i][j] = p[j + 1][i] - p[0][i];
            }
        }
        let det = mesh.jacobian_det(c);
        let mut jinv = [[0.0; 3]; 3];
        if dim == 2 {
            jinv[0][0] = jac[1][1] / det;
            jinv[0][1] = -jac[0][1] / det;
            jinv[1][0] = -jac[1][0] / det;
            jinv[1][1] = jac[0][0] / det;
        } else {
            for i in 0..3 {
                for j in 0..3 {
                    // Cofactor transpose.
                    let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                    let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                    jinv[i][j] = (jac[r0][c0] * jac[r1][c1] - jac[r0][c1] * jac[r1][c0]) / det;
                }
            }
        }
        Self {
            dim,
            x0: p[0],
            jac,
            jinv,
            det,
        }
    }

    pub fn map(&self, xi: &[f64; 3]) -> [f64; 3] {
        let mut x = self.x0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                x[i] += self.jac[i][j] * xi[j];
            }
        }
        x
    }

    /// Reference coordinates of a physical point.
    pub fn inverse_map(&self, x: &[f64; 3]) -> [f64; 3] {
        let mut xi = [0.0; 3];
        for i in 0..self.dim {
            for j in 0..self.dim {
                xi[i] += self.jinv[i][j] * (x[j] - self.x0[j]);
            }
        }
        xi
    }

    pub fn abs_det(&self) -> f64 {
        self.det.abs()
    }

    /// Matrix `P` with `u_K = sum_I P[K][I] û_I` for the pushforward of a
    /// reference `k`-form: `P[K][I] = det(J^{-1}[I, K])`.
    pub fn pushforward(&self, k: usize) -> Vec<Vec<f64>> {
        let sets = subsets(self.dim, k);
        sets.iter()
            .map(|ks| sets.iter().map(|is| minor(&self.jinv, is, ks)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_unit_cube;

    #[test]
    fn inverse_is_inverse() {
        let m = build_unit_cube(1).unwrap();
        for c in 0..m.n_cells() {
            let g = CellGeometry::new(&m, c);
            for i in 0..3 {
                for j in 0..3 {
                    let s: f64 = (0..3).map(|l| g.jac[i][l] * g.jinv[l][j]).sum();
                    assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
                }
            }
            let xi = [0.2, 0.3, 0.1];
            let back = g.inverse_map(&g.map(&xi));
            for i in 0..3 {
                assert!((back[i] - xi[i]).abs() < 1e-14);
            }
            let top = g.pushforward(3);
            assert!((top[0][0] - 1.0 / g.det).abs() < 1e-14);
        }
    }
}
