//! Quadrature on reference simplices.
//!
//! Orders 0 and 1 use the centroid. Higher orders use a collapsed
//! (Duffy) tensor product of Gauss-Legendre rules, which is exact for all
//! polynomials up to the requested total degree.

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 40;

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub dim: usize,
    /// Points padded to three coordinates.
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_m(t) and P_m'(t).
            let (mut p0, mut p1) = (1.0, t);
            for j in 2..=m {
                let p2 = ((2 * j - 1) as f64 * t * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - t);
        w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

/// Rule exact for polynomials of total degree `<= order` on the reference
/// simplex of dimension `dim` (0 to 3).
pub fn quadrature(dim: usize, order: usize) -> Result<QuadratureRule> {
    if order > MAX_ORDER {
        return Err(Error::invalid(format!(
            "quadrature order {order} above the supported maximum {MAX_ORDER}"
        )));
    }
    if dim > 3 {
        return Err(Error::invalid(format!("quadrature dimension {dim} not supported")));
    }
    let vol = 1.0 / (1..=dim).product::<usize>() as f64;
    if order <= 1 || dim == 0 {
        let mut p = [0.0; 3];
        for c in p.iter_mut().take(dim) {
            *c = 1.0 / (dim + 1) as f64;
        }
        return Ok(QuadratureRule {
            dim,
            points: vec![p],
            weights: vec![vol],
        });
    }
    let m = (order + dim).div_ceil(2);
    let (x, w) = gauss_legendre(m);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match dim {
        1 => {
            for i in 0..m {
                points.push([x[i], 0.0, 0.0]);
                weights.push(w[i]);
            }
        }
        2 => {
            for i in 0..m {
                for j in 0..m {
                    let (u, v) = (x[i], x[j]);
                    points.push([u, v * (1.0 - u), 0.0]);
                    weights.push(w[i] * w[j] * (1.0 - u));
                }
            }
        }
        _ => {
            for i in 0..m {
                for j in 0..m {
                    for l in 0..m {
                        let (u, v, s) = (x[i], x[j], x[l]);
                        points.push([u, v * (1.0 - u), s * (1.0 - u) * (1.0 - v)]);
                        weights.push(w[i] * w[j] * w[l] * (1.0 - u) * (1.0 - u) * (1.0 - v));
                    }
                }
            }
        }
    }
    Ok(QuadratureRule { dim, points, weights })
}
