//! Analytic reference fields with their divergence and curl.

use std::f64::consts::PI;
use std::sync::Arc;

type VecFn = Arc<dyn Fn(&[f64; 3]) -> Vec<f64> + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&[f64; 3]) -> f64 + Send + Sync>;

/// A smooth vector field known in closed form together with its derivatives.
///
/// In 2D `curl` returns the single scalar curl; in 3D the curl vector.
#[derive(Clone)]
pub struct ReferenceField {
    pub name: String,
    pub dim: usize,
    pub u: VecFn,
    pub div: ScalarFn,
    pub curl: VecFn,
}

impl std::fmt::Debug for ReferenceField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReferenceField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl ReferenceField {
    /// Look up `refd2` or `refd3` by name.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "refd2" => Some(refd2()),
            "refd3" => Some(refd3()),
            _ => None,
        }
    }

    /// The field rotated by a quarter turn, `(u_x, u_y) -> (-u_y, u_x)`.
    /// Its curl is the divergence of the original field and vice versa up to sign.
    pub fn rotated(&self) -> Self {
        assert_eq!(self.dim, 2, "rotation is defined for planar fields");
        let (u, div, curl) = (self.u.clone(), self.div.clone(), self.curl.clone());
        ReferenceField {
            name: format!("{}-rotated", self.name),
            dim: 2,
            u: Arc::new(move |x| {
                let v = u(x);
                vec![-v[1], v[0]]
            }),
            div: Arc::new(move |x| -curl(x)[0]),
            curl: Arc::new(move |x| vec![div(x)]),
        }
    }

    /// A constant field, with vanishing derivatives.
    pub fn constant(value: Vec<f64>) -> Self {
        let dim = value.len();
        let zero = vec![0.0; if dim == 2 { 1 } else { 3 }];
        ReferenceField {
            name: "constant".into(),
            dim,
            u: Arc::new(move |_| value.clone()),
            div: Arc::new(|_| 0.0),
            curl: Arc::new(move |_| zero.clone()),
        }
    }
}

/// `u = (sin 3πx cos πy, sin πy cos 2πx)` on the unit square.
pub fn refd2() -> ReferenceField {
    ReferenceField {
        name: "refd2".into(),
        dim: 2,
        u: Arc::new(|p| {
            let (x, y) = (p[0], p[1]);
            vec![
                (3.0 * PI * x).sin() * (PI * y).cos(),
                (PI * y).sin() * (2.0 * PI * x).cos(),
            ]
        }),
        div: Arc::new(|p| {
            let (x, y) = (p[0], p[1]);
            3.0 * PI * (3.0 * PI * x).cos() * (PI * y).cos() + PI * (PI * y).cos() * (2.0 * PI * x).cos()
        }),
        curl: Arc::new(|p| {
            let (x, y) = (p[0], p[1]);
            vec![-2.0 * PI * (2.0 * PI * x).sin() * (PI * y).sin() + PI * (3.0 * PI * x).sin() * (PI * y).sin()]
        }),
    }
}

/// `u = (sin 3πx cos πy z, sin πy cos 2πx + z, sin πz cos 3πx cos πy)` on the unit cube.
pub fn refd3() -> ReferenceField {
    ReferenceField {
        name: "refd3".into(),
        dim: 3,
        u: Arc::new(|p| {
            let (x, y, z) = (p[0], p[1], p[2]);
            vec![
                (3.0 * PI * x).sin() * (PI * y).cos() * z,
                (PI * y).sin() * (2.0 * PI * x).cos() + z,
                (PI * z).sin() * (3.0 * PI * x).cos() * (PI * y).cos(),
            ]
        }),
        div: Arc::new(|p| {
            let (x, y, z) = (p[0], p[1], p[2]);
            3.0 * PI * (3.0 * PI * x).cos() * (PI * y).cos() * z
                + PI * (PI * y).cos() * (2.0 * PI * x).cos()
                + PI * (PI * z).cos() * (3.0 * PI * x).cos() * (PI * y).cos()
        }),
        curl: Arc::new(|p| {
            let (x, y, z) = (p[0], p[1], p[2]);
            vec![
                -PI * (PI * z).sin() * (3.0 * PI * x).cos() * (PI * y).sin() - 1.0,
                (3.0 * PI * x).sin() * (PI * y).cos()
                    + 3.0 * PI * (PI * z).sin() * (3.0 * PI * x).sin() * (PI * y).cos(),
                -2.0 * PI * (2.0 * PI * x).sin() * (PI * y).sin() + PI * z * (3.0 * PI * x).sin() * (PI * y).sin(),
            ]
        }),
    }
}
