//! Conversion between vector fields and form components.
//!
//! Components are ordered by the lexicographic index sets of `dx_I`. In two
//! dimensions a 1-form is read as a vector either directly (`CurlProxy`) or
//! after a quarter rotation (`DivProxy`). In three dimensions 1-forms are read
//! directly and 2-forms through the Hodge star.

use crate::error::{Error, Result};

/// How a 2D 1-form is read as a vector field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Identification {
    /// `u = u_x dx + u_y dy`; `d` acts as the scalar curl.
    CurlProxy,
    /// `u = -u_y dx + u_x dy`; `d` acts as the divergence.
    DivProxy,
    #[default]
    None,
}

impl Identification {
    /// The other 2D identification; used when a face field is projected onto
    /// edge elements and back.
    pub fn swapped(self) -> Self {
        match self {
            Identification::CurlProxy => Identification::DivProxy,
            Identification::DivProxy => Identification::CurlProxy,
            Identification::None => Identification::None,
        }
    }
}

impl std::fmt::Display for Identification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Identification::CurlProxy => "curl",
            Identification::DivProxy => "div",
            Identification::None => "none",
        })
    }
}

impl std::str::FromStr for Identification {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "curl" | "curlproxy" | "curl-proxy" => Ok(Identification::CurlProxy),
            "div" | "divproxy" | "div-proxy" => Ok(Identification::DivProxy),
            "none" | "" => Ok(Identification::None),
            other => Err(Error::invalid(format!("unknown identification '{other}'"))),
        }
    }
}

/// Form components of a vector (or scalar) field value.
pub fn vector_to_form(dim: usize, k: usize, ident: Identification, v: &[f64]) -> Vec<f64> {
    match (dim, k) {
        (_, 0) => vec![v[0]],
        (2, 2) | (3, 3) => vec![v[0]],
        (2, 1) => match ident {
            Identification::DivProxy => vec![-v[1], v[0]],
            _ => vec![v[0], v[1]],
        },
        (3, 1) => vec![v[0], v[1], v[2]],
        (3, 2) => vec![v[2], -v[1], v[0]],
        _ => panic!("no proxy for {k}-forms in dimension {dim}"),
    }
}

/// Vector (or scalar) value of form components; inverse of [`vector_to_form`].
pub fn form_to_vector(dim: usize, k: usize, ident: Identification, c: &[f64]) -> Vec<f64> {
    match (dim, k) {
        (_, 0) => vec![c[0]],
        (2, 2) | (3, 3) => vec![c[0]],
        (2, 1) => match ident {
            Identification::DivProxy => vec![c[1], -c[0]],
            _ => vec![c[0], c[1]],
        },
        (3, 1) => vec![c[0], c[1], c[2]],
        (3, 2) => vec![c[2], -c[1], c[0]],
        _ => panic!("no proxy for {k}-forms in dimension {dim}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let v = [0.3, -1.2, 2.5];
        for (dim, k) in [(2, 0), (2, 1), (2, 2), (3, 0), (3, 1), (3, 2), (3, 3)] {
            for id in [Identification::CurlProxy, Identification::DivProxy] {
                let n = if k == 0 || k == dim { 1 } else { dim };
                let c = vector_to_form(dim, k, id, &v[..n]);
                assert_eq!(form_to_vector(dim, k, id, &c), v[..n].to_vec());
            }
        }
    }

    #[test]
    fn quarter_rotation() {
        // The div identification of v is the curl identification of v rotated by -90 degrees.
        let v = [0.7, 0.2];
        let a = vector_to_form(2, 1, Identification::DivProxy, &v);
        let b = vector_to_form(2, 1, Identification::CurlProxy, &[-v[1], v[0]]);
        assert_eq!(a, b);
        assert_eq!("div".parse::<Identification>().unwrap(), Identification::DivProxy);
        assert!("sideways".parse::<Identification>().is_err());
    }
}
