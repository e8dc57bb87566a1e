//! Named generator domains with a resolution parameter.

use std::fmt;
use std::str::FromStr;

use super::generators::{build_annulus, build_hollow_cube, build_two_hole_disk, build_unit_cube, build_unit_square};
use super::SimplicialMesh;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    UnitSquare(usize),
    UnitCube(usize),
    HollowCube(usize),
    Annulus { r_in: f64, r_out: f64, n: usize },
    TwoHoleDisk(usize),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::UnitCube(_) | Domain::HollowCube(_) => 3,
            _ => 2,
        }
    }

    pub fn resolution(&self) -> usize {
        match *self {
            Domain::UnitSquare(n) | Domain::UnitCube(n) | Domain::HollowCube(n) | Domain::TwoHoleDisk(n) => n,
            Domain::Annulus { n, .. } => n,
        }
    }

    /// The same domain with resolution `n * 2^level`.
    pub fn at_level(&self, level: usize) -> Self {
        let f = 1usize << level;
        match self.clone() {
            Domain::UnitSquare(n) => Domain::UnitSquare(n * f),
            Domain::UnitCube(n) => Domain::UnitCube(n * f),
            Domain::HollowCube(n) => Domain::HollowCube(n * f),
            Domain::TwoHoleDisk(n) => Domain::TwoHoleDisk(n * f),
            Domain::Annulus { r_in, r_out, n } => Domain::Annulus { r_in, r_out, n: n * f },
        }
    }

    pub fn build(&self) -> Result<SimplicialMesh> {
        match *self {
            Domain::UnitSquare(n) => build_unit_square(n),
            Domain::UnitCube(n) => build_unit_cube(n),
            Domain::HollowCube(n) => build_hollow_cube(n),
            Domain::TwoHoleDisk(n) => build_two_hole_disk(n),
            Domain::Annulus { r_in, r_out, n } => build_annulus(r_in, r_out, n),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::UnitSquare(n) => write!(f, "unit_square({n})"),
            Domain::UnitCube(n) => write!(f, "unit_cube({n})"),
            Domain::HollowCube(n) => write!(f, "hollow_cube({n})"),
            Domain::TwoHoleDisk(n) => write!(f, "two_hole_disk({n})"),
            Domain::Annulus { r_in, r_out, n } => write!(f, "annulus({r_in},{r_out},{n})"),
        }
    }
}

impl FromStr for Domain {
    type Err = Error;

    /// Parses `name(args)`, e.g. `unit_square(10)` or `annulus(0.5,1,32)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("cannot parse domain '{s}'"));
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args = rest.strip_suffix(')').ok_or_else(bad)?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        let int = |i: usize| -> Result<usize> { args.get(i).and_then(|a| a.parse().ok()).ok_or_else(bad) };
        let float = |i: usize| -> Result<f64> { args.get(i).and_then(|a| a.parse().ok()).ok_or_else(bad) };
        let arity = |n: usize| if args.len() == n { Ok(()) } else { Err(bad()) };
        match name.trim() {
            "unit_square" => arity(1).and(Ok(Domain::UnitSquare(int(0)?))),
            "unit_cube" => arity(1).and(Ok(Domain::UnitCube(int(0)?))),
            "hollow_cube" => arity(1).and(Ok(Domain::HollowCube(int(0)?))),
            "two_hole_disk" => arity(1).and(Ok(Domain::TwoHoleDisk(int(0)?))),
            "annulus" => arity(3).and(Ok(Domain::Annulus {
                r_in: float(0)?,
                r_out: float(1)?,
                n: int(2)?,
            })),
            _ => Err(bad()),
        }
    }
}
