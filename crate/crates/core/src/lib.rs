//! Mixed finite element solver for the div-curl problem.
//!
//! The problem is posed as the Hodge-Dirac system on a sequence of discrete
//! differential form spaces over a simplicial mesh in two or three dimensions,
//! with harmonic forms handled as an explicit constraint block.

pub mod assembly;
pub mod combinatorics;
pub mod elements;
pub mod error;
pub mod fespace;
pub mod harmonic;
pub mod linalg;
pub mod mesh;
pub mod postproc;
pub mod solver;

pub use error::{Error, Result};
pub use mesh::SimplicialMesh;
