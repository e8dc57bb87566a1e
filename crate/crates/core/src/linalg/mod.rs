//! Sparse storage, the MINRES solver, a dense oracle and null-space extraction.

pub mod dense;
pub mod minres;
pub mod nullspace;
pub mod precond;
pub mod sparse;

pub use dense::{dense_solve, dense_symmetric_kernel, max_principal_angle};
pub use minres::{least_squares_residual, minres, minres_solve, MinresOptions, SolveReport};
pub use nullspace::{detect_null_space, null_space_basis, null_space_basis_with, NullSpaceOptions};
pub use precond::{block_inverse_factor, BlockJacobi, Preconditioner};
pub use sparse::{axpy, dot, norm2, CsrMatrix, Triplets};
