//! Sparse storage and the two solvers the scheme needs: preconditioned CG
//! for the phase-field system and a direct saddle-point solve for Stokes.

mod cg;
mod csr;
mod saddle;

pub use cg::{cg_solve, cg_solve_from, CgSolution};
pub use csr::{dot, norm2, CsrMatrix};
pub use saddle::{saddle_solve, SaddleSolution, SaddleSystem};

/// Default relative tolerance for both solvers.
pub const DEFAULT_TOL: f64 = 1e-10;
