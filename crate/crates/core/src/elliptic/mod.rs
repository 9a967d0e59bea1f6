//! P1 finite elements: assembly, direct and iterative SPD solvers, Dirichlet
//! boundary conditions, and variational boundary-flux extraction.

pub mod assemble;
pub mod cholesky;
pub mod flux;
pub mod sparse;

pub use assemble::{
    apply_resolvent, assemble, assemble_load, assemble_with, l2_norm, lumped_mass, max_norm,
    solve_s, AssembledSystem, Load, LoadSpec, Reaction, CG_RELATIVE_TOLERANCE, DIRECT_SOLVER_LIMIT,
};
pub use cholesky::SkylineCholesky;
pub use flux::{boundary_integral, BoundaryFlux};
pub use sparse::{cg_jacobi, CsrMatrix};

/// Relative accuracy expected of a converged solve; downstream noise floors
/// are expressed as multiples of this.
pub const SOLVER_TOLERANCE: f64 = 1e-12;
