//! Variationally consistent boundary flux.
//!
//! For a discrete solution `u` of `a(u, phi_i) = b_i` (interior i), the
//! conormal flux density `g ~ sigma du/dnu` is defined by
//!
//! ```text
//! int_bdry g phi_i ds = a(u, phi_i) - b_i      for every boundary phi_i,
//! ```
//!
//! and recovered by solving the boundary mass-matrix system. Taking
//! `phi = 1` in the definition turns discrete integration by parts into an
//! exact identity, which the reciprocity checks rely on.

use crate::elliptic::assemble::{AssembledSystem, Load};
use crate::elliptic::cholesky::SkylineCholesky;
use crate::elliptic::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::geometry::{Mesh, ScalarField};

/// Conormal flux density `sigma du/dnu` at the boundary vertices, in
/// `mesh.boundary_vertices()` order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFlux {
    values: Vec<f64>,
}

impl BoundaryFlux {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Flux at a global vertex index (must be on the boundary).
    pub fn at_vertex(&self, mesh: &Mesh, vertex: usize) -> f64 {
        let slot = mesh
            .boundary_slot(vertex)
            .expect("flux requested at a non-boundary vertex");
        self.values[slot]
    }

    /// `int_bdry g ds`, exact for the P1 density (edge trapezoid).
    pub fn integral(&self, mesh: &Mesh) -> f64 {
        boundary_integral(mesh, &self.values)
    }

    /// `int_bdry |g| ds` by the same rule.
    pub fn integral_abs(&self, mesh: &Mesh) -> f64 {
        let abs: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        boundary_integral(mesh, &abs)
    }
}

/// Trapezoid over boundary edges; exact for P1 densities.
pub fn boundary_integral(mesh: &Mesh, density: &[f64]) -> f64 {
    let mut total = 0.0;
    for e in mesh.boundary_edges() {
        let gi = density[mesh.boundary_slot(e.tail).expect("boundary vertex")];
        let gj = density[mesh.boundary_slot(e.head).expect("boundary vertex")];
        total += 0.5 * e.length * (gi + gj);
    }
    total
}

/// Boundary mass matrix and its factorization, built once per system.
pub(crate) struct BoundaryOps {
    mass_factor: SkylineCholesky,
}

impl BoundaryOps {
    pub(crate) fn build(mesh: &Mesh) -> Result<Self> {
        let nb = mesh.boundary_vertices().len();
        if nb == 0 {
            return Err(Error::InvalidMesh("mesh has no boundary".into()));
        }
        let mut triplets = Vec::with_capacity(4 * mesh.boundary_edges().len());
        for e in mesh.boundary_edges() {
            let i = mesh.boundary_slot(e.tail).expect("boundary vertex");
            let j = mesh.boundary_slot(e.head).expect("boundary vertex");
            let sixth = e.length / 6.0;
            triplets.push((i, i, 2.0 * sixth));
            triplets.push((j, j, 2.0 * sixth));
            triplets.push((i, j, sixth));
            triplets.push((j, i, sixth));
        }
        let mass = CsrMatrix::from_triplets(nb, triplets);
        let mass_factor = SkylineCholesky::factor(&mass)?;
        Ok(Self { mass_factor })
    }

    fn recover(&self, residual: &[f64]) -> Vec<f64> {
        self.mass_factor.solve(residual)
    }
}

impl AssembledSystem {
    /// Recovers the conormal boundary flux of `u`, given the load it was
    /// solved with.
    pub fn variational_flux(&self, u: &ScalarField, load: &Load) -> Result<BoundaryFlux> {
        let residual = self.boundary_residual(u, load);
        let values = self.boundary_ops()?.recover(&residual);
        Ok(BoundaryFlux { values })
    }
}
