//! Numerical laboratory for the spatially variable-order subdiffusion model
//!
//! ```text
//! rho(x) d_t^{alpha(x)} U - div(sigma grad U) + q U = 0   in (0,oo) x Omega
//! U = g = sum_k t^k phi_k                                  on the boundary
//! U(0) = 0
//! ```
//!
//! For each Laplace frequency `p > 0` the transform `Uhat(p,.)` solves an
//! elliptic problem with reaction `q + rho p^alpha`, so the boundary flux
//! `sigma dUhat/dnu` carries information about the order field `alpha(x)`.
//! This crate provides, on 2D triangulations:
//!
//! - P1 finite-element solvers for all the elliptic problems involved, with a
//!   variationally consistent boundary flux ([`elliptic`]);
//! - the Laplace-domain forward map: flux curves at a boundary point and the
//!   `t e^{-t}`-weighted boundary data ([`forward`]);
//! - the expansion cascades of the flux at `p -> 0` and `p -> 1`, with
//!   remainder-rate probes ([`asymptotics`]);
//! - order-recovery algorithms: exponent peeling from one-point flux curves,
//!   linearized full-boundary recovery, monotonicity probes, and an empirical
//!   stability constant ([`inverse`]);
//! - an L1 time-stepping scheme for the variable-order Caputo derivative used
//!   to cross-validate the Laplace-domain computations ([`timedomain`]);
//! - a JSON-configured experiment runner backing the `varorder` binary
//!   ([`config`], [`experiments`]) and the acceptance suite ([`verification`]).
//!
//! Meshes, fields, and assembled systems are immutable after construction and
//! safe to share across threads; sweeps over frequency grids run as parallel
//! maps with deterministic output order.

pub mod asymptotics;
pub mod config;
pub mod elliptic;
pub mod error;
pub mod experiments;
pub mod forward;
pub mod geometry;
pub mod inverse;
pub mod special;
pub mod timedomain;
pub mod verification;

pub use error::{Error, Result};
