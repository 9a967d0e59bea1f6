//! Sign and monotonicity probes, and the multi-order distinguishability
//! experiment.

use rayon::prelude::*;

use crate::elliptic::{assemble, assemble_load, Load, LoadSpec, SOLVER_TOLERANCE};
use crate::error::{Error, Result};
use crate::forward::{bare_flux_values, flux_curve, FluxCurve};
use crate::geometry::{BoundaryField, CoefficientSet, Excitation, OrderField};

/// `dnu A^{-1}[ u_{M,0} chi_A ](x0)`: the boundary response at `x0` to the
/// leading-lift source restricted to the tagged triangles.
///
/// For a positive leading profile the value is strictly negative, and it
/// strictly decreases as the tag set grows — the sign mechanism behind the
/// one-point uniqueness arguments.
pub fn hopf_probe(
    cfg: &CoefficientSet,
    excitation: &Excitation,
    subset_tags: &[u32],
    x0: usize,
) -> Result<f64> {
    let slot = cfg
        .mesh
        .boundary_slot(x0)
        .ok_or_else(|| Error::InvalidField(format!("vertex {x0} is not on the boundary")))?;
    let mask: Vec<bool> = cfg
        .mesh
        .triangle_tags()
        .iter()
        .map(|t| subset_tags.contains(t))
        .collect();
    if !mask.iter().any(|&m| m) {
        return Ok(0.0);
    }
    let (m, phi_m) = excitation.terms().last().expect("excitation is nonempty");
    let system = assemble(&cfg.mesh, &cfg.sigma, &cfg.q)?;
    let mut bdata = BoundaryField::zeros(&cfg.mesh);
    bdata.axpy(crate::special::factorial(*m), phi_m);
    let leading_lift = system.solve_dirichlet(&Load::zero(&cfg.mesh), &bdata)?;

    let load = assemble_load(
        &cfg.mesh,
        LoadSpec {
            density: &leading_lift,
            weight: Some(&cfg.rho),
            tri_scale: None,
            tri_mask: Some(&mask),
        },
    );
    let response = system.solve_homogeneous(&load)?;
    let flux = system.variational_flux(&response, &load)?;
    Ok(bare_flux_values(cfg, &flux)[slot])
}

/// Pairwise distances between flux curves of several order fields on a
/// shared medium.
#[derive(Debug, Clone)]
pub struct DistinguishabilityReport {
    /// max-over-grid distance for each pair
    pub distances: Vec<Vec<f64>>,
    /// largest |F| seen over all curves; distances below
    /// `tolerance()` are numerically indistinguishable
    pub scale: f64,
    pub curves: Vec<FluxCurve>,
}

impl DistinguishabilityReport {
    /// Distances below this are within solver noise.
    pub fn tolerance(&self) -> f64 {
        SOLVER_TOLERANCE * self.scale
    }
}

/// Runs the forward map for each order field and tabulates pairwise
/// max-over-grid flux distances.
pub fn distinguishability_experiment(
    cfg: &CoefficientSet,
    orders: &[OrderField],
    excitation: &Excitation,
    x0: usize,
    p_grid: &[f64],
) -> Result<DistinguishabilityReport> {
    let curves: Vec<FluxCurve> = orders
        .par_iter()
        .map(|alpha| {
            let cfg_i = cfg.with_alpha(alpha.clone())?;
            flux_curve(&cfg_i, excitation, x0, p_grid)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = curves.len();
    let mut distances = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = curves[i]
                .samples()
                .iter()
                .zip(curves[j].samples())
                .map(|((_, a), (_, b))| (a - b).abs())
                .fold(0.0f64, f64::max);
            distances[i][j] = d;
            distances[j][i] = d;
        }
    }
    let scale = curves.iter().map(|c| c.max_abs()).fold(0.0, f64::max);
    Ok(DistinguishabilityReport {
        distances,
        scale,
        curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        boundary_point_index, build_partition_order, disk_mesh, OrderField, Partition, ScalarField,
    };
    use std::sync::Arc;

    fn sector_tagged_cfg() -> CoefficientSet {
        // 8 sectors, q = 1 so the leading lift is nontrivial
        let mesh = Arc::new(disk_mesh(10).retag(|c| {
            let th = c[1].atan2(c[0]);
            ((th + std::f64::consts::PI) / (2.0 * std::f64::consts::PI) * 8.0).floor() as u32 % 8
        }));
        let sigma = ScalarField::constant(&mesh, 1.0, crate::geometry::Placement::Vertex);
        let rho = ScalarField::constant(&mesh, 1.0, crate::geometry::Placement::Vertex);
        let q = ScalarField::constant(&mesh, 1.0, crate::geometry::Placement::Vertex);
        let alpha = OrderField::constant(&mesh, 0.5).unwrap();
        CoefficientSet::new(mesh, sigma, rho, q, alpha).unwrap()
    }

    #[test]
    fn probe_is_negative_and_monotone_under_inclusion() {
        let cfg = sector_tagged_cfg();
        let exc = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        let (x0, _) = boundary_point_index(&cfg.mesh, [1.0, 0.0]);
        let mut tags: Vec<u32> = Vec::new();
        let mut prev = 0.0;
        for t in 0..8u32 {
            tags.push(t);
            let value = hopf_probe(&cfg, &exc, &tags, x0).unwrap();
            assert!(value < 0.0, "probe for {tags:?} is {value}");
            assert!(value < prev, "no strict decrease: {value} vs {prev}");
            prev = value;
        }
    }

    #[test]
    fn empty_tag_set_gives_exact_zero() {
        let cfg = sector_tagged_cfg();
        let exc = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        let (x0, _) = boundary_point_index(&cfg.mesh, [1.0, 0.0]);
        assert_eq!(hopf_probe(&cfg, &exc, &[], x0).unwrap(), 0.0);
    }

    #[test]
    fn probe_scales_linearly_with_the_excitation() {
        let cfg = sector_tagged_cfg();
        let (x0, _) = boundary_point_index(&cfg.mesh, [1.0, 0.0]);
        let e1 = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        let e3 = Excitation::monomial(&cfg.mesh, 2, 3.0).unwrap();
        let p1 = hopf_probe(&cfg, &e1, &[0, 1, 2], x0).unwrap();
        let p3 = hopf_probe(&cfg, &e3, &[0, 1, 2], x0).unwrap();
        assert!((3.0 * p1 - p3).abs() <= 1e-12 * p3.abs());
    }

    #[test]
    fn identical_orders_are_indistinguishable() {
        let mesh = Arc::new(disk_mesh(8));
        let alpha = OrderField::constant(&mesh, 0.5).unwrap();
        let cfg = CoefficientSet::homogeneous(mesh.clone(), alpha.clone()).unwrap();
        let exc = Excitation::monomial(&mesh, 2, 1.0).unwrap();
        let (x0, _) = boundary_point_index(&mesh, [1.0, 0.0]);
        let grid = crate::forward::log_grid(1e-3, 1e-1, 5);
        let report =
            distinguishability_experiment(&cfg, &[alpha.clone(), alpha], &exc, x0, &grid).unwrap();
        assert_eq!(report.distances[0][0], 0.0);
        assert!(report.distances[0][1] <= report.tolerance());
    }

    #[test]
    fn distinct_orders_are_distinguishable() {
        let mesh = Arc::new(disk_mesh(8).retag(|c| u32::from(c[0] * c[0] + c[1] * c[1] > 0.3)));
        let a1 = OrderField::constant(&mesh, 0.5).unwrap();
        let a2 = build_partition_order(&mesh, &Partition::new(vec![(0, 0.45), (1, 0.7)]).unwrap())
            .unwrap();
        let cfg = CoefficientSet::homogeneous(mesh.clone(), a1.clone()).unwrap();
        let exc = Excitation::monomial(&mesh, 2, 1.0).unwrap();
        let (x0, _) = boundary_point_index(&mesh, [1.0, 0.0]);
        let grid = crate::forward::log_grid(1e-4, 1e-2, 6);
        let report = distinguishability_experiment(&cfg, &[a1, a2], &exc, x0, &grid).unwrap();
        assert!(
            report.distances[0][1] > 10.0 * report.tolerance(),
            "distance {} vs tolerance {}",
            report.distances[0][1],
            report.tolerance()
        );
    }
}
