//! Laplace-domain forward map: the transformed solution by direct solve and
//! by the resolvent representation, one-point flux curves over frequency
//! grids, and the `t e^{-t}`-weighted boundary data.

use rayon::prelude::*;

use crate::elliptic::{
    assemble, assemble_load, assemble_with, AssembledSystem, BoundaryFlux, Load, LoadSpec, Reaction,
};
use crate::error::{Error, Result};
use crate::geometry::{CoefficientSet, Excitation, ScalarField};

/// How a flux curve was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// direct solve of the transformed problem at each frequency
    Direct,
    /// resolvent representation `(id - (A + p^a)^{-1} p^a) S ghat`
    Representation,
    /// assembled from an explicit formula (testing and calibration)
    Synthetic,
}

/// Samples `(p, F(p))` of the one-point Laplace-domain flux
/// `F(p) = sigma(x0) dUhat/dnu (p, x0)`, strictly increasing in `p`.
#[derive(Debug, Clone)]
pub struct FluxCurve {
    x0: usize,
    samples: Vec<(f64, f64)>,
    provenance: Provenance,
}

impl FluxCurve {
    pub fn new(x0: usize, samples: Vec<(f64, f64)>, provenance: Provenance) -> Result<Self> {
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidField(format!(
                    "flux curve frequencies must be strictly increasing; got {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        if samples
            .iter()
            .any(|(p, f)| !p.is_finite() || !f.is_finite() || *p <= 0.0)
        {
            return Err(Error::InvalidField(
                "flux curve entries must be finite with positive frequencies".into(),
            ));
        }
        Ok(Self {
            x0,
            samples,
            provenance,
        })
    }

    pub fn x0(&self) -> usize {
        self.x0
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Largest |F| over the grid, the natural scale for noise floors.
    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, (_, f)| m.max(f.abs()))
    }
}

/// The weighted observation `D(x) = int_0^inf dU/dnu (t,x) t e^{-t} dt` at
/// every boundary vertex (no sigma factor), in boundary-vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedData {
    values: Vec<f64>,
}

impl WeightedData {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn difference(&self, other: &WeightedData) -> WeightedData {
        WeightedData {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Logarithmically spaced grid, ascending.
pub fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    assert!(min > 0.0 && max > min && points >= 2);
    let (lo, hi) = (min.ln(), max.ln());
    (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Default small-frequency sweep for exponent work: 24 points over
/// `[1e-6, 1e-2]`.
pub fn default_small_p_grid() -> Vec<f64> {
    log_grid(1e-6, 1e-2, 24)
}

/// Assembles the transformed operator `-div(sigma grad .) + (q + rho p^alpha)`.
pub fn assemble_transformed(cfg: &CoefficientSet, p: f64) -> Result<AssembledSystem> {
    let p_alpha = cfg.p_alpha(p);
    assemble_with(
        &cfg.mesh,
        &cfg.sigma,
        Reaction {
            base: Some(&cfg.q),
            weighted: Some((&cfg.rho, &p_alpha)),
        },
    )
}

/// Direct solve of the transformed problem with boundary data `ghat(p,.)`.
pub fn solve_uhat_direct(
    cfg: &CoefficientSet,
    excitation: &Excitation,
    p: f64,
) -> Result<ScalarField> {
    assert!(p > 0.0, "the transformed problem needs p > 0");
    let system = assemble_transformed(cfg, p)?;
    system.solve_dirichlet(&Load::zero(&cfg.mesh), &excitation.ghat(&cfg.mesh, p))
}

/// Same problem with boundary data `p^{M+1} ghat(p,.)`, which stays O(1) as
/// `p -> 0`; the asymptotic probes work on this scaling throughout.
pub fn solve_uhat_scaled(
    cfg: &CoefficientSet,
    excitation: &Excitation,
    p: f64,
) -> Result<ScalarField> {
    assert!(p > 0.0);
    let system = assemble_transformed(cfg, p)?;
    system.solve_dirichlet(
        &Load::zero(&cfg.mesh),
        &excitation.ghat_scaled(&cfg.mesh, p),
    )
}

/// Solution by the resolvent representation:
/// `Uhat = (id - (A + p^alpha)^{-1} p^alpha) S[ghat(p,.)]`.
///
/// Agrees with the direct solve up to solver tolerance; the two routes share
/// no linear system.
pub fn solve_uhat_repr(
    cfg: &CoefficientSet,
    excitation: &Excitation,
    p: f64,
) -> Result<ScalarField> {
    assert!(p > 0.0);
    let lift_system = assemble(&cfg.mesh, &cfg.sigma, &cfg.q)?;
    let lifted =
        lift_system.solve_dirichlet(&Load::zero(&cfg.mesh), &excitation.ghat(&cfg.mesh, p))?;

    let p_alpha = cfg.p_alpha(p);
    let resolvent_system = assemble_transformed(cfg, p)?;
    let load = assemble_load(
        &cfg.mesh,
        LoadSpec {
            density: &lifted,
            weight: Some(&cfg.rho),
            tri_scale: Some(&p_alpha),
            tri_mask: None,
        },
    );
    let correction = resolvent_system.solve_homogeneous(&load)?;

    let values: Vec<f64> = lifted
        .values()
        .iter()
        .zip(correction.values())
        .map(|(s, w)| s - w)
        .collect();
    ScalarField::new(&cfg.mesh, values, crate::geometry::Placement::Vertex)
}

/// Conormal flux values divided by sigma: the bare normal derivative at each
/// boundary vertex.
pub fn bare_flux_values(cfg: &CoefficientSet, flux: &BoundaryFlux) -> Vec<f64> {
    cfg.mesh
        .boundary_vertices()
        .iter()
        .zip(flux.values())
        .map(|(&v, g)| g / cfg.sigma_at(v))
        .collect()
}

/// One-point flux curve `F(p) = sigma(x0) dUhat/dnu (p, x0)` over an
/// ascending frequency grid. Frequencies run as a parallel map; the output
/// order is the grid order.
pub fn flux_curve(
    cfg: &CoefficientSet,
    excitation: &Excitation,
    x0: usize,
    p_grid: &[f64],
) -> Result<FluxCurve> {
    let slot = cfg
        .mesh
        .boundary_slot(x0)
        .ok_or_else(|| Error::InvalidField(format!("vertex {x0} is not on the boundary")))?;
    let samples: Vec<(f64, f64)> = p_grid
        .par_iter()
        .map(|&p| -> Result<(f64, f64)> {
            let system = assemble_transformed(cfg, p)?;
            let uhat =
                system.solve_dirichlet(&Load::zero(&cfg.mesh), &excitation.ghat(&cfg.mesh, p))?;
            let flux = system.variational_flux(&uhat, &Load::zero(&cfg.mesh))?;
            Ok((p, flux.values()[slot]))
        })
        .collect::<Result<Vec<_>>>()?;
    FluxCurve::new(x0, samples, Provenance::Direct)
}

/// The weighted data by the exact sensitivity route.
///
/// Differentiating the transformed problem in `p` at `p = 1` gives
/// `-div(sigma grad w) + (q + rho) w = -rho alpha Uhat(1,.)` with
/// `w = d_p ghat(1,.)` on the boundary, and `D = -dw/dnu`. No Laplace
/// inversion and no time quadrature are involved.
pub fn weighted_data(cfg: &CoefficientSet, excitation: &Excitation) -> Result<WeightedData> {
    let uhat1 = solve_uhat_direct(cfg, excitation, 1.0)?;
    let system = assemble_transformed(cfg, 1.0)?;
    let minus_alpha: Vec<f64> = cfg.alpha_tri().iter().map(|a| -a).collect();
    let load = assemble_load(
        &cfg.mesh,
        LoadSpec {
            density: &uhat1,
            weight: Some(&cfg.rho),
            tri_scale: Some(&minus_alpha),
            tri_mask: None,
        },
    );
    let sensitivity = system.solve_dirichlet(&load, &excitation.ghat_dp_at_one(&cfg.mesh))?;
    let flux = system.variational_flux(&sensitivity, &load)?;
    let values = bare_flux_values(cfg, &flux)
        .into_iter()
        .map(|v| -v)
        .collect();
    Ok(WeightedData::new(values))
}

/// Bare flux of the transformed solution at every boundary vertex, as a
/// central finite difference in `p` would see it. Used to cross-check the
/// sensitivity route.
pub fn bare_flux_at(cfg: &CoefficientSet, excitation: &Excitation, p: f64) -> Result<Vec<f64>> {
    let system = assemble_transformed(cfg, p)?;
    let uhat = system.solve_dirichlet(&Load::zero(&cfg.mesh), &excitation.ghat(&cfg.mesh, p))?;
    let flux = system.variational_flux(&uhat, &Load::zero(&cfg.mesh))?;
    Ok(bare_flux_values(cfg, &flux))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::max_norm;
    use crate::geometry::{
        boundary_point_index, build_partition_order, disk_mesh, BoundaryField, OrderField,
        Partition,
    };
    use crate::special::{bessel_i0, bessel_i1};
    use std::sync::Arc;

    fn bessel_cfg(rings: usize, alpha: f64) -> CoefficientSet {
        let mesh = Arc::new(disk_mesh(rings));
        let order = OrderField::constant(&mesh, alpha).unwrap();
        CoefficientSet::homogeneous(mesh, order).unwrap()
    }

    /// analytic transformed solution for the Bessel configuration:
    /// `Uhat(p,r) = 2 p^{-3} I0(kr)/I0(k)`, `k = p^{alpha/2}`
    fn bessel_uhat(p: f64, alpha: f64, r: f64) -> f64 {
        let kappa = p.powf(alpha / 2.0);
        2.0 * p.powi(-3) * bessel_i0(kappa * r) / bessel_i0(kappa)
    }

    fn bessel_flux(p: f64, alpha: f64) -> f64 {
        let kappa = p.powf(alpha / 2.0);
        2.0 * p.powi(-3) * kappa * bessel_i1(kappa) / bessel_i0(kappa)
    }

    #[test]
    fn uhat_direct_matches_bessel_oracle() {
        let alpha = 0.5;
        let cfg = bessel_cfg(20, alpha);
        let exc = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        for p in [1e-2, 1.0] {
            let uhat = solve_uhat_direct(&cfg, &exc, p).unwrap();
            let scale = max_norm(uhat.values());
            let mut worst = 0.0f64;
            for (v, pt) in uhat.values().iter().zip(cfg.mesh.vertices()) {
                let r = (pt[0] * pt[0] + pt[1] * pt[1]).sqrt();
                worst = worst.max((v - bessel_uhat(p, alpha, r)).abs());
            }
            assert!(worst < 0.01 * scale, "p={p}: field err {}", worst / scale);
        }
    }

    #[test]
    fn representation_agrees_with_direct() {
        let mesh = Arc::new(disk_mesh(10).retag(|c| u32::from(c[0] * c[0] + c[1] * c[1] > 0.25)));
        let partition = Partition::new(vec![(0, 0.45), (1, 0.7)]).unwrap();
        let alpha = build_partition_order(&mesh, &partition).unwrap();
        let sigma = ScalarField::from_vertex_fn(&mesh, |pt| 1.0 + 0.4 * pt[0]);
        let rho = ScalarField::from_vertex_fn(&mesh, |pt| 1.5 - 0.3 * pt[1]);
        let q = ScalarField::from_vertex_fn(&mesh, |pt| 0.5 + pt[0] * pt[0]);
        let cfg = CoefficientSet::new(mesh.clone(), sigma, rho, q, alpha).unwrap();
        let exc = Excitation::new(vec![
            (2, BoundaryField::from_fn(&mesh, |pt| 1.0 + 0.5 * pt[1])),
            (3, BoundaryField::constant(&mesh, 0.7)),
        ])
        .unwrap();
        for p in [1e-4, 1e-2, 1.0, 10.0] {
            let direct = solve_uhat_direct(&cfg, &exc, p).unwrap();
            let repr = solve_uhat_repr(&cfg, &exc, p).unwrap();
            let scale = max_norm(direct.values());
            let mut worst = 0.0f64;
            for (a, b) in repr.values().iter().zip(direct.values()) {
                worst = worst.max((a - b).abs());
            }
            assert!(worst <= 1e-8 * scale, "p={p}: {}", worst / scale);
        }
    }

    #[test]
    fn flux_curve_matches_bessel_oracle_at_p_one() {
        let alpha = 0.5;
        let cfg = bessel_cfg(20, alpha);
        let exc = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        let (x0, _) = boundary_point_index(&cfg.mesh, [1.0, 0.0]);
        let curve = flux_curve(&cfg, &exc, x0, &[1.0]).unwrap();
        let expected = bessel_flux(1.0, alpha);
        let f = curve.samples()[0].1;
        assert!(
            (f - expected).abs() < 0.02 * expected,
            "F(1) = {f}, expected {expected}"
        );
    }

    #[test]
    fn flux_at_p_one_is_order_independent() {
        let mesh = Arc::new(disk_mesh(10).retag(|c| u32::from(c[1] > 0.0)));
        let exc = Excitation::monomial(&mesh, 2, 1.0).unwrap();
        let (x0, _) = boundary_point_index(&mesh, [1.0, 0.0]);
        let alpha_a = OrderField::constant(&mesh, 0.5).unwrap();
        let alpha_b =
            build_partition_order(&mesh, &Partition::new(vec![(0, 0.42), (1, 0.8)]).unwrap())
                .unwrap();
        let fa = flux_curve(
            &CoefficientSet::homogeneous(mesh.clone(), alpha_a).unwrap(),
            &exc,
            x0,
            &[1.0],
        )
        .unwrap();
        let fb = flux_curve(
            &CoefficientSet::homogeneous(mesh.clone(), alpha_b).unwrap(),
            &exc,
            x0,
            &[1.0],
        )
        .unwrap();
        let (a, b) = (fa.samples()[0].1, fb.samples()[0].1);
        assert!(
            (a - b).abs() <= 1e-10 * a.abs(),
            "p=1 flux depends on order: {a} vs {b}"
        );
    }

    #[test]
    fn flux_curve_is_linear_in_the_excitation() {
        let cfg = bessel_cfg(8, 0.6);
        let (x0, _) = boundary_point_index(&cfg.mesh, [1.0, 0.0]);
        let grid = [0.1, 1.0];
        let e1 = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        let e2 = Excitation::monomial(&cfg.mesh, 3, 2.0).unwrap();
        let e12 = Excitation::new(vec![
            (2, BoundaryField::constant(&cfg.mesh, 1.0)),
            (3, BoundaryField::constant(&cfg.mesh, 2.0)),
        ])
        .unwrap();
        let f1 = flux_curve(&cfg, &e1, x0, &grid).unwrap();
        let f2 = flux_curve(&cfg, &e2, x0, &grid).unwrap();
        let f12 = flux_curve(&cfg, &e12, x0, &grid).unwrap();
        for i in 0..grid.len() {
            let sum = f1.samples()[i].1 + f2.samples()[i].1;
            let both = f12.samples()[i].1;
            assert!((sum - both).abs() <= 1e-10 * both.abs());
        }
        // a vanishing profile on one term contributes nothing
        let e_zero2 = Excitation::new(vec![
            (2, BoundaryField::constant(&cfg.mesh, 0.0)),
            (3, BoundaryField::constant(&cfg.mesh, 2.0)),
        ])
        .unwrap();
        let fz = flux_curve(&cfg, &e_zero2, x0, &grid).unwrap();
        for i in 0..grid.len() {
            assert!((fz.samples()[i].1 - f2.samples()[i].1).abs() <= 1e-10 * f2.max_abs());
        }
    }

    #[test]
    fn weighted_data_matches_symbolic_bessel_derivative() {
        // D = 6 R - alpha (1 - R^2), R = I1(1)/I0(1): differentiate the flux
        // formula 2 p^{-3} k I1(k)/I0(k), k = p^{alpha/2}, at p = 1
        let alpha = 0.5;
        let cfg = bessel_cfg(20, alpha);
        let exc = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        let data = weighted_data(&cfg, &exc).unwrap();
        let r = bessel_i1(1.0) / bessel_i0(1.0);
        let expected = 6.0 * r - alpha * (1.0 - r * r);
        for &d in data.values() {
            assert!(
                (d - expected).abs() < 0.02 * expected,
                "D = {d}, expected {expected}"
            );
        }
    }

    #[test]
    fn weighted_data_matches_central_differences_at_second_order() {
        let cfg = bessel_cfg(12, 0.55);
        let exc = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        let data = weighted_data(&cfg, &exc).unwrap();
        let fd_error = |delta: f64| -> f64 {
            let above = bare_flux_at(&cfg, &exc, 1.0 + delta).unwrap();
            let below = bare_flux_at(&cfg, &exc, 1.0 - delta).unwrap();
            let mut worst = 0.0f64;
            for ((a, b), d) in above.iter().zip(&below).zip(data.values()) {
                let fd = -(a - b) / (2.0 * delta);
                worst = worst.max((fd - d).abs());
            }
            worst
        };
        let e1 = fd_error(1e-2);
        let e2 = fd_error(5e-3);
        assert!(e1 / e2 > 3.0 && e1 / e2 < 5.0, "ratio {}", e1 / e2);
        let e3 = fd_error(1e-3);
        assert!(e3 < 1e-4 * data.values()[0].abs().max(1.0));
    }

    #[test]
    fn weighted_data_is_linear_in_the_excitation() {
        let cfg = bessel_cfg(6, 0.5);
        let e1 = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        let e2 = Excitation::monomial(&cfg.mesh, 2, 2.0).unwrap();
        let d1 = weighted_data(&cfg, &e1).unwrap();
        let d2 = weighted_data(&cfg, &e2).unwrap();
        for (a, b) in d1.values().iter().zip(d2.values()) {
            assert!((2.0 * a - b).abs() <= 1e-11 * b.abs().max(1e-12));
        }
    }

    #[test]
    fn scaled_flux_limits_at_small_p() {
        // F(p) = 2 p^{-3} k I1(k)/I0(k), k = p^{alpha/2}: as p -> 0,
        // p^3 F -> 0 while p^{3-alpha} F -> 1 (the leading expansion term)
        let alpha = 0.5;
        let cfg = bessel_cfg(20, alpha);
        let exc = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        let (x0, _) = boundary_point_index(&cfg.mesh, [1.0, 0.0]);
        let curve = flux_curve(&cfg, &exc, x0, &[1e-6, 1e-4]).unwrap();
        let f6 = curve.samples()[0].1;
        let f4 = curve.samples()[1].1;
        // p^3 F tends to zero from above
        assert!(1e-18 * f6 < 1.0 && (1e-6f64).powi(3) * f6 < 2e-3);
        assert!((1e-4f64).powi(3) * f4 < 2e-2);
        // p^{3-alpha} F approaches 1
        let lim6 = (1e-6f64).powf(3.0 - alpha) * f6;
        assert!((lim6 - 1.0).abs() < 0.01, "limit {lim6}");
    }

    #[test]
    fn log_grid_is_ascending_and_spans() {
        let g = log_grid(1e-6, 1e-2, 24);
        assert_eq!(g.len(), 24);
        assert!((g[0] - 1e-6).abs() < 1e-18);
        assert!((g[23] - 1e-2).abs() < 1e-14);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn flux_curve_validation() {
        assert!(FluxCurve::new(0, vec![(0.1, 1.0), (0.1, 2.0)], Provenance::Synthetic).is_err());
        assert!(FluxCurve::new(0, vec![(0.2, 1.0), (0.1, 2.0)], Provenance::Synthetic).is_err());
        assert!(FluxCurve::new(0, vec![(-0.1, 1.0)], Provenance::Synthetic).is_err());
        assert!(FluxCurve::new(0, vec![(0.1, f64::NAN)], Provenance::Synthetic).is_err());
    }
}
