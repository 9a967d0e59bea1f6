//! P1 assembly of the bilinear form `a(u,v) = int sigma grad u . grad v dx
//! + int c u v dx` and Dirichlet solves against it.
//!
//! The stiffness term is integrated exactly; mass and reaction terms use the
//! vertex (trapezoidal) rule, so the reaction only touches the diagonal and
//! the matrix stays an M-matrix on non-obtuse meshes. Dirichlet conditions
//! are imposed by row/column elimination with a symmetric right-hand-side
//! correction.

use std::sync::{Arc, OnceLock};

use crate::elliptic::cholesky::SkylineCholesky;
use crate::elliptic::flux::BoundaryOps;
use crate::elliptic::sparse::{cg_jacobi, norm, CsrMatrix};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryField, CoefficientSet, Mesh, Placement, ScalarField};

/// Systems at or below this size are factored directly; larger ones fall back
/// to diagonally preconditioned conjugate gradients.
pub const DIRECT_SOLVER_LIMIT: usize = 200_000;

/// Relative residual target of the iterative fallback.
pub const CG_RELATIVE_TOLERANCE: f64 = 1e-10;

/// Reaction coefficient `c = c_vertex + weight * scale_T`, each part optional.
///
/// `c_vertex` is a vertex- or triangle-placed field (typically `q`);
/// the second part multiplies a vertex-placed weight (typically `rho`) by a
/// per-triangle scale (typically `p^alpha`), which keeps piecewise-constant
/// orders elementwise exact.
#[derive(Default, Clone, Copy)]
pub struct Reaction<'a> {
    pub base: Option<&'a ScalarField>,
    pub weighted: Option<(&'a ScalarField, &'a [f64])>,
}

impl<'a> Reaction<'a> {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn base(c: &'a ScalarField) -> Self {
        Self {
            base: Some(c),
            weighted: None,
        }
    }

    fn at(&self, t: usize, v: usize) -> f64 {
        let mut c = 0.0;
        if let Some(f) = self.base {
            c += f.at_triangle_vertex(t, v);
        }
        if let Some((w, s)) = self.weighted {
            c += w.at_triangle_vertex(t, v) * s[t];
        }
        c
    }
}

/// Right-hand-side functional `b_i = int f phi_i dx` under the vertex rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Load {
    values: Vec<f64>,
}

impl Load {
    pub fn zero(mesh: &Mesh) -> Self {
        Self {
            values: vec![0.0; mesh.vertex_count()],
        }
    }

    /// Wraps an already-assembled functional (one value per vertex).
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Source description for [`assemble_load`]: `f * weight * scale_T`,
/// optionally restricted to a set of triangles.
#[derive(Clone, Copy)]
pub struct LoadSpec<'a> {
    /// density sampled at vertices (or constant per triangle)
    pub density: &'a ScalarField,
    /// vertex-placed multiplier, typically `rho`
    pub weight: Option<&'a ScalarField>,
    /// per-triangle multiplier, typically `+-p^{alpha_T}` or `1 - p^{alpha_T}`
    pub tri_scale: Option<&'a [f64]>,
    /// indicator of the triangles that carry the source
    pub tri_mask: Option<&'a [bool]>,
}

impl<'a> LoadSpec<'a> {
    pub fn plain(density: &'a ScalarField) -> Self {
        Self {
            density,
            weight: None,
            tri_scale: None,
            tri_mask: None,
        }
    }

    pub fn weighted(density: &'a ScalarField, weight: &'a ScalarField) -> Self {
        Self {
            density,
            weight: Some(weight),
            tri_scale: None,
            tri_mask: None,
        }
    }
}

/// Vertex-rule assembly of `b_i = int f phi_i dx`.
pub fn assemble_load(mesh: &Mesh, spec: LoadSpec) -> Load {
    let mut b = vec![0.0; mesh.vertex_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if let Some(mask) = spec.tri_mask {
            if !mask[t] {
                continue;
            }
        }
        let scale = spec.tri_scale.map_or(1.0, |s| s[t]);
        if scale == 0.0 {
            continue;
        }
        let third = mesh.areas()[t] / 3.0;
        for &v in tri {
            let mut val = spec.density.at_triangle_vertex(t, v);
            if let Some(w) = spec.weight {
                val *= w.at_triangle_vertex(t, v);
            }
            b[v] += third * scale * val;
        }
    }
    Load { values: b }
}

/// Assembled bilinear form plus everything needed to solve Dirichlet problems
/// against it: the interior restriction, a lazily computed factorization
/// (shared across solves), and the boundary operators for flux recovery.
pub struct AssembledSystem {
    mesh: Arc<Mesh>,
    full: CsrMatrix,
    interior: Vec<usize>,
    reduced: CsrMatrix,
    factor: OnceLock<Factor>,
    boundary_ops: OnceLock<BoundaryOps>,
}

enum Factor {
    Direct(SkylineCholesky),
    Iterative,
}

/// Assembles `a(u,v)` for the coefficient `sigma` and reaction `c`.
pub fn assemble(mesh: &Arc<Mesh>, sigma: &ScalarField, c: &ScalarField) -> Result<AssembledSystem> {
    assemble_with(mesh, sigma, Reaction::base(c))
}

/// Assembly with a composite reaction term.
pub fn assemble_with(
    mesh: &Arc<Mesh>,
    sigma: &ScalarField,
    reaction: Reaction,
) -> Result<AssembledSystem> {
    let nv = mesh.vertex_count();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(mesh.triangle_count() * 12);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.areas()[t];
        let sigma_t = sigma.on_triangle(mesh, t);
        if sigma_t <= 0.0 {
            return Err(Error::InvalidField(format!(
                "sigma must be positive; triangle {t} has sigma = {sigma_t}"
            )));
        }
        let [a, b, c_] = *tri;
        let pa = mesh.vertices()[a];
        let pb = mesh.vertices()[b];
        let pc = mesh.vertices()[c_];
        // grad of the hat functions: [y_next - y_prev, x_prev - x_next] / (2A)
        let grads = [
            [pb[1] - pc[1], pc[0] - pb[0]],
            [pc[1] - pa[1], pa[0] - pc[0]],
            [pa[1] - pb[1], pb[0] - pa[0]],
        ];
        let factor = sigma_t / (4.0 * area);
        for i in 0..3 {
            for j in 0..3 {
                let k = factor * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                triplets.push((tri[i], tri[j], k));
            }
        }
        let third = area / 3.0;
        for &v in tri {
            let cv = reaction.at(t, v);
            if cv < 0.0 {
                return Err(Error::InvalidField(format!(
                    "reaction coefficient must be nonnegative; triangle {t} vertex {v} has c = {cv}"
                )));
            }
            if cv != 0.0 {
                triplets.push((v, v, third * cv));
            }
        }
    }
    let full = CsrMatrix::from_triplets(nv, triplets);

    let mut interior = Vec::with_capacity(nv - mesh.boundary_vertices().len());
    let mut interior_pos = vec![None; nv];
    for (v, pos) in interior_pos.iter_mut().enumerate() {
        if !mesh.is_boundary_vertex(v) {
            *pos = Some(interior.len());
            interior.push(v);
        }
    }
    let reduced = full.restrict(&interior, &interior_pos);

    Ok(AssembledSystem {
        mesh: mesh.clone(),
        full,
        interior,
        reduced,
        factor: OnceLock::new(),
        boundary_ops: OnceLock::new(),
    })
}

impl AssembledSystem {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    /// The unconstrained matrix of `a(.,.)` over all vertices.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.full
    }

    pub fn constrained_vertices(&self) -> &[usize] {
        self.mesh.boundary_vertices()
    }

    fn factor(&self) -> Result<&Factor> {
        if self.factor.get().is_none() {
            let f = if self.reduced.n() <= DIRECT_SOLVER_LIMIT {
                Factor::Direct(SkylineCholesky::factor(&self.reduced)?)
            } else {
                Factor::Iterative
            };
            let _ = self.factor.set(f);
        }
        Ok(self.factor.get().expect("factor set above"))
    }

    fn solve_reduced(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self.factor()? {
            Factor::Direct(chol) => Ok(chol.solve(rhs)),
            Factor::Iterative => {
                let cap = 20 * (self.reduced.n() as f64).sqrt().ceil() as usize;
                let (x, _) = cg_jacobi(&self.reduced, rhs, CG_RELATIVE_TOLERANCE, cap.max(100))?;
                Ok(x)
            }
        }
    }

    /// Solves `a(u, phi_i) = load_i` for interior i with `u = bdata` on the
    /// boundary vertices.
    pub fn solve_dirichlet(&self, load: &Load, bdata: &BoundaryField) -> Result<ScalarField> {
        let nv = self.mesh.vertex_count();
        let mut u = vec![0.0; nv];
        for (slot, &v) in self.mesh.boundary_vertices().iter().enumerate() {
            u[v] = bdata.values()[slot];
        }
        if !self.interior.is_empty() {
            // rhs correction from the boundary lift
            let mut lifted = vec![0.0; nv];
            self.full.matvec(&u, &mut lifted);
            let rhs: Vec<f64> = self
                .interior
                .iter()
                .map(|&v| load.values[v] - lifted[v])
                .collect();
            let x = if norm(&rhs) == 0.0 {
                vec![0.0; rhs.len()]
            } else {
                self.solve_reduced(&rhs)?
            };
            for (k, &v) in self.interior.iter().enumerate() {
                u[v] = x[k];
            }
        }
        ScalarField::new(&self.mesh, u, Placement::Vertex)
    }

    /// Homogeneous-Dirichlet solve.
    pub fn solve_homogeneous(&self, load: &Load) -> Result<ScalarField> {
        self.solve_dirichlet(load, &BoundaryField::zeros(&self.mesh))
    }

    pub(crate) fn boundary_ops(&self) -> Result<&BoundaryOps> {
        if self.boundary_ops.get().is_none() {
            let ops = BoundaryOps::build(&self.mesh)?;
            let _ = self.boundary_ops.set(ops);
        }
        Ok(self.boundary_ops.get().expect("set above"))
    }

    /// Defect `a(u, phi_i) - load_i` at the boundary vertices, the input to
    /// flux recovery.
    pub(crate) fn boundary_residual(&self, u: &ScalarField, load: &Load) -> Vec<f64> {
        let mut au = vec![0.0; self.mesh.vertex_count()];
        self.full.matvec(u.values(), &mut au);
        self.mesh
            .boundary_vertices()
            .iter()
            .map(|&v| au[v] - load.values[v])
            .collect()
    }

    /// Interior algebraic residual relative to the right-hand side, for
    /// verifying a solve.
    pub fn interior_residual(&self, u: &ScalarField, load: &Load) -> f64 {
        let mut au = vec![0.0; self.mesh.vertex_count()];
        self.full.matvec(u.values(), &mut au);
        let mut res = 0.0;
        let mut scale = 0.0;
        for &v in &self.interior {
            res += (au[v] - load.values[v]).powi(2);
            scale += load.values[v].powi(2).max(au[v].powi(2));
        }
        if scale == 0.0 {
            res.sqrt()
        } else {
            (res / scale).sqrt()
        }
    }
}

/// Lumped mass weights `m_v = sum_{T ∋ v} |T|/3`, the vertex-rule measure.
pub fn lumped_mass(mesh: &Mesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.vertex_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let third = mesh.areas()[t] / 3.0;
        for &v in tri {
            m[v] += third;
        }
    }
    m
}

/// Discrete L2 norm under the lumped mass.
pub fn l2_norm(mesh: &Mesh, values: &[f64]) -> f64 {
    let m = lumped_mass(mesh);
    values
        .iter()
        .zip(&m)
        .map(|(v, w)| v * v * w)
        .sum::<f64>()
        .sqrt()
}

pub fn max_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Solution operator of the reaction-free lift: `-div(sigma grad v) + q v = 0`
/// with `v = phi` on the boundary.
pub fn solve_s(cfg: &CoefficientSet, phi: &BoundaryField) -> Result<ScalarField> {
    let system = assemble(&cfg.mesh, &cfg.sigma, &cfg.q)?;
    system.solve_dirichlet(&Load::zero(&cfg.mesh), phi)
}

/// Resolvent applied to a source: solves
/// `-div(sigma grad u) + (q + rho p^alpha) u = rho f` with `u = 0` on the
/// boundary. `p = 0` is allowed and drops the order term.
pub fn apply_resolvent(cfg: &CoefficientSet, p: f64, f: &ScalarField) -> Result<ScalarField> {
    let p_alpha = cfg.p_alpha(p);
    let system = assemble_with(
        &cfg.mesh,
        &cfg.sigma,
        Reaction {
            base: Some(&cfg.q),
            weighted: Some((&cfg.rho, &p_alpha)),
        },
    )?;
    let load = assemble_load(&cfg.mesh, LoadSpec::weighted(f, &cfg.rho));
    system.solve_homogeneous(&load)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{disk_mesh, square_mesh, OrderField};
    use crate::special::bessel_i0;

    fn unit_fields(mesh: &Arc<Mesh>) -> (ScalarField, ScalarField) {
        (
            ScalarField::constant(mesh, 1.0, Placement::Vertex),
            ScalarField::constant(mesh, 0.0, Placement::Vertex),
        )
    }

    #[test]
    fn reference_triangle_stiffness() {
        let mesh = Arc::new(
            Mesh::from_raw(
                vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
                vec![[0, 1, 2]],
                vec![0],
            )
            .unwrap(),
        );
        let (sigma, q) = unit_fields(&mesh);
        let system = assemble(&mesh, &sigma, &q).unwrap();
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for (i, row_expect) in expect.iter().enumerate() {
            let (cols, vals) = system.matrix().row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                assert!(
                    (v - row_expect[c]).abs() < 1e-15,
                    "entry ({i},{c}) = {v}, expected {}",
                    row_expect[c]
                );
            }
        }
    }

    #[test]
    fn interior_row_sums_vanish_without_reaction() {
        let mesh = Arc::new(disk_mesh(6));
        let (sigma, q) = unit_fields(&mesh);
        let system = assemble(&mesh, &sigma, &q).unwrap();
        for v in 0..mesh.vertex_count() {
            if mesh.is_boundary_vertex(v) {
                continue;
            }
            let (_, vals) = system.matrix().row(v);
            let sum: f64 = vals.iter().sum();
            assert!(sum.abs() < 1e-13, "row {v} sums to {sum}");
        }
    }

    #[test]
    fn assembled_matrix_is_exactly_symmetric() {
        let mesh = Arc::new(disk_mesh(8));
        let sigma = ScalarField::from_vertex_fn(&mesh, |p| 1.0 + 0.3 * p[0] + 0.1 * p[1] * p[1]);
        let q = ScalarField::from_vertex_fn(&mesh, |p| 0.5 + 0.5 * p[0] * p[0]);
        let system = assemble(&mesh, &sigma, &q).unwrap();
        assert!(system.matrix().is_symmetric());
    }

    #[test]
    fn rejects_bad_coefficients() {
        let mesh = Arc::new(disk_mesh(2));
        let zero = ScalarField::constant(&mesh, 0.0, Placement::Vertex);
        let one = ScalarField::constant(&mesh, 1.0, Placement::Vertex);
        assert!(assemble(&mesh, &zero, &one).is_err(), "sigma = 0");
        let neg = ScalarField::constant(&mesh, -1.0, Placement::Vertex);
        assert!(assemble(&mesh, &one, &neg).is_err(), "negative reaction");
    }

    #[test]
    fn constant_dirichlet_data_reproduces_constants() {
        let mesh = Arc::new(disk_mesh(6));
        let (sigma, q) = unit_fields(&mesh);
        let system = assemble(&mesh, &sigma, &q).unwrap();
        let u = system
            .solve_dirichlet(&Load::zero(&mesh), &BoundaryField::constant(&mesh, 1.0))
            .unwrap();
        for &v in u.values() {
            assert!((v - 1.0).abs() < 1e-11);
        }
        // zero data gives zero
        let z = system
            .solve_dirichlet(&Load::zero(&mesh), &BoundaryField::zeros(&mesh))
            .unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn solve_meets_the_algebraic_residual_target() {
        let mesh = Arc::new(disk_mesh(12));
        let sigma = ScalarField::from_vertex_fn(&mesh, |p| 1.0 + 0.3 * p[0]);
        let q = ScalarField::from_vertex_fn(&mesh, |p| 0.4 + p[1] * p[1]);
        let system = assemble(&mesh, &sigma, &q).unwrap();
        let f = ScalarField::from_vertex_fn(&mesh, |p| p[0] * p[1] + 0.5);
        let load = assemble_load(&mesh, LoadSpec::plain(&f));
        let bdata = BoundaryField::from_fn(&mesh, |p| 1.0 + p[0]);
        let u = system.solve_dirichlet(&load, &bdata).unwrap();
        let residual = system.interior_residual(&u, &load);
        assert!(
            residual <= 1e-10,
            "relative algebraic residual {residual:.3e}"
        );
    }

    #[test]
    fn reaction_diffusion_matches_bessel_profile() {
        // -Laplace u + u = 1, u = 0 on the unit circle:
        // u(r) = 1 - I0(r)/I0(1), so u(0) = 1 - 1/I0(1)
        let mesh = Arc::new(disk_mesh(20));
        let sigma = ScalarField::constant(&mesh, 1.0, Placement::Vertex);
        let one = ScalarField::constant(&mesh, 1.0, Placement::Vertex);
        let system = assemble(&mesh, &sigma, &one).unwrap();
        let load = assemble_load(&mesh, LoadSpec::plain(&one));
        let u = system.solve_homogeneous(&load).unwrap();
        let expected = 1.0 - 1.0 / bessel_i0(1.0);
        let center = u.values()[0];
        assert!(
            (center - expected).abs() < 0.01 * expected,
            "u(0) = {center}, expected {expected}"
        );
    }

    #[test]
    fn solve_s_bessel_profile() {
        // -Laplace v + v = 0, v = 1 on the circle: v(r) = I0(r)/I0(1)
        let mesh = Arc::new(disk_mesh(20));
        let sigma = ScalarField::constant(&mesh, 1.0, Placement::Vertex);
        let rho = ScalarField::constant(&mesh, 1.0, Placement::Vertex);
        let q = ScalarField::constant(&mesh, 1.0, Placement::Vertex);
        let alpha = OrderField::constant(&mesh, 0.5).unwrap();
        let cfg = CoefficientSet::new(mesh.clone(), sigma, rho, q, alpha).unwrap();
        let v = solve_s(&cfg, &BoundaryField::constant(&mesh, 1.0)).unwrap();
        let expected = 1.0 / bessel_i0(1.0);
        assert!(
            (v.values()[0] - expected).abs() < 0.01 * expected,
            "v(0) = {}, expected {expected}",
            v.values()[0]
        );
        // S preserves constants when q = 0
        let cfg0 = CoefficientSet::homogeneous(mesh.clone(), cfg.alpha.clone()).unwrap();
        let v0 = solve_s(&cfg0, &BoundaryField::constant(&mesh, 1.0)).unwrap();
        for &val in v0.values() {
            assert!((val - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn resolvent_matches_bessel_profile() {
        // -Laplace u + p^alpha u = 1, zero boundary:
        // u(r) = p^{-alpha} (1 - I0(k r)/I0(k)), k = p^{alpha/2}
        let mesh = Arc::new(disk_mesh(20));
        let alpha = OrderField::constant(&mesh, 0.5).unwrap();
        let cfg = CoefficientSet::homogeneous(mesh.clone(), alpha).unwrap();
        let one = ScalarField::constant(&mesh, 1.0, Placement::Vertex);
        let p: f64 = 4.0;
        let u = apply_resolvent(&cfg, p, &one).unwrap();
        let kappa = p.powf(0.25);
        let expected = p.powf(-0.5) * (1.0 - 1.0 / bessel_i0(kappa));
        assert!(
            (u.values()[0] - expected).abs() < 0.01 * expected.abs(),
            "u(0) = {}, expected {expected}",
            u.values()[0]
        );
        // linearity in f
        let f2 = ScalarField::constant(&mesh, 3.0, Placement::Vertex);
        let u2 = apply_resolvent(&cfg, p, &f2).unwrap();
        for (a, b) in u.values().iter().zip(u2.values()) {
            assert!((3.0 * a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
        // zero source gives zero
        let z = apply_resolvent(
            &cfg,
            p,
            &ScalarField::constant(&mesh, 0.0, Placement::Vertex),
        )
        .unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn resolvent_at_p_one_ignores_the_order_field() {
        let mesh = Arc::new(disk_mesh(8).retag(|c| u32::from(c[1] > 0.0)));
        let a1 = OrderField::constant(&mesh, 0.5).unwrap();
        let a2 = crate::geometry::build_partition_order(
            &mesh,
            &crate::geometry::Partition::new(vec![(0, 0.45), (1, 0.8)]).unwrap(),
        )
        .unwrap();
        let f = ScalarField::from_vertex_fn(&mesh, |p| 1.0 + p[0]);
        let u1 = apply_resolvent(
            &CoefficientSet::homogeneous(mesh.clone(), a1).unwrap(),
            1.0,
            &f,
        )
        .unwrap();
        let u2 = apply_resolvent(
            &CoefficientSet::homogeneous(mesh.clone(), a2).unwrap(),
            1.0,
            &f,
        )
        .unwrap();
        let scale = max_norm(u1.values());
        for (a, b) in u1.values().iter().zip(u2.values()) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn discrete_comparison_principle_on_the_disk() {
        // nonnegative data on a non-obtuse mesh keeps the solution nonnegative
        let mesh = Arc::new(disk_mesh(10));
        let sigma = ScalarField::constant(&mesh, 1.0, Placement::Vertex);
        let q = ScalarField::from_vertex_fn(&mesh, |p| 0.2 + p[0] * p[0]);
        let system = assemble(&mesh, &sigma, &q).unwrap();
        let f = ScalarField::from_vertex_fn(&mesh, |p| (1.0 - p[0]).max(0.0));
        let load = assemble_load(&mesh, LoadSpec::plain(&f));
        let bdata = BoundaryField::from_fn(&mesh, |p| 0.5 + 0.5 * p[1].max(0.0));
        let u = system.solve_dirichlet(&load, &bdata).unwrap();
        let umax = max_norm(u.values());
        for &v in u.values() {
            assert!(v >= -1e-12 * umax);
        }
    }

    #[test]
    fn square_mesh_poisson_sanity() {
        // -Laplace u = 2 pi^2 sin(pi x) sin(pi y) on the unit square
        let mesh = Arc::new(square_mesh(24));
        let (sigma, q) = unit_fields(&mesh);
        let system = assemble(&mesh, &sigma, &q).unwrap();
        let pi = std::f64::consts::PI;
        let f = ScalarField::from_vertex_fn(&mesh, |p| {
            2.0 * pi * pi * (pi * p[0]).sin() * (pi * p[1]).sin()
        });
        let load = assemble_load(&mesh, LoadSpec::plain(&f));
        let u = system.solve_homogeneous(&load).unwrap();
        let mut worst = 0.0f64;
        for (v, p) in u.values().iter().zip(mesh.vertices()) {
            let exact = (pi * p[0]).sin() * (pi * p[1]).sin();
            worst = worst.max((v - exact).abs());
        }
        assert!(worst < 0.01, "max error {worst}");
    }
}
