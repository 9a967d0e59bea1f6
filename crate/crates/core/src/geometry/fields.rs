//! Scalar fields on meshes, order fields, partitions, and excitations.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::mesh::Mesh;
use crate::special::factorial;

/// Where field values live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Vertex,
    Triangle,
}

/// One number per vertex or per triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
    placement: Placement,
}

impl ScalarField {
    pub fn new(mesh: &Mesh, values: Vec<f64>, placement: Placement) -> Result<Self> {
        let expect = match placement {
            Placement::Vertex => mesh.vertex_count(),
            Placement::Triangle => mesh.triangle_count(),
        };
        if values.len() != expect {
            return Err(Error::InvalidField(format!(
                "field has {} values, mesh entity count is {expect}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidField(
                "field contains non-finite values".into(),
            ));
        }
        Ok(Self { values, placement })
    }

    pub fn constant(mesh: &Mesh, value: f64, placement: Placement) -> Self {
        let n = match placement {
            Placement::Vertex => mesh.vertex_count(),
            Placement::Triangle => mesh.triangle_count(),
        };
        Self {
            values: vec![value; n],
            placement,
        }
    }

    pub fn from_vertex_fn(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self {
            values: mesh.vertices().iter().map(|&p| f(p)).collect(),
            placement: Placement::Vertex,
        }
    }

    pub fn from_centroid_fn(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self {
            values: (0..mesh.triangle_count())
                .map(|t| f(mesh.centroid(t)))
                .collect(),
            placement: Placement::Triangle,
        }
    }

    /// Triangle-placed field from per-tag values.
    pub fn per_tag(mesh: &Mesh, value_of: impl Fn(u32) -> f64) -> Self {
        Self {
            values: mesh.triangle_tags().iter().map(|&t| value_of(t)).collect(),
            placement: Placement::Triangle,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn placement(&self) -> Placement {
        self.placement
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value on triangle `t`: the stored value, or the vertex mean.
    pub fn on_triangle(&self, mesh: &Mesh, t: usize) -> f64 {
        match self.placement {
            Placement::Triangle => self.values[t],
            Placement::Vertex => {
                let [a, b, c] = mesh.triangles()[t];
                (self.values[a] + self.values[b] + self.values[c]) / 3.0
            }
        }
    }

    /// Value at vertex `v` of triangle `t` (vertex-placed reads the vertex,
    /// triangle-placed is constant on the element).
    pub fn at_triangle_vertex(&self, t: usize, v: usize) -> f64 {
        match self.placement {
            Placement::Triangle => self.values[t],
            Placement::Vertex => self.values[v],
        }
    }

    /// Collapse to one value per triangle.
    pub fn to_triangle_values(&self, mesh: &Mesh) -> Vec<f64> {
        (0..mesh.triangle_count())
            .map(|t| self.on_triangle(mesh, t))
            .collect()
    }
}

/// The spatially variable fractional order with validated bounds.
///
/// Construction enforces `0 < min <= max < 1` and `max < 2 min`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderField {
    field: ScalarField,
    alpha_min: f64,
    alpha_max: f64,
}

impl OrderField {
    pub fn new(field: ScalarField) -> Result<Self> {
        let alpha_min = field.min();
        let alpha_max = field.max();
        if !(alpha_min > 0.0 && alpha_max < 1.0) {
            return Err(Error::Assumption(format!(
                "order values must lie in (0,1); found range [{alpha_min}, {alpha_max}]"
            )));
        }
        if alpha_max >= 2.0 * alpha_min {
            return Err(Error::Assumption(format!(
                "order bounds must satisfy max(alpha) < 2*min(alpha); \
                 found max {alpha_max} >= 2*{alpha_min}"
            )));
        }
        Ok(Self {
            field,
            alpha_min,
            alpha_max,
        })
    }

    pub fn constant(mesh: &Mesh, alpha: f64) -> Result<Self> {
        Self::new(ScalarField::constant(mesh, alpha, Placement::Triangle))
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn alpha_min(&self) -> f64 {
        self.alpha_min
    }

    pub fn alpha_max(&self) -> f64 {
        self.alpha_max
    }

    /// One order value per triangle (vertex-placed orders are averaged).
    pub fn triangle_values(&self, mesh: &Mesh) -> Vec<f64> {
        self.field.to_triangle_values(mesh)
    }
}

/// Subdomain tags paired with strictly increasing order values.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    entries: Vec<(u32, f64)>,
}

impl Partition {
    pub fn new(entries: Vec<(u32, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Assumption("partition has no subdomains".into()));
        }
        let mut tags = std::collections::HashSet::new();
        for &(tag, _) in &entries {
            if !tags.insert(tag) {
                return Err(Error::Assumption(format!("duplicate subdomain tag {tag}")));
            }
        }
        for w in entries.windows(2) {
            if w[1].1 <= w[0].1 {
                return Err(Error::Assumption(format!(
                    "order values must be strictly increasing; got {} then {}",
                    w[0].1, w[1].1
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn value_of(&self, tag: u32) -> Option<f64> {
        self.entries
            .iter()
            .find(|(t, _)| *t == tag)
            .map(|(_, a)| *a)
    }

    /// Checks the partition against a mesh: every mesh tag has an order value
    /// and every listed tag covers positive area.
    pub fn validate_against(&self, mesh: &Mesh) -> Result<()> {
        let areas = mesh.tag_areas();
        for (tag, area) in &areas {
            if self.value_of(*tag).is_none() {
                return Err(Error::Assumption(format!(
                    "mesh tag {tag} has no order value in the partition"
                )));
            }
            debug_assert!(*area > 0.0);
        }
        for (tag, _) in &self.entries {
            match areas.iter().find(|(t, _)| t == tag) {
                Some((_, area)) if *area > 0.0 => {}
                _ => {
                    return Err(Error::Assumption(format!(
                        "partition tag {tag} labels no triangles"
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Piecewise constant order field assembled from a partition.
pub fn build_partition_order(mesh: &Mesh, partition: &Partition) -> Result<OrderField> {
    partition.validate_against(mesh)?;
    let field = ScalarField::per_tag(mesh, |tag| {
        partition.value_of(tag).expect("validated above")
    });
    OrderField::new(field)
}

/// Values attached to the boundary vertices, in `mesh.boundary_vertices()` order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    values: Vec<f64>,
}

impl BoundaryField {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.boundary_vertices().len() {
            return Err(Error::InvalidField(format!(
                "boundary field has {} values for {} boundary vertices",
                values.len(),
                mesh.boundary_vertices().len()
            )));
        }
        Ok(Self { values })
    }

    pub fn constant(mesh: &Mesh, value: f64) -> Self {
        Self {
            values: vec![value; mesh.boundary_vertices().len()],
        }
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self {
            values: mesh
                .boundary_vertices()
                .iter()
                .map(|&v| f(mesh.vertices()[v]))
                .collect(),
        }
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self::constant(mesh, 0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// In-place `self += scale * other`.
    pub fn axpy(&mut self, scale: f64, other: &BoundaryField) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
    }
}

/// Polynomial-in-time boundary excitation: terms `(k, phi_k)` with k >= 2.
#[derive(Debug, Clone)]
pub struct Excitation {
    terms: Vec<(u32, BoundaryField)>,
}

impl Excitation {
    pub fn new(mut terms: Vec<(u32, BoundaryField)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Assumption("excitation has no terms".into()));
        }
        terms.sort_by_key(|(k, _)| *k);
        for w in terms.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Assumption(format!(
                    "duplicate excitation degree k={}",
                    w[0].0
                )));
            }
        }
        let min_k = terms[0].0;
        if min_k < 2 {
            return Err(Error::Assumption(format!(
                "excitation degrees must satisfy k >= 2; got k={min_k}"
            )));
        }
        let max_k = terms.last().unwrap().0;
        if max_k > 20 {
            return Err(Error::Assumption(format!(
                "excitation degree k={max_k} exceeds the supported maximum 20"
            )));
        }
        if terms.last().unwrap().1.is_zero() {
            return Err(Error::Assumption(
                "the leading excitation profile must not vanish identically".into(),
            ));
        }
        Ok(Self { terms })
    }

    /// Single term `t^k * phi` with constant profile.
    pub fn monomial(mesh: &Mesh, k: u32, value: f64) -> Result<Self> {
        Self::new(vec![(k, BoundaryField::constant(mesh, value))])
    }

    pub fn terms(&self) -> &[(u32, BoundaryField)] {
        &self.terms
    }

    /// Leading degree M.
    pub fn leading_degree(&self) -> u32 {
        self.terms.last().unwrap().0
    }

    /// Boundary values of the excitation at time `t`.
    pub fn at_time(&self, mesh: &Mesh, t: f64) -> BoundaryField {
        let mut out = BoundaryField::zeros(mesh);
        for (k, phi) in &self.terms {
            out.axpy(t.powi(*k as i32), phi);
        }
        out
    }

    /// Laplace transform of the excitation at frequency `p`:
    /// `sum_k k! p^{-k-1} phi_k`.
    pub fn ghat(&self, mesh: &Mesh, p: f64) -> BoundaryField {
        assert!(p > 0.0, "ghat requires p > 0");
        let mut out = BoundaryField::zeros(mesh);
        for (k, phi) in &self.terms {
            out.axpy(factorial(*k) * p.powi(-(*k as i32) - 1), phi);
        }
        out
    }

    /// `p^{M+1} ghat`, i.e. `sum_k k! p^{M-k} phi_k`. Stays O(1) as p -> 0,
    /// which keeps the small-frequency solves well scaled.
    pub fn ghat_scaled(&self, mesh: &Mesh, p: f64) -> BoundaryField {
        assert!(p > 0.0);
        let m = self.leading_degree() as i32;
        let mut out = BoundaryField::zeros(mesh);
        for (k, phi) in &self.terms {
            out.axpy(factorial(*k) * p.powi(m - *k as i32), phi);
        }
        out
    }

    /// p-derivative of `ghat` at p = 1: `-sum_k (k+1)! phi_k`.
    pub fn ghat_dp_at_one(&self, mesh: &Mesh) -> BoundaryField {
        let mut out = BoundaryField::zeros(mesh);
        for (k, phi) in &self.terms {
            out.axpy(-(factorial(*k + 1)), phi);
        }
        out
    }
}

/// The medium: mesh plus the coefficient fields and the order field.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub mesh: Arc<Mesh>,
    pub sigma: ScalarField,
    pub rho: ScalarField,
    pub q: ScalarField,
    pub alpha: OrderField,
    /// order collapsed to one value per triangle, cached
    alpha_tri: Vec<f64>,
}

impl CoefficientSet {
    pub fn new(
        mesh: Arc<Mesh>,
        sigma: ScalarField,
        rho: ScalarField,
        q: ScalarField,
        alpha: OrderField,
    ) -> Result<Self> {
        if sigma.min() <= 0.0 {
            return Err(Error::InvalidField(format!(
                "sigma must have a positive lower bound; min is {}",
                sigma.min()
            )));
        }
        if rho.min() <= 0.0 {
            return Err(Error::InvalidField(format!(
                "rho must have a positive lower bound; min is {}",
                rho.min()
            )));
        }
        if q.min() < 0.0 {
            return Err(Error::InvalidField(format!(
                "q must be nonnegative; min is {}",
                q.min()
            )));
        }
        let alpha_tri = alpha.triangle_values(&mesh);
        Ok(Self {
            mesh,
            sigma,
            rho,
            q,
            alpha,
            alpha_tri,
        })
    }

    /// Unit coefficients with the given order field.
    pub fn homogeneous(mesh: Arc<Mesh>, alpha: OrderField) -> Result<Self> {
        let sigma = ScalarField::constant(&mesh, 1.0, Placement::Vertex);
        let rho = ScalarField::constant(&mesh, 1.0, Placement::Vertex);
        let q = ScalarField::constant(&mesh, 0.0, Placement::Vertex);
        Self::new(mesh, sigma, rho, q, alpha)
    }

    pub fn alpha_tri(&self) -> &[f64] {
        &self.alpha_tri
    }

    /// `p^alpha` per triangle; `p = 0` gives zero (the reaction reduces to q).
    pub fn p_alpha(&self, p: f64) -> Vec<f64> {
        assert!(p >= 0.0);
        self.alpha_tri.iter().map(|&a| p.powf(a)).collect()
    }

    /// Replace the order field, revalidating.
    pub fn with_alpha(&self, alpha: OrderField) -> Result<Self> {
        Self::new(
            self.mesh.clone(),
            self.sigma.clone(),
            self.rho.clone(),
            self.q.clone(),
            alpha,
        )
    }

    pub fn sigma_at(&self, vertex: usize) -> f64 {
        match self.sigma.placement() {
            Placement::Vertex => self.sigma.values()[vertex],
            // triangle-placed sigma at a vertex: average over incident triangles
            Placement::Triangle => {
                let mut sum = 0.0;
                let mut count = 0.0;
                for (t, tri) in self.mesh.triangles().iter().enumerate() {
                    if tri.contains(&vertex) {
                        sum += self.sigma.values()[t];
                        count += 1.0;
                    }
                }
                sum / count
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::disk_mesh;

    fn annuli_mesh() -> Mesh {
        disk_mesh(6).retag(|c| {
            let r = (c[0] * c[0] + c[1] * c[1]).sqrt();
            u32::from(r > 0.5)
        })
    }

    #[test]
    fn partition_order_two_tags() {
        let mesh = annuli_mesh();
        let partition = Partition::new(vec![(0, 0.4), (1, 0.7)]).unwrap();
        let field = build_partition_order(&mesh, &partition).unwrap();
        assert_eq!(field.alpha_min(), 0.4);
        assert_eq!(field.alpha_max(), 0.7);
    }

    #[test]
    fn partition_order_constant() {
        let mesh = disk_mesh(3);
        let partition = Partition::new(vec![(0, 0.5)]).unwrap();
        let field = build_partition_order(&mesh, &partition).unwrap();
        assert_eq!(field.alpha_min(), 0.5);
        assert_eq!(field.alpha_max(), 0.5);
    }

    #[test]
    fn partition_order_rejects_wide_bounds() {
        let mesh = annuli_mesh();
        let partition = Partition::new(vec![(0, 0.3), (1, 0.7)]).unwrap();
        let err = build_partition_order(&mesh, &partition).unwrap_err();
        assert!(err.to_string().contains("2*min(alpha)"), "{err}");
    }

    #[test]
    fn partition_rebuild_is_idempotent() {
        let mesh = annuli_mesh();
        let partition = Partition::new(vec![(0, 0.45), (1, 0.6)]).unwrap();
        let field = build_partition_order(&mesh, &partition).unwrap();
        // read back the per-tag constants and rebuild
        let mut seen = std::collections::BTreeMap::new();
        for (t, &tag) in mesh.triangle_tags().iter().enumerate() {
            seen.insert(tag, field.field().values()[t]);
        }
        let rebuilt =
            build_partition_order(&mesh, &Partition::new(seen.into_iter().collect()).unwrap())
                .unwrap();
        assert_eq!(field, rebuilt);
    }

    #[test]
    fn partition_rejects_missing_tags() {
        let mesh = annuli_mesh();
        let partition = Partition::new(vec![(0, 0.4)]).unwrap();
        assert!(build_partition_order(&mesh, &partition).is_err());
        let partition = Partition::new(vec![(0, 0.4), (1, 0.5), (7, 0.6)]).unwrap();
        assert!(build_partition_order(&mesh, &partition).is_err());
    }

    #[test]
    fn partition_entry_validation() {
        assert!(
            Partition::new(vec![(0, 0.4), (1, 0.4)]).is_err(),
            "not increasing"
        );
        assert!(Partition::new(vec![(0, 0.4), (0, 0.5)]).is_err(), "dup tag");
        assert!(Partition::new(vec![]).is_err());
    }

    #[test]
    fn excitation_validation() {
        let mesh = disk_mesh(2);
        assert!(Excitation::monomial(&mesh, 1, 1.0).is_err(), "k >= 2");
        assert!(
            Excitation::monomial(&mesh, 2, 0.0).is_err(),
            "phi_M vanishes"
        );
        let exc = Excitation::new(vec![
            (3, BoundaryField::constant(&mesh, 2.0)),
            (2, BoundaryField::constant(&mesh, 1.0)),
        ])
        .unwrap();
        assert_eq!(exc.leading_degree(), 3);
    }

    #[test]
    fn ghat_values() {
        let mesh = disk_mesh(2);
        let exc = Excitation::monomial(&mesh, 2, 1.0).unwrap();
        assert!((exc.ghat(&mesh, 1.0).values()[0] - 2.0).abs() < 1e-15);
        assert!((exc.ghat(&mesh, 0.5).values()[0] - 16.0).abs() < 1e-12);
        let exc2 = Excitation::new(vec![
            (2, BoundaryField::constant(&mesh, 1.0)),
            (3, BoundaryField::constant(&mesh, 1.0)),
        ])
        .unwrap();
        assert!((exc2.ghat(&mesh, 1.0).values()[0] - 8.0).abs() < 1e-15);
        // ghat_scaled = p^{M+1} ghat
        let p = 0.01;
        let a = exc2.ghat_scaled(&mesh, p).values()[0];
        let b = exc2.ghat(&mesh, p).values()[0] * p.powi(4);
        assert!((a - b).abs() < 1e-9 * a.abs());
        // dp ghat at 1: -(3! + 4!) = -30
        assert!((exc2.ghat_dp_at_one(&mesh).values()[0] + 30.0).abs() < 1e-12);
    }

    #[test]
    fn coefficient_set_validation() {
        let mesh = Arc::new(disk_mesh(2));
        let alpha = OrderField::constant(&mesh, 0.5).unwrap();
        let bad_sigma = ScalarField::constant(&mesh, 0.0, Placement::Vertex);
        let rho = ScalarField::constant(&mesh, 1.0, Placement::Vertex);
        let q = ScalarField::constant(&mesh, 0.0, Placement::Vertex);
        assert!(CoefficientSet::new(
            mesh.clone(),
            bad_sigma,
            rho.clone(),
            q.clone(),
            alpha.clone()
        )
        .is_err());
        let sigma = ScalarField::constant(&mesh, 1.0, Placement::Vertex);
        let bad_q = ScalarField::constant(&mesh, -1.0, Placement::Vertex);
        assert!(CoefficientSet::new(mesh.clone(), sigma, rho, bad_q, alpha).is_err());
    }

    #[test]
    fn p_alpha_degenerates_at_zero_and_one() {
        let mesh = Arc::new(annuli_mesh());
        let partition = Partition::new(vec![(0, 0.4), (1, 0.7)]).unwrap();
        let alpha = build_partition_order(&mesh, &partition).unwrap();
        let cfg = CoefficientSet::homogeneous(mesh, alpha).unwrap();
        assert!(cfg.p_alpha(0.0).iter().all(|&v| v == 0.0));
        assert!(cfg.p_alpha(1.0).iter().all(|&v| v == 1.0));
    }
}
