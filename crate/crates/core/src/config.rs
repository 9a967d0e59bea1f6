//! JSON experiment configuration with field-level validation.
//!
//! A configuration file describes the domain, the coefficient fields, the
//! order field, the excitation, the observation point, and the frequency
//! grid, plus optional per-command parameter blocks. Loading either produces
//! a fully validated [`Experiment`] or a list of precise error messages.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::forward::log_grid;
use crate::geometry::{
    boundary_point_index, build_disk_mesh, build_partition_order, disk_mesh, square_mesh,
    BoundaryField, CoefficientSet, Excitation, Mesh, OrderField, Partition, Placement, ScalarField,
};

pub const SCHEMA: &str = "varorder/1";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// versioned schema key; must equal [`SCHEMA`]
    pub schema: String,
    #[serde(default)]
    pub seed: Option<u64>,
    pub domain: DomainSpec,
    #[serde(default = "CoeffSpec::one")]
    pub sigma: CoeffSpec,
    #[serde(default = "CoeffSpec::one")]
    pub rho: CoeffSpec,
    #[serde(default = "CoeffSpec::zero")]
    pub q: CoeffSpec,
    pub order: OrderSpec,
    pub excitation: Vec<ExcitationTermSpec>,
    /// observation point, snapped to the nearest boundary vertex
    #[serde(default)]
    pub observation: Option<[f64; 2]>,
    #[serde(default)]
    pub p_grid: Option<GridSpec>,
    #[serde(default)]
    pub asympt: Option<AsymptParams>,
    #[serde(default)]
    pub invert: Option<InvertParams>,
    #[serde(default)]
    pub linearized: Option<LinearizedParams>,
    #[serde(default)]
    pub stability: Option<StabilityParams>,
    #[serde(default)]
    pub crosscheck: Option<CrosscheckParams>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    /// ring-structured unit disk; give `level` (mesh size about 2^-level) or
    /// an explicit ring count
    Disk {
        #[serde(default)]
        level: Option<u32>,
        #[serde(default)]
        rings: Option<usize>,
        #[serde(default)]
        tags: Option<TagSpec>,
    },
    /// unit square with n x n cells (solver verification only)
    Square {
        n: usize,
        #[serde(default)]
        tags: Option<TagSpec>,
    },
    /// `<path>.node` / `<path>.ele` pair
    File { path: String },
}

/// Subdomain tagging rules applied to triangle centroids.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TagSpec {
    /// tag i for radius between `radii[i-1]` and `radii[i]`; radii ascending
    Annuli { radii: Vec<f64> },
    /// equal angular sectors tagged 0..count
    Sectors { count: u32 },
    /// 0 left of the line x = split, 1 right of it
    Halfplane {
        #[serde(default)]
        split: f64,
    },
    /// annuli x sectors grid: tag = ring * sectors + sector
    Grid { radii: Vec<f64>, sectors: u32 },
}

impl TagSpec {
    pub fn tag_of(&self, c: [f64; 2]) -> u32 {
        let r = (c[0] * c[0] + c[1] * c[1]).sqrt();
        let sector = |count: u32| -> u32 {
            let th = c[1].atan2(c[0]) + std::f64::consts::PI;
            let s = (th / (2.0 * std::f64::consts::PI) * count as f64).floor() as u32;
            s.min(count - 1)
        };
        match self {
            TagSpec::Annuli { radii } => radii
                .iter()
                .position(|&edge| r < edge)
                .unwrap_or(radii.len()) as u32,
            TagSpec::Sectors { count } => sector(*count),
            TagSpec::Halfplane { split } => u32::from(c[0] > *split),
            TagSpec::Grid { radii, sectors } => {
                let ring = radii
                    .iter()
                    .position(|&edge| r < edge)
                    .unwrap_or(radii.len()) as u32;
                ring * sectors + sector(*sectors)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoeffSpec {
    Constant {
        value: f64,
    },
    /// `c0 + c1 r + c2 r^2` at vertices
    Radial {
        coeffs: Vec<f64>,
    },
    /// per-subdomain constants, triangle-placed
    PerTag {
        values: BTreeMap<String, f64>,
    },
}

impl CoeffSpec {
    fn one() -> Self {
        CoeffSpec::Constant { value: 1.0 }
    }

    fn zero() -> Self {
        CoeffSpec::Constant { value: 0.0 }
    }

    pub fn build(&self, mesh: &Mesh, field: &str, errors: &mut Vec<String>) -> ScalarField {
        match self {
            CoeffSpec::Constant { value } => ScalarField::constant(mesh, *value, Placement::Vertex),
            CoeffSpec::Radial { coeffs } => {
                if coeffs.is_empty() || coeffs.len() > 3 {
                    errors.push(format!("{field}: radial spec takes 1 to 3 coefficients"));
                    return ScalarField::constant(mesh, 1.0, Placement::Vertex);
                }
                let c = [
                    coeffs.first().copied().unwrap_or(0.0),
                    coeffs.get(1).copied().unwrap_or(0.0),
                    coeffs.get(2).copied().unwrap_or(0.0),
                ];
                ScalarField::from_vertex_fn(mesh, |p| {
                    let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                    c[0] + c[1] * r + c[2] * r * r
                })
            }
            CoeffSpec::PerTag { values } => {
                let mut table = BTreeMap::new();
                for (key, v) in values {
                    match key.parse::<u32>() {
                        Ok(tag) => {
                            table.insert(tag, *v);
                        }
                        Err(_) => {
                            errors.push(format!("{field}: tag key `{key}` is not an integer"))
                        }
                    }
                }
                for tag in mesh.triangle_tags() {
                    if !table.contains_key(tag) {
                        errors.push(format!("{field}: mesh tag {tag} has no value"));
                        return ScalarField::constant(mesh, 1.0, Placement::Vertex);
                    }
                }
                ScalarField::per_tag(mesh, |tag| table[&tag])
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrderSpec {
    Constant {
        value: f64,
    },
    /// per-tag order values; tags must cover the mesh
    Partition {
        values: Vec<(u32, f64)>,
    },
    /// `c0 + c1 r + c2 r^2` per triangle centroid
    Radial {
        coeffs: Vec<f64>,
    },
    /// text file `id value` per vertex
    Nodal {
        path: String,
    },
}

impl OrderSpec {
    pub fn build(&self, mesh: &Mesh, errors: &mut Vec<String>) -> Option<OrderField> {
        let push = |errors: &mut Vec<String>, e: Error| {
            errors.push(format!("order: {e}"));
            None
        };
        match self {
            OrderSpec::Constant { value } => match OrderField::constant(mesh, *value) {
                Ok(f) => Some(f),
                Err(e) => push(errors, e),
            },
            OrderSpec::Partition { values } => {
                let partition = match Partition::new(values.clone()) {
                    Ok(p) => p,
                    Err(e) => return push(errors, e),
                };
                match build_partition_order(mesh, &partition) {
                    Ok(f) => Some(f),
                    Err(e) => push(errors, e),
                }
            }
            OrderSpec::Radial { coeffs } => {
                if coeffs.is_empty() || coeffs.len() > 3 {
                    errors.push("order: radial spec takes 1 to 3 coefficients".into());
                    return None;
                }
                let c = [
                    coeffs.first().copied().unwrap_or(0.0),
                    coeffs.get(1).copied().unwrap_or(0.0),
                    coeffs.get(2).copied().unwrap_or(0.0),
                ];
                let field = ScalarField::from_centroid_fn(mesh, |p| {
                    let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                    c[0] + c[1] * r + c[2] * r * r
                });
                match OrderField::new(field) {
                    Ok(f) => Some(f),
                    Err(e) => push(errors, e),
                }
            }
            OrderSpec::Nodal { path } => {
                let text = match std::fs::read_to_string(path) {
                    Ok(t) => t,
                    Err(e) => {
                        errors.push(format!("order: cannot read {path}: {e}"));
                        return None;
                    }
                };
                let mut values = vec![f64::NAN; mesh.vertex_count()];
                for (lineno, line) in text.lines().enumerate() {
                    let line = line.split('#').next().unwrap_or("").trim();
                    if line.is_empty() {
                        continue;
                    }
                    let fields: Vec<&str> = line.split_whitespace().collect();
                    if fields.len() != 2 {
                        errors.push(format!("order: {path}:{}: expected `id value`", lineno + 1));
                        return None;
                    }
                    match (fields[0].parse::<usize>(), fields[1].parse::<f64>()) {
                        (Ok(id), Ok(v)) if id < values.len() => values[id] = v,
                        _ => {
                            errors.push(format!("order: {path}:{}: bad entry", lineno + 1));
                            return None;
                        }
                    }
                }
                if values.iter().any(|v| v.is_nan()) {
                    errors.push(format!("order: {path}: not every vertex has a value"));
                    return None;
                }
                let field = match ScalarField::new(mesh, values, Placement::Vertex) {
                    Ok(f) => f,
                    Err(e) => return push(errors, e),
                };
                match OrderField::new(field) {
                    Ok(f) => Some(f),
                    Err(e) => push(errors, e),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcitationTermSpec {
    pub k: u32,
    pub phi: ProfileSpec,
}

/// Boundary profile, parametrized by the polar angle for harmonic content.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        value: f64,
    },
    /// `c0 + sum_m cos[m-1] cos(m th) + sin[m-1] sin(m th)`
    Harmonic {
        c0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

impl ProfileSpec {
    pub fn build(&self, mesh: &Mesh) -> BoundaryField {
        match self {
            ProfileSpec::Constant { value } => BoundaryField::constant(mesh, *value),
            ProfileSpec::Harmonic { c0, cos, sin } => BoundaryField::from_fn(mesh, |p| {
                let th = p[1].atan2(p[0]);
                let mut v = *c0;
                for (m, a) in cos.iter().enumerate() {
                    v += a * ((m + 1) as f64 * th).cos();
                }
                for (m, b) in sin.iter().enumerate() {
                    v += b * ((m + 1) as f64 * th).sin();
                }
                v
            }),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Log { min: f64, max: f64, points: usize },
    Linear { min: f64, max: f64, points: usize },
    Explicit { values: Vec<f64> },
}

impl GridSpec {
    pub fn build(&self, errors: &mut Vec<String>) -> Vec<f64> {
        match self {
            GridSpec::Log { min, max, points } => {
                if !(*min > 0.0 && max > min && *points >= 2) {
                    errors
                        .push("p_grid: log grid needs 0 < min < max and at least 2 points".into());
                    return vec![1.0];
                }
                log_grid(*min, *max, *points)
            }
            GridSpec::Linear { min, max, points } => {
                if !(*min > 0.0 && max > min && *points >= 2) {
                    errors.push(
                        "p_grid: linear grid needs 0 < min < max and at least 2 points".into(),
                    );
                    return vec![1.0];
                }
                (0..*points)
                    .map(|i| min + (max - min) * i as f64 / (*points - 1) as f64)
                    .collect()
            }
            GridSpec::Explicit { values } => {
                if values.is_empty()
                    || values.iter().any(|v| *v <= 0.0)
                    || values.windows(2).any(|w| w[1] <= w[0])
                {
                    errors.push(
                        "p_grid: explicit grid must be positive and strictly increasing".into(),
                    );
                    return vec![1.0];
                }
                values.clone()
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptParams {
    /// expansion depths to probe (default [1, 2])
    #[serde(default)]
    pub depths: Option<Vec<usize>>,
    /// |p-1| grid for the near-one probe
    #[serde(default)]
    pub delta_grid: Option<GridSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertParams {
    /// use the known-medium baseline computed from the leading lift
    #[serde(default)]
    pub known_medium: bool,
    #[serde(default)]
    pub known_baseline: Option<f64>,
    #[serde(default)]
    pub max_terms: Option<usize>,
    #[serde(default)]
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearizedParams {
    /// per-tag order perturbation defining the synthetic truth
    pub dalpha: Vec<(u32, f64)>,
    #[serde(default)]
    pub tikhonov: Option<f64>,
    #[serde(default)]
    pub nonnegative: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityParams {
    /// the comparison order field (alpha1); the main `order` is alpha2
    pub order1: OrderSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrosscheckParams {
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub horizon: Option<f64>,
}

/// A validated experiment: medium, excitation, observation, grids, raw
/// parameter blocks.
#[derive(Debug)]
pub struct Experiment {
    pub cfg: CoefficientSet,
    pub excitation: Excitation,
    pub x0: usize,
    pub snap_distance: f64,
    pub p_grid: Vec<f64>,
    pub seed: u64,
    pub raw: ConfigFile,
}

/// Parses and validates a configuration file.
pub fn load_experiment(path: &Path) -> Result<Experiment> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let file: ConfigFile = serde_json::from_str(&text)?;
    build_experiment(file)
}

/// Validates a parsed configuration, collecting every error.
pub fn build_experiment(file: ConfigFile) -> Result<Experiment> {
    let mut errors: Vec<String> = Vec::new();
    if file.schema != SCHEMA {
        errors.push(format!(
            "schema: expected \"{SCHEMA}\", got \"{}\"",
            file.schema
        ));
    }

    let mesh = match &file.domain {
        DomainSpec::Disk { level, rings, tags } => {
            let base = match (level, rings) {
                (_, Some(r)) if *r >= 2 => Some(disk_mesh(*r)),
                (_, Some(r)) => {
                    errors.push(format!("domain: disk needs at least 2 rings, got {r}"));
                    None
                }
                (Some(l), None) => Some(build_disk_mesh(*l)),
                (None, None) => {
                    errors.push("domain: disk needs `level` or `rings`".into());
                    None
                }
            };
            base.map(|m| match tags {
                Some(spec) => m.retag(|c| spec.tag_of(c)),
                None => m,
            })
        }
        DomainSpec::Square { n, tags } => {
            if *n < 1 {
                errors.push("domain: square needs n >= 1".into());
                None
            } else {
                let m = square_mesh(*n);
                Some(match tags {
                    Some(spec) => m.retag(|c| spec.tag_of(c)),
                    None => m,
                })
            }
        }
        DomainSpec::File { path } => match crate::geometry::io::read_mesh(Path::new(path)) {
            Ok(m) => Some(m),
            Err(e) => {
                errors.push(format!("domain: {e}"));
                None
            }
        },
    };
    let Some(mesh) = mesh else {
        return Err(Error::Config(errors));
    };
    let mesh = Arc::new(mesh);

    let sigma = file.sigma.build(&mesh, "sigma", &mut errors);
    let rho = file.rho.build(&mesh, "rho", &mut errors);
    let q = file.q.build(&mesh, "q", &mut errors);
    let alpha = file.order.build(&mesh, &mut errors);

    let mut terms = Vec::new();
    for term in &file.excitation {
        terms.push((term.k, term.phi.build(&mesh)));
    }
    let excitation = match Excitation::new(terms) {
        Ok(e) => Some(e),
        Err(e) => {
            errors.push(format!("excitation: {e}"));
            None
        }
    };

    let cfg = match alpha {
        Some(alpha) => match CoefficientSet::new(mesh.clone(), sigma, rho, q, alpha) {
            Ok(c) => Some(c),
            Err(e) => {
                errors.push(format!("coefficients: {e}"));
                None
            }
        },
        None => None,
    };

    let observation = file.observation.unwrap_or([1.0, 0.0]);
    let (x0, snap_distance) = boundary_point_index(&mesh, observation);

    let p_grid = match &file.p_grid {
        Some(spec) => spec.build(&mut errors),
        None => crate::forward::default_small_p_grid(),
    };

    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    Ok(Experiment {
        cfg: cfg.expect("validated"),
        excitation: excitation.expect("validated"),
        x0,
        snap_distance,
        p_grid,
        seed: file.seed.unwrap_or(42),
        raw: file,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(order: &str) -> String {
        format!(
            r#"{{
                "schema": "varorder/1",
                "domain": {{"kind": "disk", "rings": 6, "tags": {{"kind": "annuli", "radii": [0.5]}}}},
                "order": {order},
                "excitation": [{{"k": 2, "phi": {{"kind": "constant", "value": 1.0}}}}]
            }}"#
        )
    }

    #[test]
    fn loads_a_minimal_disk_config() {
        let file: ConfigFile =
            serde_json::from_str(&minimal(r#"{"kind": "constant", "value": 0.5}"#)).unwrap();
        let exp = build_experiment(file).unwrap();
        assert_eq!(exp.seed, 42);
        assert_eq!(exp.p_grid.len(), 24);
        assert!(exp.snap_distance < 1e-12);
        assert_eq!(exp.excitation.leading_degree(), 2);
    }

    #[test]
    fn order_bound_violation_is_named() {
        let file: ConfigFile = serde_json::from_str(&minimal(
            r#"{"kind": "partition", "values": [[0, 0.4], [1, 0.9]]}"#,
        ))
        .unwrap();
        let err = build_experiment(file).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("2*min(alpha)"), "{text}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn schema_and_grid_errors_are_collected_together() {
        let text = r#"{
            "schema": "varorder/999",
            "domain": {"kind": "disk", "rings": 6},
            "order": {"kind": "constant", "value": 0.5},
            "excitation": [{"k": 2, "phi": {"kind": "constant", "value": 1.0}}],
            "p_grid": {"kind": "log", "min": 1.0, "max": 0.5, "points": 4}
        }"#;
        let file: ConfigFile = serde_json::from_str(text).unwrap();
        match build_experiment(file) {
            Err(Error::Config(list)) => {
                assert_eq!(list.len(), 2, "{list:?}");
                assert!(list[0].contains("schema"));
                assert!(list[1].contains("p_grid"));
            }
            other => panic!("expected config error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{
            "schema": "varorder/1",
            "domain": {"kind": "disk", "rings": 4},
            "order": {"kind": "constant", "value": 0.5},
            "excitation": [],
            "typo_field": 1
        }"#;
        assert!(serde_json::from_str::<ConfigFile>(text).is_err());
    }

    #[test]
    fn tag_specs_cover_the_plane() {
        let annuli = TagSpec::Annuli {
            radii: vec![0.3, 0.7],
        };
        assert_eq!(annuli.tag_of([0.1, 0.0]), 0);
        assert_eq!(annuli.tag_of([0.5, 0.0]), 1);
        assert_eq!(annuli.tag_of([0.9, 0.0]), 2);
        let sectors = TagSpec::Sectors { count: 4 };
        let tags: std::collections::HashSet<u32> = (0..8)
            .map(|i| {
                let th = i as f64 / 8.0 * std::f64::consts::TAU;
                sectors.tag_of([0.5 * th.cos(), 0.5 * th.sin()])
            })
            .collect();
        assert_eq!(tags.len(), 4);
        let grid = TagSpec::Grid {
            radii: vec![0.5],
            sectors: 6,
        };
        assert_eq!(grid.tag_of([0.1, 0.05]), grid.tag_of([0.1, 0.05]));
        assert!(grid.tag_of([0.9, 0.0]) >= 6);
    }

    #[test]
    fn harmonic_profile_produces_sign_changes() {
        let mesh = disk_mesh(6);
        let spec = ProfileSpec::Harmonic {
            c0: 0.0,
            cos: vec![1.0],
            sin: vec![],
        };
        let field = spec.build(&mesh);
        assert!(field.values().iter().any(|&v| v > 0.1));
        assert!(field.values().iter().any(|&v| v < -0.1));
    }
}
