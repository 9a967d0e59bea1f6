//! Expansion cascades of the boundary flux at `p -> 0` and `p -> 1`,
//! remainder-rate probes, truncated resolvent series, and the quadratic
//! bound on `p^alpha` near `p = 1`.
//!
//! Everything here compares discrete quantities computed on one mesh, so the
//! measured remainder rates are limited by solver accuracy rather than by
//! discretization error.

use rand::Rng;
use rand::SeedableRng;
use rayon::prelude::*;

use crate::elliptic::{
    assemble, assemble_load, l2_norm, max_norm, Load, LoadSpec, SOLVER_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::forward::{bare_flux_values, solve_uhat_scaled};
use crate::geometry::{BoundaryField, CoefficientSet, Excitation, ScalarField};

/// Which degenerate frequency the expansion is anchored at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `p -> 0+`: reaction-free recursion driven by `-p^alpha rho`
    Zero,
    /// `p -> 1`: reaction `q + rho`, recursion driven by `(1 - p^alpha) rho`
    One,
}

/// One term of the recursion, with its boundary flux at the observation point.
#[derive(Debug, Clone)]
pub struct CascadeTerm {
    pub k: u32,
    pub ell: usize,
    pub field: ScalarField,
    /// bare normal derivative at the observation vertex
    pub flux_at_x0: f64,
}

/// All terms `(k, ell)` for `ell < depth`, at one frequency.
#[derive(Debug, Clone)]
pub struct ExpansionCascade {
    pub regime: Regime,
    pub p: f64,
    pub depth: usize,
    pub x0: usize,
    pub terms: Vec<CascadeTerm>,
}

impl ExpansionCascade {
    /// `sum_{k,ell} dnu u_{k,ell}(p, x0)` — the truncated expansion of the
    /// scaled flux `p^{M+1} dnu Uhat(p, x0)`.
    pub fn flux_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.flux_at_x0).sum()
    }
}

fn check_observation(cfg: &CoefficientSet, x0: usize) -> Result<usize> {
    cfg.mesh
        .boundary_slot(x0)
        .ok_or_else(|| Error::InvalidField(format!("vertex {x0} is not on the boundary")))
}

fn cascade(
    cfg: &CoefficientSet,
    excitation: &Excitation,
    x0: usize,
    p: f64,
    depth: usize,
    regime: Regime,
) -> Result<ExpansionCascade> {
    assert!(depth >= 1, "cascade depth must be at least 1");
    let slot = check_observation(cfg, x0)?;
    let system = match regime {
        Regime::Zero => assemble(&cfg.mesh, &cfg.sigma, &cfg.q)?,
        Regime::One => crate::forward::assemble_transformed(cfg, 1.0)?,
    };
    // recursion source scale per triangle
    let scale: Vec<f64> = match regime {
        Regime::Zero => cfg.p_alpha(p).iter().map(|s| -s).collect(),
        Regime::One => cfg.p_alpha(p).iter().map(|s| 1.0 - s).collect(),
    };
    let m = excitation.leading_degree();
    let mut terms = Vec::new();
    for (k, phi) in excitation.terms() {
        let mut bdata = BoundaryField::zeros(&cfg.mesh);
        bdata.axpy(
            crate::special::factorial(*k) * p.powi(m as i32 - *k as i32),
            phi,
        );
        let mut prev = system.solve_dirichlet(&Load::zero(&cfg.mesh), &bdata)?;
        let flux = system.variational_flux(&prev, &Load::zero(&cfg.mesh))?;
        terms.push(CascadeTerm {
            k: *k,
            ell: 0,
            field: prev.clone(),
            flux_at_x0: bare_flux_values(cfg, &flux)[slot],
        });
        for ell in 1..depth {
            let load = assemble_load(
                &cfg.mesh,
                LoadSpec {
                    density: &prev,
                    weight: Some(&cfg.rho),
                    tri_scale: Some(&scale),
                    tri_mask: None,
                },
            );
            let next = system.solve_homogeneous(&load)?;
            let flux = system.variational_flux(&next, &load)?;
            terms.push(CascadeTerm {
                k: *k,
                ell,
                field: next.clone(),
                flux_at_x0: bare_flux_values(cfg, &flux)[slot],
            });
            prev = next;
        }
    }
    Ok(ExpansionCascade {
        regime,
        p,
        depth,
        x0,
        terms,
    })
}

/// Terms of the small-frequency expansion: `u_{k,0}` lifts the boundary data
/// `k! p^{M-k} phi_k` through the reaction-free operator, and each `u_{k,ell}`
/// solves the same operator with source `-p^alpha rho u_{k,ell-1}`.
pub fn cascade_zero(
    cfg: &CoefficientSet,
    excitation: &Excitation,
    x0: usize,
    p: f64,
    depth: usize,
) -> Result<ExpansionCascade> {
    assert!(p > 0.0);
    cascade(cfg, excitation, x0, p, depth, Regime::Zero)
}

/// Terms of the near-`p = 1` expansion: reaction `q + rho`, recursion source
/// `(1 - p^alpha) rho v_{k,ell-1}`.
pub fn cascade_one(
    cfg: &CoefficientSet,
    excitation: &Excitation,
    x0: usize,
    p: f64,
    depth: usize,
) -> Result<ExpansionCascade> {
    assert!(
        (0.5..1.5).contains(&p),
        "the near-one expansion is built for p in (0.5, 1.5), got {p}"
    );
    cascade(cfg, excitation, x0, p, depth, Regime::One)
}

/// Measured remainder of a truncated expansion over a frequency grid.
#[derive(Debug, Clone)]
pub struct RemainderProbe {
    /// (abscissa, |R|): abscissa is `p` in the zero regime, `|p-1|` near one
    pub samples: Vec<(f64, f64)>,
    /// least-squares slope of `log |R|` against the log abscissa, if enough
    /// samples survive the noise floor
    pub slope: Option<f64>,
    /// the rate the bound predicts: `N alpha_min` (zero) or `N` (one)
    pub floor_rate: f64,
    /// samples actually used for the fit
    pub fitted: usize,
}

/// Samples below `100 x` solver tolerance (relative to the flux scale) are
/// numerical noise and excluded from slope fits.
pub fn noise_floor(scale: f64) -> f64 {
    100.0 * SOLVER_TOLERANCE * scale
}

fn fit_slope(samples: &[(f64, f64)], floor: f64) -> (Option<f64>, usize) {
    // largest contiguous run above the floor
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, &(_, r)) in samples.iter().enumerate() {
        if r > floor {
            start.get_or_insert(i);
            let s = start.unwrap();
            if best.is_none_or(|(bs, be)| be - bs < i + 1 - s) {
                best = Some((s, i + 1));
            }
        } else {
            start = None;
        }
    }
    let Some((s, e)) = best else {
        return (None, 0);
    };
    let run = &samples[s..e];
    if run.len() < 6 {
        return (None, run.len());
    }
    let n = run.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in run {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let denom = n * sxx - sx * sx;
    (
        (denom != 0.0).then(|| (n * sxy - sx * sy) / denom),
        run.len(),
    )
}

/// Remainder of the depth-`n` expansion at `p -> 0`:
/// `R(p) = p^{M+1} dnu Uhat(p,x0) - sum dnu u_{k,ell}(p,x0)`.
pub fn remainder_probe_zero(
    cfg: &CoefficientSet,
    excitation: &Excitation,
    x0: usize,
    depth: usize,
    p_grid: &[f64],
) -> Result<RemainderProbe> {
    let slot = check_observation(cfg, x0)?;
    let rows: Vec<(f64, f64, f64)> = p_grid
        .par_iter()
        .map(|&p| -> Result<(f64, f64, f64)> {
            let scaled = solve_uhat_scaled(cfg, excitation, p)?;
            let system = crate::forward::assemble_transformed(cfg, p)?;
            let flux = system.variational_flux(&scaled, &Load::zero(&cfg.mesh))?;
            let total = bare_flux_values(cfg, &flux)[slot];
            let sum = cascade_zero(cfg, excitation, x0, p, depth)?.flux_sum();
            Ok((p, (total - sum).abs(), total.abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    let scale = rows.iter().fold(0.0f64, |m, r| m.max(r.2));
    let samples: Vec<(f64, f64)> = rows.into_iter().map(|(p, r, _)| (p, r)).collect();
    let (slope, fitted) = fit_slope(&samples, noise_floor(scale));
    Ok(RemainderProbe {
        samples,
        slope,
        floor_rate: depth as f64 * cfg.alpha.alpha_min(),
        fitted,
    })
}

/// Remainder of the depth-`n` expansion near `p = 1`, probed on both sides:
/// for each `delta` the larger of `|R(1 - delta)|, |R(1 + delta)|` is kept.
pub fn remainder_probe_one(
    cfg: &CoefficientSet,
    excitation: &Excitation,
    x0: usize,
    depth: usize,
    delta_grid: &[f64],
) -> Result<RemainderProbe> {
    let slot = check_observation(cfg, x0)?;
    if delta_grid.iter().any(|&d| d <= 0.0 || d >= 0.4) {
        return Err(Error::InvalidField(
            "delta grid must lie in (0, 0.4)".into(),
        ));
    }
    let eval = |p: f64| -> Result<(f64, f64)> {
        let scaled = solve_uhat_scaled(cfg, excitation, p)?;
        let system = crate::forward::assemble_transformed(cfg, p)?;
        let flux = system.variational_flux(&scaled, &Load::zero(&cfg.mesh))?;
        let total = bare_flux_values(cfg, &flux)[slot];
        let sum = cascade_one(cfg, excitation, x0, p, depth)?.flux_sum();
        Ok(((total - sum).abs(), total.abs()))
    };
    let rows: Vec<(f64, f64, f64)> = delta_grid
        .par_iter()
        .map(|&d| -> Result<(f64, f64, f64)> {
            let (r_lo, s_lo) = eval(1.0 - d)?;
            let (r_hi, s_hi) = eval(1.0 + d)?;
            Ok((d, r_lo.max(r_hi), s_lo.max(s_hi)))
        })
        .collect::<Result<Vec<_>>>()?;
    let scale = rows.iter().fold(0.0f64, |m, r| m.max(r.2));
    let samples: Vec<(f64, f64)> = rows.into_iter().map(|(d, r, _)| (d, r)).collect();
    let (slope, fitted) = fit_slope(&samples, noise_floor(scale));
    Ok(RemainderProbe {
        samples,
        slope,
        floor_rate: depth as f64,
        fitted,
    })
}

/// Norms of the defect between the resolvent and its truncated series.
#[derive(Debug, Clone, Copy)]
pub struct TruncationResidual {
    pub max_norm: f64,
    pub l2_norm: f64,
}

/// `|| (A + p^alpha)^{-1} f  -  sum_{i<N} A^{-1} (-p^alpha A^{-1})^i f ||`
/// in the vertex max norm and the lumped L2 norm.
pub fn neumann_truncation_residual(
    cfg: &CoefficientSet,
    f: &ScalarField,
    p: f64,
    depth: usize,
) -> Result<TruncationResidual> {
    assert!(p > 0.0 && p < 1.0, "the series is for p in (0, 1)");
    assert!(depth >= 1);
    let exact = crate::elliptic::apply_resolvent(cfg, p, f)?;
    let base = assemble(&cfg.mesh, &cfg.sigma, &cfg.q)?;
    let minus_p_alpha: Vec<f64> = cfg.p_alpha(p).iter().map(|s| -s).collect();
    let mut term =
        base.solve_homogeneous(&assemble_load(&cfg.mesh, LoadSpec::weighted(f, &cfg.rho)))?;
    let mut partial: Vec<f64> = term.values().to_vec();
    for _ in 1..depth {
        let load = assemble_load(
            &cfg.mesh,
            LoadSpec {
                density: &term,
                weight: Some(&cfg.rho),
                tri_scale: Some(&minus_p_alpha),
                tri_mask: None,
            },
        );
        term = base.solve_homogeneous(&load)?;
        for (acc, t) in partial.iter_mut().zip(term.values()) {
            *acc += t;
        }
    }
    let defect: Vec<f64> = exact
        .values()
        .iter()
        .zip(&partial)
        .map(|(e, s)| e - s)
        .collect();
    Ok(TruncationResidual {
        max_norm: max_norm(&defect),
        l2_norm: l2_norm(&cfg.mesh, &defect),
    })
}

/// The depth-1 defect two ways: truncation residual and the closed resolvent
/// identity `A^{-1} p^alpha (A + p^alpha)^{-1} f`. Equal up to solver noise.
pub fn neumann_identity_check(cfg: &CoefficientSet, f: &ScalarField, p: f64) -> Result<(f64, f64)> {
    let truncation = neumann_truncation_residual(cfg, f, p, 1)?;
    let resolvent = crate::elliptic::apply_resolvent(cfg, p, f)?;
    let base = assemble(&cfg.mesh, &cfg.sigma, &cfg.q)?;
    let p_alpha = cfg.p_alpha(p);
    let load = assemble_load(
        &cfg.mesh,
        LoadSpec {
            density: &resolvent,
            weight: Some(&cfg.rho),
            tri_scale: Some(&p_alpha),
            tri_mask: None,
        },
    );
    let identity = base.solve_homogeneous(&load)?;
    Ok((truncation.max_norm, max_norm(identity.values())))
}

/// `|| p^alpha - 1 - (p-1) alpha ||_inf` over the triangle orders; bounded by
/// `(p-1)^2` for orders in (0,1) and `p` in (0.5, 1.5).
pub fn taylor_order_bound(alpha_tri: &[f64], p: f64) -> f64 {
    assert!((0.5..1.5).contains(&p), "bound holds for p in (0.5, 1.5)");
    alpha_tri
        .iter()
        .map(|&a| (p.powf(a) - 1.0 - (p - 1.0) * a).abs())
        .fold(0.0, f64::max)
}

/// Operator-norm estimate of `A^{-1}` in the lumped L2 norm from seeded
/// random probes; feeds the working radius for the small-`p` expansion.
///
/// A raw random vector is dominated by high frequencies that `A^{-1}` damps,
/// so each probe is sharpened by a few power-iteration steps.
pub fn resolvent_norm_estimate(cfg: &CoefficientSet, probes: usize, seed: u64) -> Result<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..probes {
        let values: Vec<f64> = (0..cfg.mesh.vertex_count())
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let mut f = ScalarField::new(&cfg.mesh, values, crate::geometry::Placement::Vertex)?;
        for _ in 0..3 {
            let image = crate::elliptic::apply_resolvent(cfg, 0.0, &f)?;
            let nf = l2_norm(&cfg.mesh, f.values());
            let ni = l2_norm(&cfg.mesh, image.values());
            if nf == 0.0 || ni == 0.0 {
                break;
            }
            best = best.max(ni / nf);
            f = image;
        }
    }
    Ok(best)
}

/// Working radius for the small-`p` expansion: `min(0.1, (2 C_A)^{-1/alpha_min})`,
/// mirroring the contraction requirement `C_A p^{alpha_min} < 1/2`.
pub fn default_p0(resolvent_norm: f64, alpha_min: f64) -> f64 {
    (2.0 * resolvent_norm).powf(-1.0 / alpha_min).min(0.1)
}
