//! Time-domain cross-validation: implicit L1 stepping of the variable-order
//! Caputo problem and the `t e^{-t}`-weighted time integral of the boundary
//! flux.
//!
//! The fractional derivative with per-triangle order `a` is discretized as
//!
//! ```text
//! d_t^a U(t_n) ~ tau^{-a} sum_{m=0}^{n-1} w_m^a (U^{n-m} - U^{n-m-1}),
//! w_m^a = ((m+1)^{1-a} - m^{1-a}) / Gamma(2-a),
//! ```
//!
//! one weight table per distinct order value. The full history enters every
//! step; the convolution is evaluated in blocks (a near field over the
//! current block plus contributions scattered ahead when a block completes)
//! so the cost stays a cache-friendly `O(steps^2 x vertices)` with one
//! shared factorization for all steps.

use rayon::prelude::*;

use crate::elliptic::{assemble_with, Reaction};
use crate::error::{Error, Result};
use crate::forward::WeightedData;
use crate::geometry::{CoefficientSet, Excitation};
use crate::special::gamma;

/// Convolution weights for one order value.
#[derive(Debug, Clone)]
pub struct L1Weights {
    pub alpha: f64,
    pub tau: f64,
    /// `w_m` for `m = 0..=n_steps`
    pub weights: Vec<f64>,
}

/// `w_m = ((m+1)^{1-a} - m^{1-a}) / Gamma(2-a)`; positive and strictly
/// decreasing for orders in (0,1).
pub fn l1_weights(alpha: f64, tau: f64, n_steps: usize) -> L1Weights {
    assert!((0.0..1.0).contains(&alpha) && alpha > 0.0);
    assert!(tau > 0.0);
    let norm = 1.0 / gamma(2.0 - alpha);
    let e = 1.0 - alpha;
    let weights = (0..=n_steps)
        .map(|m| {
            let m = m as f64;
            ((m + 1.0).powf(e) - m.powf(e)) * norm
        })
        .collect();
    L1Weights {
        alpha,
        tau,
        weights,
    }
}

/// Per-step boundary flux (bare normal derivative) at tracked vertices.
#[derive(Debug, Clone)]
pub struct FluxSeries {
    pub tau: f64,
    pub horizon: f64,
    /// global vertex indices being tracked
    pub tracked: Vec<usize>,
    /// `values[n][k]` = flux at step n, tracked vertex k; step 0 is t = 0
    pub values: Vec<Vec<f64>>,
}

impl FluxSeries {
    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.tau
    }
}

/// steps per convolution block; the block's contribution to all later steps
/// is scattered in one parallel pass when it completes
const BLOCK: usize = 256;

struct OrderGroup {
    weights: L1Weights,
    /// `tau^{-a}` premultiplier
    tau_pow: f64,
    /// contributions of completed blocks to each future step, flat
    /// `(n_steps+1) x nv`
    future: Vec<f64>,
}

/// Implicit L1 time stepping up to `horizon`, tracking the boundary flux at
/// the given vertices (all boundary vertices when `None`).
///
/// The spatial system is factored once and reused for every step.
pub fn l1_step_solve(
    cfg: &CoefficientSet,
    excitation: &Excitation,
    tau: f64,
    horizon: f64,
    tracked: Option<&[usize]>,
) -> Result<FluxSeries> {
    assert!(tau > 0.0);
    if horizon < 10.0 {
        return Err(Error::InvalidField(format!(
            "the weighted integral needs a horizon of at least 10, got {horizon}"
        )));
    }
    let n_steps = (horizon / tau).round() as usize;
    let nv = cfg.mesh.vertex_count();
    let tracked: Vec<usize> = match tracked {
        Some(list) => {
            for &v in list {
                if cfg.mesh.boundary_slot(v).is_none() {
                    return Err(Error::InvalidField(format!(
                        "tracked vertex {v} is not on the boundary"
                    )));
                }
            }
            list.to_vec()
        }
        None => cfg.mesh.boundary_vertices().to_vec(),
    };
    let slots: Vec<usize> = tracked
        .iter()
        .map(|&v| cfg.mesh.boundary_slot(v).expect("validated above"))
        .collect();

    // group triangles by distinct order value
    let alpha_tri = cfg.alpha_tri();
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (t, &a) in alpha_tri.iter().enumerate() {
        match groups.iter_mut().find(|(ga, _)| *ga == a) {
            Some((_, tris)) => tris.push(t),
            None => groups.push((a, vec![t])),
        }
    }
    let mut order_groups: Vec<OrderGroup> = groups
        .iter()
        .map(|(a, _)| OrderGroup {
            weights: l1_weights(*a, tau, n_steps),
            tau_pow: tau.powf(-a),
            future: vec![0.0; (n_steps + 1) * nv],
        })
        .collect();
    // triangle -> group index
    let group_of: Vec<usize> = alpha_tri
        .iter()
        .map(|a| groups.iter().position(|(ga, _)| ga == a).unwrap())
        .collect();

    // per-vertex lumped reaction weights: for each group g,
    // mass_g[v] = sum_{T in g, T contains v} (|T|/3) rho(T,v)
    let mut group_mass: Vec<Vec<f64>> = vec![vec![0.0; nv]; order_groups.len()];
    for (t, tri) in cfg.mesh.triangles().iter().enumerate() {
        let third = cfg.mesh.areas()[t] / 3.0;
        let g = group_of[t];
        for &v in tri {
            group_mass[g][v] += third * cfg.rho.at_triangle_vertex(t, v);
        }
    }

    // spatial system: stiffness + q mass + sum_g tau^{-a} w_0^a rho mass
    let reaction_scale: Vec<f64> = alpha_tri
        .iter()
        .map(|&a| {
            let g = groups.iter().position(|(ga, _)| *ga == a).unwrap();
            order_groups[g].tau_pow * order_groups[g].weights.weights[0]
        })
        .collect();
    let system = assemble_with(
        &cfg.mesh,
        &cfg.sigma,
        Reaction {
            base: Some(&cfg.q),
            weighted: Some((&cfg.rho, &reaction_scale)),
        },
    )?;

    let mut u_prev = vec![0.0; nv];
    let mut pending: Vec<Vec<f64>> = Vec::with_capacity(BLOCK); // d^j of the open block
    let mut block_start = 0usize; // last scattered step

    let mut series = FluxSeries {
        tau,
        horizon: n_steps as f64 * tau,
        tracked,
        values: Vec::with_capacity(n_steps + 1),
    };
    series.values.push(vec![0.0; slots.len()]);

    // target rows per scatter task: the row chunk stays cache-resident while
    // the block of differences streams through once per chunk
    const ROW_CHUNK: usize = 32;

    let mut rhs = vec![0.0; nv];
    let mut hist = vec![0.0; nv];
    for n in 1..=n_steps {
        // RHS functional: sum_g mass_g[v] tau^{-a} (w_0 u_prev[v] - hist_g[v])
        rhs.iter_mut().for_each(|r| *r = 0.0);
        for (g, og) in order_groups.iter().enumerate() {
            let w = &og.weights.weights;
            let mass = &group_mass[g];
            hist.copy_from_slice(&og.future[n * nv..(n + 1) * nv]);
            for (jj, d) in pending.iter().enumerate() {
                let wt = w[n - (block_start + 1 + jj)];
                for (h, dv) in hist.iter_mut().zip(d) {
                    *h += wt * dv;
                }
            }
            let w0 = w[0];
            for v in 0..nv {
                rhs[v] += mass[v] * og.tau_pow * (w0 * u_prev[v] - hist[v]);
            }
        }
        let load = crate::elliptic::Load::from_values(rhs.clone());
        let bdata = excitation.at_time(&cfg.mesh, n as f64 * tau);
        let u = system.solve_dirichlet(&load, &bdata)?;
        let flux = system.variational_flux(&u, &load)?;
        let bare = crate::forward::bare_flux_values(cfg, &flux);
        series.values.push(slots.iter().map(|&s| bare[s]).collect());

        let d: Vec<f64> = u.values().iter().zip(&u_prev).map(|(a, b)| a - b).collect();
        pending.push(d);
        u_prev.copy_from_slice(u.values());

        // scatter the completed block into every later step
        if pending.len() == BLOCK && n < n_steps {
            for og in order_groups.iter_mut() {
                let w = &og.weights.weights;
                og.future[(n + 1) * nv..]
                    .par_chunks_mut(nv * ROW_CHUNK)
                    .enumerate()
                    .for_each(|(chunk_idx, rows)| {
                        let first_target = n + 1 + chunk_idx * ROW_CHUNK;
                        for (jj, d) in pending.iter().enumerate() {
                            let j = block_start + 1 + jj;
                            for (r_idx, row) in rows.chunks_mut(nv).enumerate() {
                                let wt = w[first_target + r_idx - j];
                                for (r, dv) in row.iter_mut().zip(d) {
                                    *r += wt * dv;
                                }
                            }
                        }
                    });
            }
            block_start = n;
            pending.clear();
        }
    }
    Ok(series)
}

/// Weighted time integral and its truncation-tail estimate.
#[derive(Debug, Clone)]
pub struct WeightedIntegral {
    /// per-tracked-vertex value of `int_0^T flux t e^{-t} dt`
    pub values: Vec<f64>,
    /// bound on the discarded `[T, inf)` tail, assuming the flux grows like
    /// `t^M`
    pub tail_bound: f64,
}

impl WeightedIntegral {
    pub fn as_weighted_data(&self) -> WeightedData {
        WeightedData::new(self.values.clone())
    }
}

/// Trapezoidal quadrature of `int flux(t) t e^{-t} dt` per tracked vertex.
///
/// `leading_degree` is the polynomial degree of the excitation, used for the
/// tail estimate `C T^{M+1} e^{-T} (1 + (M+1)/T + ...)` with
/// `C = max |flux(T)| / T^M`.
pub fn weighted_time_integral(series: &FluxSeries, leading_degree: u32) -> WeightedIntegral {
    let values = quadrature(series, |t| t * (-t).exp());
    let t_end = series.horizon;
    let flux_end = series
        .values
        .last()
        .map(|row| row.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .unwrap_or(0.0);
    let c = flux_end / t_end.powi(leading_degree as i32);
    let m1 = leading_degree as f64 + 1.0;
    // int_T^inf t^{M+1} e^{-t} dt ~ T^{M+1} e^{-T} (1 + (M+1)/T + ...)
    let series_factor = 1.0
        + m1 / t_end
        + m1 * (m1 - 1.0) / (t_end * t_end)
        + m1 * (m1 - 1.0) * (m1 - 2.0) / t_end.powi(3);
    WeightedIntegral {
        values,
        tail_bound: c * t_end.powf(m1) * (-t_end).exp() * series_factor,
    }
}

/// Trapezoidal `int e^{-pt} flux(t) dt` per tracked vertex: the numerical
/// Laplace transform of the flux series.
pub fn laplace_transform_at(series: &FluxSeries, p: f64) -> Vec<f64> {
    quadrature(series, |t| (-p * t).exp())
}

fn quadrature(series: &FluxSeries, kernel: impl Fn(f64) -> f64) -> Vec<f64> {
    let k = series.tracked.len();
    let mut acc = vec![0.0; k];
    let last = series.values.len() - 1;
    for (n, row) in series.values.iter().enumerate() {
        let t = series.time(n);
        let w = if n == 0 || n == last {
            0.5 * series.tau
        } else {
            series.tau
        };
        let kt = kernel(t);
        for (a, v) in acc.iter_mut().zip(row) {
            *a += w * kt * v;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{flux_curve, weighted_data};
    use crate::geometry::{boundary_point_index, disk_mesh, OrderField};
    use std::sync::Arc;

    fn bessel_cfg(rings: usize, alpha: f64) -> CoefficientSet {
        let mesh = Arc::new(disk_mesh(rings));
        let order = OrderField::constant(&mesh, alpha).unwrap();
        CoefficientSet::homogeneous(mesh, order).unwrap()
    }

    #[test]
    fn weights_start_at_the_gamma_normalizer_and_decrease() {
        for alpha in [0.1, 0.5, 0.9] {
            let w = l1_weights(alpha, 1e-2, 50).weights;
            assert!((w[0] - 1.0 / gamma(2.0 - alpha)).abs() < 1e-14);
            for pair in w.windows(2) {
                assert!(pair[0] > pair[1] && pair[1] > 0.0, "alpha {alpha}");
            }
        }
    }

    #[test]
    fn weighted_integral_of_constant_flux_is_one() {
        // int_0^inf t e^{-t} dt = 1
        let tau = 1e-2;
        let n = (40.0 / tau) as usize;
        let series = FluxSeries {
            tau,
            horizon: 40.0,
            tracked: vec![0],
            values: (0..=n).map(|_| vec![1.0]).collect(),
        };
        let wi = weighted_time_integral(&series, 2);
        assert!((wi.values[0] - 1.0).abs() < 1e-3, "got {}", wi.values[0]);
    }

    #[test]
    fn flux_series_is_linear_in_the_excitation() {
        let cfg = bessel_cfg(4, 0.5);
        let (x0, _) = boundary_point_index(&cfg.mesh, [1.0, 0.0]);
        let e1 = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        let e2 = Excitation::monomial(&cfg.mesh, 2, 2.0).unwrap();
        let s1 = l1_step_solve(&cfg, &e1, 0.05, 10.0, Some(&[x0])).unwrap();
        let s2 = l1_step_solve(&cfg, &e2, 0.05, 10.0, Some(&[x0])).unwrap();
        for (r1, r2) in s1.values.iter().zip(&s2.values) {
            assert!((2.0 * r1[0] - r2[0]).abs() <= 1e-10 * r2[0].abs().max(1e-12));
        }
    }

    #[test]
    fn blocked_history_matches_naive_evaluation() {
        // 300 steps crosses one block boundary, exercising scatter + near field
        let cfg = bessel_cfg(3, 0.45);
        let exc = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        let (x0, _) = boundary_point_index(&cfg.mesh, [1.0, 0.0]);
        let tau = 10.0 / 300.0;
        let fast = l1_step_solve(&cfg, &exc, tau, 10.0, Some(&[x0])).unwrap();
        let slow = naive_l1(&cfg, &exc, tau, 300, x0);
        let scale = slow.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for (f, s) in fast.values.iter().map(|r| r[0]).zip(&slow) {
            assert!((f - s).abs() <= 1e-9 * scale, "{f} vs {s}");
        }
    }

    /// direct O(n^2) history evaluation, kept deliberately simple
    fn naive_l1(
        cfg: &CoefficientSet,
        exc: &Excitation,
        tau: f64,
        n_steps: usize,
        x0: usize,
    ) -> Vec<f64> {
        let nv = cfg.mesh.vertex_count();
        let alpha = cfg.alpha_tri()[0];
        let w = l1_weights(alpha, tau, n_steps).weights;
        let tau_pow = tau.powf(-alpha);
        let scale: Vec<f64> = vec![tau_pow * w[0]; cfg.mesh.triangle_count()];
        let system = assemble_with(
            &cfg.mesh,
            &cfg.sigma,
            Reaction {
                base: Some(&cfg.q),
                weighted: Some((&cfg.rho, &scale)),
            },
        )
        .unwrap();
        let mut mass = vec![0.0; nv];
        for (t, tri) in cfg.mesh.triangles().iter().enumerate() {
            let third = cfg.mesh.areas()[t] / 3.0;
            for &v in tri {
                mass[v] += third * cfg.rho.at_triangle_vertex(t, v);
            }
        }
        let slot = cfg.mesh.boundary_slot(x0).unwrap();
        let mut history: Vec<Vec<f64>> = vec![vec![0.0; nv]]; // U^0
        let mut out = vec![0.0];
        for n in 1..=n_steps {
            let mut rhs = vec![0.0; nv];
            for v in 0..nv {
                let mut acc = w[0] * history[n - 1][v];
                for j in 1..n {
                    acc -= w[n - j] * (history[j][v] - history[j - 1][v]);
                }
                rhs[v] = mass[v] * tau_pow * acc;
            }
            let load = crate::elliptic::Load::from_values(rhs);
            let bdata = exc.at_time(&cfg.mesh, n as f64 * tau);
            let u = system.solve_dirichlet(&load, &bdata).unwrap();
            let flux = system.variational_flux(&u, &load).unwrap();
            out.push(crate::forward::bare_flux_values(cfg, &flux)[slot]);
            // nonnegative increasing data keeps the solution nonnegative on
            // the non-obtuse mesh (discrete comparison surrogate)
            let max = u.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for &uv in u.values() {
                assert!(uv >= -1e-10 * max.max(1e-300), "U went negative: {uv}");
            }
            history.push(u.values().to_vec());
        }
        out
    }

    #[test]
    fn laplace_transform_of_the_series_matches_the_frequency_solver() {
        // same mesh on both sides, so only the time discretization differs
        let cfg = bessel_cfg(6, 0.5);
        let exc = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        let (x0, _) = boundary_point_index(&cfg.mesh, [1.0, 0.0]);
        let series = l1_step_solve(&cfg, &exc, 2e-3, 20.0, Some(&[x0])).unwrap();
        let transform = laplace_transform_at(&series, 1.0)[0];
        let curve = flux_curve(&cfg, &exc, x0, &[1.0]).unwrap();
        let reference = curve.samples()[0].1; // sigma = 1: bare flux
        assert!(
            (transform - reference).abs() < 0.02 * reference.abs(),
            "transform {transform} vs frequency-domain {reference}"
        );
    }

    #[test]
    fn weighted_integral_matches_the_sensitivity_solver() {
        let cfg = bessel_cfg(6, 0.5);
        let exc = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        let series = l1_step_solve(&cfg, &exc, 2e-3, 20.0, None).unwrap();
        let wi = weighted_time_integral(&series, exc.leading_degree());
        let reference = weighted_data(&cfg, &exc).unwrap();
        for (a, b) in wi.values.iter().zip(reference.values()) {
            assert!(
                (a - b).abs() < 0.03 * b.abs(),
                "time-domain {a} vs sensitivity {b}"
            );
        }
    }

    #[test]
    fn halving_tau_shrinks_the_transform_error_geometrically() {
        // self-convergence of the p = 1 transform against a fine reference;
        // measured ratios sit near 2^{2-alpha} ~ 2.8 for alpha = 0.5
        let cfg = bessel_cfg(5, 0.5);
        let exc = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        let x0 = cfg.mesh.boundary_vertices()[0];
        let transform = |tau: f64| {
            let s = l1_step_solve(&cfg, &exc, tau, 20.0, Some(&[x0])).unwrap();
            laplace_transform_at(&s, 1.0)[0]
        };
        let reference = transform(5e-4);
        let e1 = (transform(8e-3) - reference).abs();
        let e2 = (transform(4e-3) - reference).abs();
        let ratio = e1 / e2;
        assert!((2.0..4.2).contains(&ratio), "tau-halving ratio {ratio:.2}");
    }

    #[test]
    fn flux_turns_positive_for_monotone_data() {
        let cfg = bessel_cfg(5, 0.5);
        let exc = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        let series = l1_step_solve(&cfg, &exc, 0.02, 10.0, None).unwrap();
        let last = series.values.last().unwrap();
        assert!(last.iter().all(|&f| f > 0.0));
    }

    #[test]
    fn horizon_must_cover_the_weight() {
        let cfg = bessel_cfg(3, 0.5);
        let exc = Excitation::monomial(&cfg.mesh, 2, 1.0).unwrap();
        assert!(l1_step_solve(&cfg, &exc, 0.01, 5.0, None).is_err());
    }
}
