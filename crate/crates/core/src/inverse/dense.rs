//! Small dense numerics for the fitting routines: column-scaled least
//! squares via normal equations, symmetric eigenvalue ranges, and a
//! derivative-free simplex minimizer. Everything here works on problems with
//! at most a handful of unknowns.

/// In-place Cholesky solve of a dense SPD system in row-major storage.
/// Returns false if a pivot fails.
pub(crate) fn solve_spd(a: &mut [f64], n: usize, b: &mut [f64]) -> bool {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    // factor: a becomes L in the lower triangle
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= a[i * n + k] * a[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return false;
                }
                a[i * n + i] = sum.sqrt();
            } else {
                a[i * n + j] = sum / a[j * n + j];
            }
        }
    }
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= a[i * n + k] * b[k];
        }
        b[i] = sum / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut sum = b[i];
        for k in (i + 1)..n {
            sum -= a[k * n + i] * b[k];
        }
        b[i] = sum / a[i * n + i];
    }
    true
}

/// Eigenvalue range of a small symmetric matrix by cyclic Jacobi rotations.
pub(crate) fn symmetric_eigen_range(matrix: &[f64], n: usize) -> (f64, f64) {
    let mut a = matrix.to_vec();
    for _sweep in 0..50 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frobenius(&a, n)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        lo = lo.min(a[i * n + i]);
        hi = hi.max(a[i * n + i]);
    }
    (lo, hi)
}

fn frobenius(a: &[f64], n: usize) -> f64 {
    a.iter().take(n * n).map(|v| v * v).sum::<f64>().sqrt()
}

/// Linear least squares `min ||A x - b||` with column equilibration and a
/// ridge term `lambda ||x||^2`. Returns the solution and the condition
/// estimate of the (scaled, unridged) normal matrix.
pub(crate) fn ridge_least_squares(
    columns: &[Vec<f64>],
    b: &[f64],
    lambda: f64,
) -> Option<(Vec<f64>, f64)> {
    let m = columns.len();
    if m == 0 {
        return Some((Vec::new(), 1.0));
    }
    let scales: Vec<f64> = columns
        .iter()
        .map(|c| {
            let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();
    let mut normal = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            let dot: f64 = columns[i].iter().zip(&columns[j]).map(|(a, b)| a * b).sum();
            normal[i * m + j] = dot / (scales[i] * scales[j]);
        }
        rhs[i] = columns[i].iter().zip(b).map(|(a, b)| a * b).sum::<f64>() / scales[i];
    }
    let (lo, hi) = symmetric_eigen_range(&normal, m);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    // ridge in the scaled variables
    let ridge = lambda.max(0.0);
    for i in 0..m {
        normal[i * m + i] += ridge;
    }
    if !solve_spd(&mut normal, m, &mut rhs) {
        // fall back to a heavier ridge: minimum-norm-flavored solution
        let mut normal2 = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let dot: f64 = columns[i].iter().zip(&columns[j]).map(|(a, b)| a * b).sum();
                normal2[i * m + j] = dot / (scales[i] * scales[j]);
            }
            normal2[i * m + i] += 1e-12 * hi.max(1.0) + ridge;
            rhs[i] = columns[i].iter().zip(b).map(|(a, b)| a * b).sum::<f64>() / scales[i];
        }
        if !solve_spd(&mut normal2, m, &mut rhs) {
            return None;
        }
    }
    let x: Vec<f64> = rhs.iter().zip(&scales).map(|(v, s)| v / s).collect();
    Some((x, condition))
}

/// Nelder-Mead simplex minimization with a deterministic initial simplex.
pub(crate) fn nelder_mead(
    objective: impl Fn(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    max_iter: usize,
    ftol: f64,
) -> (Vec<f64>, f64) {
    let dim = start.len();
    if dim == 0 {
        return (Vec::new(), objective(start));
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start.to_vec(), objective(start)));
    for d in 0..dim {
        let mut v = start.to_vec();
        v[d] += step;
        let f = objective(&v);
        simplex.push((v, f));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        if (worst - best).abs() <= ftol * (best.abs() + ftol) {
            break;
        }
        // centroid of all but the worst
        let mut centroid = vec![0.0; dim];
        for (v, _) in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&simplex[dim].0)
            .map(|(c, w)| 2.0 * c - w)
            .collect();
        let f_reflect = objective(&reflect);
        if f_reflect < simplex[0].1 {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| 3.0 * c - 2.0 * w)
                .collect();
            let f_expand = objective(&expand);
            simplex[dim] = if f_expand < f_reflect {
                (expand, f_expand)
            } else {
                (reflect, f_reflect)
            };
        } else if f_reflect < simplex[dim - 1].1 {
            simplex[dim] = (reflect, f_reflect);
        } else {
            let contract: Vec<f64> = centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| 0.5 * (c + w))
                .collect();
            let f_contract = objective(&contract);
            if f_contract < simplex[dim].1 {
                simplex[dim] = (contract, f_contract);
            } else {
                // shrink toward the best vertex
                let best_v = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let v: Vec<f64> = best_v
                        .iter()
                        .zip(&entry.0)
                        .map(|(b, x)| 0.5 * (b + x))
                        .collect();
                    let f = objective(&v);
                    *entry = (v, f);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    simplex.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_solve_small() {
        let mut a = vec![4.0, 1.0, 1.0, 3.0];
        let mut b = vec![1.0, 2.0];
        assert!(solve_spd(&mut a, 2, &mut b));
        // exact: x = (1/11, 7/11)
        assert!((b[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((b[1] - 7.0 / 11.0).abs() < 1e-14);
        let mut bad = vec![1.0, 2.0, 2.0, 1.0];
        let mut rhs = vec![1.0, 1.0];
        assert!(!solve_spd(&mut bad, 2, &mut rhs));
    }

    #[test]
    fn eigen_range_of_known_matrix() {
        // eigenvalues 1 and 3
        let a = vec![2.0, 1.0, 1.0, 2.0];
        let (lo, hi) = symmetric_eigen_range(&a, 2);
        assert!((lo - 1.0).abs() < 1e-12);
        assert!((hi - 3.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_recovers_coefficients() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 / 10.0).collect();
        let c1: Vec<f64> = t.iter().map(|x| x.sin()).collect();
        let c2: Vec<f64> = t.iter().map(|x| x.cos()).collect();
        let b: Vec<f64> = t.iter().map(|x| 2.5 * x.sin() - 1.25 * x.cos()).collect();
        let (x, cond) = ridge_least_squares(&[c1, c2], &b, 0.0).unwrap();
        assert!((x[0] - 2.5).abs() < 1e-11);
        assert!((x[1] + 1.25).abs() < 1e-11);
        assert!(cond < 10.0);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let (x, f) = nelder_mead(rosen, &[-1.2, 1.0], 0.5, 4000, 1e-15);
        assert!(f < 1e-10, "f = {f} at {x:?}");
        assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] - 1.0).abs() < 1e-4);
    }
}
