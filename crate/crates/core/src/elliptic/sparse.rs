//! Compressed sparse rows and a Jacobi-preconditioned conjugate gradient.

use crate::error::{Error, Result};

/// Symmetric sparse matrix in CSR form (full storage, both triangles).
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from unordered (row, col, value) triplets, summing duplicates.
    /// The triplets are sorted, so identical input produces identical storage.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < n && c < n);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, out) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            *out = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for (i, di) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            if let Some(k) = cols.iter().position(|&c| c == i) {
                *di = vals[k];
            }
        }
        d
    }

    /// Exact structural and numerical symmetry check.
    pub fn is_symmetric(&self) -> bool {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let (cj, vj) = self.row(j);
                match cj.iter().position(|&c| c == i) {
                    Some(k) if vj[k] == v => {}
                    _ => return false,
                }
            }
        }
        true
    }

    /// Restriction to an index subset: `A[keep, keep]`.
    /// `position[g]` must give the new index of global `g`, or None.
    pub fn restrict(&self, keep: &[usize], position: &[Option<usize>]) -> CsrMatrix {
        let mut triplets = Vec::new();
        for (new_r, &g) in keep.iter().enumerate() {
            let (cols, vals) = self.row(g);
            for (&c, &v) in cols.iter().zip(vals) {
                if let Some(new_c) = position[c] {
                    triplets.push((new_r, new_c, v));
                }
            }
        }
        CsrMatrix::from_triplets(keep.len(), triplets)
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradient for SPD systems.
///
/// Stops when `||b - Ax|| <= rel_tol * ||b||`; errors if the iteration cap is
/// reached first.
pub fn cg_jacobi(
    a: &CsrMatrix,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, CgStats)> {
    let n = a.n();
    let norm_b = norm(b);
    if norm_b == 0.0 {
        return Ok((
            vec![0.0; n],
            CgStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 1..=max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                row: it,
                pivot: pap,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = norm(&r);
        if res <= rel_tol * norm_b {
            return Ok((
                x,
                CgStats {
                    iterations: it,
                    relative_residual: res / norm_b,
                },
            ));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDiverged {
        iterations: max_iter,
        residual: norm(&r) / norm_b,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn triplets_merge_duplicates_deterministically() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0)]);
        let b = CsrMatrix::from_triplets(2, vec![(1, 1, 2.0), (0, 0, 3.0), (0, 0, 1.0)]);
        assert_eq!(a, b);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.diagonal(), vec![4.0, 2.0]);
    }

    #[test]
    fn cg_solves_laplacian() {
        let n = 200;
        let a = laplacian_1d(n);
        assert!(a.is_symmetric());
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let mut b = vec![0.0; n];
        a.matvec(&x_true, &mut b);
        let (x, stats) = cg_jacobi(&a, &b, 1e-12, 10 * n).unwrap();
        let err: f64 = x
            .iter()
            .zip(&x_true)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(
            err < 1e-8,
            "err {err} after {} iterations",
            stats.iterations
        );
    }

    #[test]
    fn cg_zero_rhs() {
        let a = laplacian_1d(10);
        let (x, stats) = cg_jacobi(&a, &[0.0; 10], 1e-12, 100).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn cg_reports_divergence() {
        let a = laplacian_1d(50);
        let b = vec![1.0; 50];
        match cg_jacobi(&a, &b, 1e-14, 3) {
            Err(Error::SolverDiverged { iterations, .. }) => assert_eq!(iterations, 3),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn restriction_keeps_submatrix() {
        let a = laplacian_1d(5);
        let keep = vec![1, 2, 3];
        let mut position = vec![None; 5];
        for (k, &g) in keep.iter().enumerate() {
            position[g] = Some(k);
        }
        let r = a.restrict(&keep, &position);
        assert_eq!(r.n(), 3);
        assert_eq!(r.diagonal(), vec![2.0, 2.0, 2.0]);
        assert!(r.is_symmetric());
        assert_eq!(r.nnz(), 7);
    }
}
