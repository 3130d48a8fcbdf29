//! Small sparse linear-algebra kernels: CSR storage, a band LU without
//! pivoting, and Jacobi-preconditioned conjugate gradients.
//!
//! The band factorization is only ever applied to nonsingular M-matrices, for
//! which Gaussian elimination without pivoting is stable and both triangular
//! factors keep nonpositive off-diagonals. The triangular solves are then
//! monotone in the right-hand side, including under IEEE rounding.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles an `n × n` matrix from `(row, col, value)` triplets.
    /// Duplicate entries are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i},{j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            col_idx.push(j);
            values.push(v);
            row_ptr[i + 1] += 1;
            last = Some((i, j));
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

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// Lower and upper bandwidth.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    /// Largest `|A_ij - A_ji|` over all stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Row-scaled copy `diag(s) * A`.
    pub fn scale_rows(&self, s: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                out.values[k] *= s[i];
            }
        }
        out
    }
}

/// LU factors of a banded matrix, computed without pivoting.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    // Row-major band storage; row i holds columns i-kl ..= i+ku.
    data: Vec<f64>,
}

impl BandedLu {
    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width() + (j + self.kl - i)
    }

    /// Factors the matrix given as triplets with the stated bandwidths.
    pub fn factor(n: usize, kl: usize, ku: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut lu = Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        };
        for &(i, j, v) in triplets {
            if j + kl < i || j > i + ku {
                return Err(Error::Internal(format!(
                    "entry ({i},{j}) outside band ({kl},{ku})"
                )));
            }
            let k = lu.idx(i, j);
            lu.data[k] += v;
        }
        for k in 0..n {
            let pivot = lu.data[lu.idx(k, k)];
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::Internal(format!(
                    "non-positive pivot {pivot:e} at row {k}: operator is not an M-matrix"
                )));
            }
            let i_end = (k + kl).min(n - 1);
            let j_end = (k + ku).min(n - 1);
            for i in k + 1..=i_end {
                let ik = lu.idx(i, k);
                let l = lu.data[ik] / pivot;
                lu.data[ik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=j_end {
                    let kj = lu.idx(k, j);
                    let ij = lu.idx(i, j);
                    lu.data[ij] -= l * lu.data[kj];
                }
            }
        }
        Ok(lu)
    }

    pub fn from_csr(a: &CsrMatrix) -> Result<Self> {
        let (kl, ku) = a.bandwidth();
        let triplets: Vec<_> = (0..a.dim())
            .flat_map(|i| a.row(i).map(move |(j, v)| (i, j, v)))
            .collect();
        Self::factor(a.dim(), kl, ku, &triplets)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        for i in 0..n {
            let j0 = i.saturating_sub(self.kl);
            let mut acc = x[i];
            for j in j0..i {
                acc -= self.data[self.idx(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let j_end = (i + self.ku).min(n - 1);
            let mut acc = x[i];
            for j in i + 1..=j_end {
                acc -= self.data[self.idx(i, j)] * x[j];
            }
            x[i] = acc / self.data[self.idx(i, i)];
        }
    }
}

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Jacobi-preconditioned CG for a symmetric positive definite `a`.
/// Stops when `‖b - a x‖₂ ≤ rel_tol · ‖b‖₂`.
pub fn pcg(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<CgSolution> {
    let n = a.dim();
    let b_norm = norm2(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgSolution {
            x,
            iterations: 0,
            residual_norm: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Internal(format!(
                "CG breakdown: p·Ap = {pap:e} (matrix not SPD)"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = norm2(&r);
        if res <= rel_tol * b_norm {
            return Ok(CgSolution {
                x,
                iterations: it,
                residual_norm: res,
            });
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
    Err(Error::Convergence {
        what: "conjugate gradient",
        iterations: max_iter,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
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
    fn triplets_sum_duplicates() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, -1.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), -1.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn banded_lu_solves_tridiagonal() {
        let a = laplacian_1d(50);
        let lu = BandedLu::from_csr(&a).unwrap();
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = lu.solve(&b);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn banded_lu_rejects_indefinite() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, -1.0), (1, 1, 1.0)]);
        assert!(BandedLu::from_csr(&a).is_err());
    }

    #[test]
    fn pcg_matches_direct() {
        let a = laplacian_1d(40);
        let b: Vec<f64> = (0..40).map(|i| 1.0 + i as f64).collect();
        let direct = BandedLu::from_csr(&a).unwrap().solve(&b);
        let cg = pcg(&a, &b, 1e-13, 500).unwrap();
        for (x, y) in direct.iter().zip(&cg.x) {
            assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
        }
        assert!(cg.iterations <= 40);
    }

    #[test]
    fn pcg_zero_rhs() {
        let a = laplacian_1d(5);
        let s = pcg(&a, &[0.0; 5], 1e-12, 10).unwrap();
        assert_eq!(s.iterations, 0);
        assert!(s.x.iter().all(|&v| v == 0.0));
    }
}
