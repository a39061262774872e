//! Compressed sparse rows and a banded Cholesky solver.

use crate::error::{LabError, Result};

/// Square sparse matrix in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from triplets; duplicates are summed in insertion order.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet out of range");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Iterates `(col, value)` over row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matvec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `alpha·self + beta·other`.
    pub fn combine(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Self {
        assert_eq!(self.n, other.n);
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            t.extend(self.row(i).map(|(j, v)| (i, j, alpha * v)));
            t.extend(other.row(i).map(|(j, v)| (i, j, beta * v)));
        }
        Self::from_triplets(self.n, t)
    }

    /// Max entrywise `|A − Aᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Max `|i − j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// Adds `delta` to entry `(i, j)` if stored (test fixture for perturbations).
    pub fn perturb(&mut self, i: usize, j: usize, delta: f64) -> bool {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => {
                self.vals[r.start + k] += delta;
                true
            }
            Err(_) => false,
        }
    }
}

/// Cholesky factor of a symmetric positive definite banded matrix.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    // Row i holds L[i][i-bw..=i], left-padded.
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    l[i * w + (j + bw - i)] = v;
                }
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(bw));
                let mut s = l[i * w + (j + bw - i)];
                for k in klo..j {
                    s -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(LabError::SolverFailure { residual: f64::INFINITY });
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for k in lo..i {
                s -= self.l[i * w + (k + bw - i)] * y[k];
            }
            y[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = y[i];
            for k in (i + 1)..=hi {
                s -= self.l[k * w + (i + bw - k)] * y[k];
            }
            y[i] = s / self.l[i * w + bw];
        }
        y
    }
}

/// Relative residual tolerance for [`solve_spd`].
pub const SOLVE_TOL: f64 = 1e-10;
const REFINE_STEPS: usize = 4;

/// Solves with a prepared factor plus iterative refinement.
pub fn solve_refined(a: &CsrMatrix, chol: &BandedCholesky, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; b.len()], 0.0));
    }
    let mut x = chol.solve(b);
    let mut rel = f64::INFINITY;
    for _ in 0..=REFINE_STEPS {
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        rel = norm2(&r) / bnorm;
        if rel < SOLVE_TOL * 1e-2 {
            break;
        }
        let dx = chol.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
    }
    if !(rel < SOLVE_TOL) {
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        rel = norm2(&r) / bnorm;
        if !(rel < SOLVE_TOL) {
            return Err(LabError::SolverFailure { residual: rel });
        }
    }
    Ok((x, rel))
}

/// One-shot symmetric positive definite solve.
pub fn solve_spd(a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let chol = BandedCholesky::factor(a)?;
    solve_refined(a, &chol, b)
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian(n: usize, shift: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)]);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(1, 0), 2.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.asymmetry(), 2.0);
    }

    #[test]
    fn tridiagonal_solve() {
        let a = laplacian(50, 0.1);
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.matvec(&x);
        let (y, res) = solve_spd(&a, &b).unwrap();
        assert!(res < SOLVE_TOL);
        for (x, y) in x.iter().zip(&y) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_matrix_fails() {
        let a = laplacian(10, -3.0);
        assert!(matches!(solve_spd(&a, &[1.0; 10]), Err(LabError::SolverFailure { .. })));
    }

    #[test]
    fn perturbation_shows_as_asymmetry() {
        let mut a = laplacian(5, 0.0);
        assert_eq!(a.asymmetry(), 0.0);
        assert!(a.perturb(1, 2, 1e-9));
        assert!((a.asymmetry() - 1e-9).abs() < 1e-15);
        assert!(!a.perturb(0, 4, 1.0));
    }

    proptest! {
        #[test]
        fn banded_solve_matches_dense(seed in 0u64..500, n in 3usize..30, bw in 1usize..5) {
            // Diagonally dominant symmetric band matrix.
            let mut t = Vec::new();
            let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5 };
            for i in 0..n {
                t.push((i, i, 2.0 * bw as f64 + 1.0));
                for k in 1..=bw {
                    if i + k < n {
                        let v = next();
                        t.push((i, i + k, v));
                        t.push((i + k, i, v));
                    }
                }
            }
            let a = CsrMatrix::from_triplets(n, t);
            let b: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
            let (x, _) = solve_spd(&a, &b).unwrap();
            let dense = nalgebra::DMatrix::from_fn(n, n, |i, j| a.get(i, j));
            let xd = dense.lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
            for i in 0..n {
                prop_assert!((x[i] - xd[i]).abs() < 1e-10);
            }
        }
    }
}
