//! Generalized eigenvalues of the d = 1 pencil `K u = λ M u` by Sturm bisection.

use serde::Serialize;
use std::io::Write;

use super::{assemble_1d, FormMatrices};
use crate::domain::Params;
use crate::error::{LabError, Result};

pub const SPECTRUM_REL_TOL: f64 = 0.01;
pub const ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub i: usize,
    pub computed: f64,
    pub target: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub theta: f64,
    pub cells: usize,
    pub zero_eigenvalue: f64,
    /// Max relative deviation of the bottom eigenvector from a constant.
    pub constant_defect: f64,
    pub rows: Vec<SpectrumRow>,
    pub tolerance: f64,
    pub pass: bool,
}

impl SpectrumReport {
    /// Table with header `i,computed,target,rel_error`; row `0` is the constant mode.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,computed,target,rel_error")?;
        writeln!(w, "0,{:e},0,{:e}", self.zero_eigenvalue, self.zero_eigenvalue.abs())?;
        for r in &self.rows {
            writeln!(w, "{},{:.12},{},{:e}", r.i, r.computed, r.target, r.rel_error)?;
        }
        Ok(())
    }
}

/// `i(i + 2θ)/2`.
pub fn eigen_target(i: usize, theta: f64) -> f64 {
    let i = i as f64;
    0.5 * i * (i + 2.0 * theta)
}

/// Symmetric tridiagonal pencil extracted from 1-D form matrices.
#[derive(Debug, Clone)]
pub struct TridiagonalPencil {
    kd: Vec<f64>,
    ko: Vec<f64>,
    md: Vec<f64>,
    mo: Vec<f64>,
}

impl TridiagonalPencil {
    pub fn from_form(fm: &FormMatrices) -> Result<Self> {
        if fm.stiffness.bandwidth() > 1 || fm.mass.bandwidth() > 1 {
            return Err(LabError::InvalidArgument("pencil is not tridiagonal".into()));
        }
        let n = fm.len();
        let diag = |a: &super::CsrMatrix| (0..n).map(|i| a.get(i, i)).collect::<Vec<_>>();
        let off = |a: &super::CsrMatrix| (0..n - 1).map(|i| a.get(i, i + 1)).collect::<Vec<_>>();
        Ok(Self { kd: diag(&fm.stiffness), ko: off(&fm.stiffness), md: diag(&fm.mass), mo: off(&fm.mass) })
    }

    pub fn len(&self) -> usize {
        self.kd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kd.is_empty()
    }

    /// Number of eigenvalues below `sigma` (negative LDLᵀ pivots of `K − σM`).
    pub fn count_below(&self, sigma: f64) -> usize {
        let mut count = 0;
        let mut prev = 0.0;
        for i in 0..self.len() {
            let a = self.kd[i] - sigma * self.md[i];
            let mut d = if i == 0 {
                a
            } else {
                let b = self.ko[i - 1] - sigma * self.mo[i - 1];
                a - b * b / prev
            };
            if d == 0.0 {
                d = -f64::EPSILON * a.abs().max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
            prev = d;
        }
        count
    }

    /// The `j`-th smallest eigenvalue (0-based).
    pub fn eigenvalue(&self, j: usize) -> f64 {
        let mut lo = -1.0;
        while self.count_below(lo) > j {
            lo *= 2.0;
        }
        let mut hi = 1.0;
        while self.count_below(hi) <= j {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(K − σM) x = rhs` without pivoting.
    fn solve_shifted(&self, sigma: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut d = rhs.to_vec();
        let mut piv = self.kd[0] - sigma * self.md[0];
        for i in 1..n {
            let b = self.ko[i - 1] - sigma * self.mo[i - 1];
            c[i - 1] = b / piv;
            d[i - 1] /= piv;
            piv = self.kd[i] - sigma * self.md[i] - b * c[i - 1];
            d[i] -= b * d[i - 1];
        }
        d[n - 1] /= piv;
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        d
    }

    fn mass_apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.md[i] * x[i];
                if i > 0 {
                    s += self.mo[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.mo[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Inverse iteration at shift `sigma`.
    pub fn eigenvector(&self, sigma: f64, iterations: usize) -> Vec<f64> {
        let n = self.len();
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..iterations {
            let rhs = self.mass_apply(&v);
            v = self.solve_shifted(sigma, &rhs);
            let norm = v.iter().zip(self.mass_apply(&v)).map(|(a, b)| a * b).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

/// Bottom `top + 1` eigenvalues of the d = 1 pencil against `i(i+2θ)/2`.
pub fn spectrum(params: &Params, cells: usize, top: usize) -> Result<SpectrumReport> {
    if top == 0 {
        return Err(LabError::InvalidArgument("top must be positive".into()));
    }
    let fm = assemble_1d(params, cells)?;
    let pencil = TridiagonalPencil::from_form(&fm)?;
    if top >= pencil.len() {
        return Err(LabError::InvalidArgument(format!("top must be below {}", pencil.len())));
    }
    let zero = pencil.eigenvalue(0);
    let theta = params.theta();
    let rows: Vec<SpectrumRow> = (1..=top)
        .map(|i| {
            let computed = pencil.eigenvalue(i);
            let target = eigen_target(i, theta);
            SpectrumRow { i, computed, target, rel_error: (computed - target).abs() / target }
        })
        .collect();
    let gap = rows[0].computed - zero;
    let v = pencil.eigenvector(zero - 0.01 * gap, 4);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let constant_defect = v.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max) / mean.abs();
    let pass = zero.abs() < ZERO_TOL
        && constant_defect < 1e-6
        && rows.iter().all(|r| r.rel_error < SPECTRUM_REL_TOL);
    Ok(SpectrumReport { theta, cells, zero_eigenvalue: zero, constant_defect, rows, tolerance: SPECTRUM_REL_TOL, pass })
}
