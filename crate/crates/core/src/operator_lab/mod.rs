//! Finite element discretization of the Dirichlet form at d = 1 and d = 3,
//! with spectrum, resolvent and level-monotonicity experiments.

pub mod fem1d;
pub mod fem3d;
pub mod mosco;
pub mod quadrature;
pub mod resolvent;
pub mod sparse;
pub mod spectrum;

use serde::Serialize;

pub use fem1d::assemble_1d;
pub use fem3d::assemble_3d;
pub use mosco::{mosco_monotonicity, mosco_refinement, MoscoReport, MoscoTrend, TestFunction};
pub use resolvent::{resolvent_apply, resolvent_checks, Resolvent, ResolventReport, ResolventSolve};
pub use sparse::CsrMatrix;
pub use spectrum::{spectrum, SpectrumReport, SpectrumRow};

/// Mesh description attached to assembled matrices.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mesh {
    /// Uniform grid of `(0, 1)`; nodes `k/cells`.
    Interval { cells: usize },
    /// Kuhn triangulation of the corner simplex with spacing `1/m`.
    Simplex { m: usize, elements: usize },
}

/// Stiffness and mass matrices of the discretized form.
#[derive(Debug, Clone)]
pub struct FormMatrices {
    pub d: usize,
    pub theta: f64,
    pub mesh: Mesh,
    /// Free coordinates of each node (`x_1..x_d`).
    pub nodes: Vec<Vec<f64>>,
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    /// `1 − Σ mass`, the probability lost to quadrature.
    pub mass_defect: f64,
}

impl FormMatrices {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Max `|K·1|`.
    pub fn constant_defect(&self) -> f64 {
        self.stiffness.matvec(&vec![1.0; self.len()]).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|x| f(x)).collect()
    }

    /// `(u, v)` in the discrete L²(ρ) inner product.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass.bilinear(u, v)
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    /// Discrete form `E(u, v)`.
    pub fn energy(&self, u: &[f64], v: &[f64]) -> f64 {
        self.stiffness.bilinear(u, v)
    }
}

/// Symmetry defects of assembled matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalanceReport {
    /// Max `|K − Kᵀ|`; K is also the ρ-weighted symmetrization of `M⁻¹K`.
    pub stiffness: f64,
    pub mass: f64,
    pub pass: bool,
}

pub const BALANCE_TOL: f64 = 1e-12;

pub fn detailed_balance_check(fm: &FormMatrices) -> BalanceReport {
    let stiffness = fm.stiffness.asymmetry();
    let mass = fm.mass.asymmetry();
    BalanceReport { stiffness, mass, pass: stiffness < BALANCE_TOL && mass < BALANCE_TOL }
}

/// Global node indices with local stiffness and mass matrices.
pub(crate) type Element<const K: usize> = ([usize; K], [[f64; K]; K], [[f64; K]; K]);

/// Accumulates per-element local matrices into symmetric CSR pairs.
/// Only `a ≤ b` entries are computed and mirrored, so symmetry is exact.
pub(crate) fn scatter<const K: usize>(
    n: usize,
    elements: &[Element<K>],
) -> (CsrMatrix, CsrMatrix) {
    let mut ks = Vec::with_capacity(elements.len() * K * K);
    let mut ms = Vec::with_capacity(elements.len() * K * K);
    for (idx, kl, ml) in elements {
        for a in 0..K {
            for b in a..K {
                let (i, j) = (idx[a], idx[b]);
                ks.push((i, j, kl[a][b]));
                ms.push((i, j, ml[a][b]));
                if a != b {
                    ks.push((j, i, kl[a][b]));
                    ms.push((j, i, ml[a][b]));
                }
            }
        }
    }
    (CsrMatrix::from_triplets(n, ks), CsrMatrix::from_triplets(n, ms))
}
