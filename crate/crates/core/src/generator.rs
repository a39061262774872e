//! The finite-dimensional generator `L^(d)` on the interior of `Δ_d`:
//!
//! ```text
//! L f = ½ Σ_i x_i ∂²_i f − ½ Σ_{ij} x_i x_j ∂_i∂_j f + Σ_i b_i ∂_i f
//! b_i = ½ [ −½ − θ x_i + (θ + (d+1)/2) w_i ],   w_i = (p_i²/x_i) / Σ_j p_j²/x_j
//! ```
//!
//! and its carré du champ `½ ∇fᵀ a ∇g` with `a_ij = x_i (δ_ij − x_j)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cylinder::CylinderFunction;
use crate::domain::{BaseWeights, Params, SimplexPoint};
use crate::error::{LabError, Result};
use crate::sampler::{ResidualAssignment, Truncation, sample_dp_projected};
use crate::stats::{MCEstimate, Moments};
use crate::stream::chunked;

/// Drift at an interior point: `b` holds the `d` explicit components and
/// `last` the same formula applied to `x_{d+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftVector {
    pub b: Vec<f64>,
    pub last: f64,
}

impl DriftVector {
    pub fn extended_sum(&self) -> f64 {
        self.b.iter().sum::<f64>() + self.last
    }
}

/// Normalized weights `w_j = (p_j²/x_j) / Σ_k p_k²/x_k` over all `d + 1`
/// coordinates. Requires an interior point.
pub fn stable_weights(x: &SimplexPoint, base: &BaseWeights) -> Vec<f64> {
    let mut w: Vec<f64> = x.full().zip(base.masses()).map(|(xi, p)| p * p / xi).collect();
    let s: f64 = w.iter().sum();
    for v in &mut w {
        *v /= s;
    }
    w
}

fn check_interior(x: &SimplexPoint, base: &BaseWeights) -> Result<()> {
    if x.dim() != base.dim() {
        return Err(LabError::DimensionMismatch { expected: base.dim(), got: x.dim() });
    }
    if !x.is_interior() {
        return Err(LabError::BoundaryPoint);
    }
    Ok(())
}

pub fn drift(x: &SimplexPoint, base: &BaseWeights, params: &Params) -> Result<DriftVector> {
    check_interior(x, base)?;
    let theta = params.theta();
    let scale = theta + 0.5 * (x.dim() as f64 + 1.0);
    let mut b: Vec<f64> = stable_weights(x, base)
        .into_iter()
        .zip(x.full())
        .map(|(w, xi)| 0.5 * (-0.5 - theta * xi + scale * w))
        .collect();
    let last = b.pop().unwrap_or_default();
    Ok(DriftVector { b, last })
}

/// `a_ij = x_i (δ_ij − x_j)`, a symmetric positive semidefinite `d × d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix {
    pub a: DMatrix<f64>,
}

impl DiffusionMatrix {
    pub fn min_eigenvalue(&self) -> f64 {
        self.a.clone().symmetric_eigenvalues().min()
    }
}

pub fn diffusion_matrix(x: &SimplexPoint) -> DiffusionMatrix {
    let c = x.coords();
    let d = c.len();
    DiffusionMatrix {
        a: DMatrix::from_fn(d, d, |i, j| c[i] * (if i == j { 1.0 } else { 0.0 } - c[j])),
    }
}

fn check_arity(f: &dyn CylinderFunction, d: usize) -> Result<()> {
    if f.arity() > d {
        return Err(LabError::DimensionMismatch { expected: d, got: f.arity() });
    }
    Ok(())
}

pub fn apply_generator(f: &dyn CylinderFunction, x: &SimplexPoint, base: &BaseWeights, params: &Params) -> Result<f64> {
    check_arity(f, x.dim())?;
    let b = drift(x, base, params)?;
    let p = f.arity();
    let c = x.coords();
    let mut grad = vec![0.0; p];
    let mut hess = vec![0.0; p * p];
    f.gradient(c, &mut grad);
    f.hessian(c, &mut hess);
    let mut second = 0.0;
    for i in 0..p {
        second += c[i] * hess[i * p + i];
        for j in 0..p {
            second -= c[i] * c[j] * hess[i * p + j];
        }
    }
    let first: f64 = b.b.iter().zip(&grad).map(|(bi, gi)| bi * gi).sum();
    Ok(0.5 * second + first)
}

/// `½ ∇f(x)ᵀ a(x) ∇g(x)`.
pub fn carre_du_champ(f: &dyn CylinderFunction, g: &dyn CylinderFunction, x: &SimplexPoint) -> Result<f64> {
    check_arity(f, x.dim())?;
    check_arity(g, x.dim())?;
    let c = x.coords();
    let p = f.arity().max(g.arity());
    let mut gf = vec![0.0; p];
    let mut gg = vec![0.0; p];
    f.gradient(c, &mut gf);
    g.gradient(c, &mut gg);
    let (mut diag, mut sf, mut sg) = (0.0, 0.0, 0.0);
    for i in 0..p {
        diag += c[i] * gf[i] * gg[i];
        sf += c[i] * gf[i];
        sg += c[i] * gg[i];
    }
    Ok(0.5 * (diag - sf * sg))
}

/// Which mass sits in the last slot of the denominator of `R_d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailVariant {
    /// `ν0(>d)² / μ(>d)`: the aggregated tail cell.
    Aggregate,
    /// `ν0(d+1)² / μ(>d)`: the single next category over the tail mass.
    NextCategory,
}

/// `R_d = (d+1) (ν0(i)²/μ(i)) / (Σ_{j≤d} ν0(j)²/μ(j) + c²/μ(>d))` for the
/// geometric base with ratio `q`. `mu` holds the masses of categories
/// `1..=m` followed by the tail `μ(>m)`, with `m >= d`; `i` is 1-based.
pub fn ratio_rd(mu: &[f64], q: f64, i: usize, d: usize, variant: TailVariant) -> f64 {
    let nu = |j: usize| (1.0 - q) * q.powi(j as i32 - 1);
    let head: f64 = (1..=d).map(|j| nu(j) * nu(j) / mu[j - 1]).sum();
    let tail_mass: f64 = mu[d..].iter().sum();
    let c = match variant {
        TailVariant::Aggregate => q.powi(d as i32),
        TailVariant::NextCategory => nu(d + 1),
    };
    let num = nu(i) * nu(i) / mu[i - 1];
    (d as f64 + 1.0) * num / (head + c * c / tail_mass)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiRow {
    pub d: usize,
    /// `E[R_d²]` with the aggregated tail.
    pub aggregate: MCEstimate,
    /// `E[R_d²]` with the next-category denominator.
    pub next_category: MCEstimate,
    /// `‖R_d − R_{d'}‖_{L²}` against the previous `d'` in the list.
    pub aggregate_step: Option<MCEstimate>,
    pub next_category_step: Option<MCEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiReport {
    pub i: usize,
    pub q: f64,
    pub theta: f64,
    pub n: usize,
    pub seed: u64,
    pub rows: Vec<BiRow>,
}

pub const BI_TAG: u32 = 0xb100;

/// Monte Carlo diagnostics for the `L²` limit of `R_d` as `d` grows. All
/// `d` share the same draws, taken on the finest partition.
pub fn estimate_bi(
    i: usize,
    q: f64,
    params: &Params,
    d_list: &[usize],
    n: usize,
    trunc: Truncation,
    seed: u64,
) -> Result<BiReport> {
    if d_list.is_empty() || d_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::InvalidArgument("d_list must be nonempty and strictly increasing".into()));
    }
    if i == 0 || i > d_list[0] {
        return Err(LabError::InvalidArgument(format!("category {i} must lie in 1..={}", d_list[0])));
    }
    if n < 2 {
        return Err(LabError::InvalidArgument("need at least two samples".into()));
    }
    let d_max = *d_list.last().unwrap_or(&1);
    let base = BaseWeights::geometric(q, d_max)?;
    let k = d_list.len();
    // Per chunk: second moments of R_d for both variants, then squared steps.
    let parts = chunked(n, seed, BI_TAG, |rng, len| -> Result<Vec<Moments>> {
        let mut acc = vec![Moments::default(); 4 * k];
        for _ in 0..len {
            let x = sample_dp_projected(params, &base, trunc, ResidualAssignment::Proportional, rng)?;
            let mu: Vec<f64> = x.full().collect();
            let mut prev: Option<(f64, f64)> = None;
            for (slot, &d) in d_list.iter().enumerate() {
                let a = ratio_rd(&mu, q, i, d, TailVariant::Aggregate);
                let b = ratio_rd(&mu, q, i, d, TailVariant::NextCategory);
                acc[slot].push(a * a);
                acc[k + slot].push(b * b);
                if let Some((pa, pb)) = prev {
                    acc[2 * k + slot].push((a - pa).powi(2));
                    acc[3 * k + slot].push((b - pb).powi(2));
                }
                prev = Some((a, b));
            }
        }
        Ok(acc)
    });
    let mut total = vec![Moments::default(); 4 * k];
    for part in parts {
        for (t, p) in total.iter_mut().zip(part?.iter()) {
            t.merge(p);
        }
    }
    let l2 = |m: &Moments| {
        let e = m.estimate(seed);
        let root = e.mean.sqrt();
        let stderr = if root > 0.0 { e.stderr / (2.0 * root) } else { 0.0 };
        MCEstimate { mean: root, stderr, ..e }
    };
    let rows = d_list
        .iter()
        .enumerate()
        .map(|(slot, &d)| BiRow {
            d,
            aggregate: total[slot].estimate(seed),
            next_category: total[k + slot].estimate(seed),
            aggregate_step: (slot > 0).then(|| l2(&total[2 * k + slot])),
            next_category_step: (slot > 0).then(|| l2(&total[3 * k + slot])),
        })
        .collect();
    Ok(BiReport { i, q, theta: params.theta(), n, seed, rows })
}
