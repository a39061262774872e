//! Level-1 versus level-2 resolvent energies for lifted cylinder functions.

use serde::Serialize;

use super::resolvent::Resolvent;
use super::{assemble_1d, assemble_3d, FormMatrices};
use crate::domain::Params;
use crate::error::{LabError, Result};

pub const MOSCO_TOL: f64 = 5e-3;
pub const INNER_CONSISTENCY_TOL: f64 = 0.01;

/// Functions of one variable on `[0, 1]` lifted to `x ↦ f(x_1 + x_2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    Constant,
    Linear,
    Square,
    Cubic,
    Cosine,
}

impl TestFunction {
    /// The four non-constant functions used for the monotonicity table.
    pub const CATALOG: [TestFunction; 4] = [Self::Linear, Self::Square, Self::Cubic, Self::Cosine];

    pub fn eval(self, u: f64) -> f64 {
        match self {
            Self::Constant => 1.0,
            Self::Linear => u,
            Self::Square => u * u,
            Self::Cubic => (u - 0.5).powi(3),
            Self::Cosine => (std::f64::consts::PI * u).cos(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::Linear => "linear",
            Self::Square => "square",
            Self::Cubic => "cubic",
            Self::Cosine => "cosine",
        }
    }
}

impl std::str::FromStr for TestFunction {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "constant" => Self::Constant,
            "linear" => Self::Linear,
            "square" => Self::Square,
            "cubic" => Self::Cubic,
            "cosine" => Self::Cosine,
            other => return Err(LabError::InvalidArgument(format!("unknown test function {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoscoReport {
    pub function: TestFunction,
    pub theta: f64,
    pub beta: f64,
    pub cells: usize,
    pub mesh: usize,
    pub a_1: f64,
    pub a_2: f64,
    pub gap: f64,
    /// `β·E_β(G²F − lift(G¹F))` computed directly on the level-2 grid.
    pub energy_gap: f64,
    pub norm_sq_1: f64,
    pub norm_sq_2: f64,
    /// `|(F,F)_1 − (F,F)_2| / (F,F)_1`; includes the P1 interpolation error of `F`.
    pub norm_rel_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Piecewise-linear interpolation of nodal values on the uniform grid.
fn interpolate_uniform(values: &[f64], s: f64) -> f64 {
    let n = values.len() - 1;
    let t = (s.clamp(0.0, 1.0) * n as f64).min(n as f64);
    let k = (t.floor() as usize).min(n - 1);
    let w = t - k as f64;
    (1.0 - w) * values[k] + w * values[k + 1]
}

/// Monotonicity check against pre-assembled level-1 and level-2 matrices.
pub fn mosco_with(fm1: &FormMatrices, fm3: &FormMatrices, beta: f64, f1: TestFunction) -> Result<MoscoReport> {
    if fm1.d != 1 || fm3.d != 3 {
        return Err(LabError::InvalidArgument("expected d = 1 and d = 3 matrices".into()));
    }
    let f_1 = fm1.interpolate(|x| f1.eval(x[0]));
    let u_1 = Resolvent::new(fm1, beta)?.apply(&f_1)?.output;
    let a_1 = beta * fm1.inner(&u_1, &f_1);
    let norm_sq_1 = fm1.inner(&f_1, &f_1);

    // Renormalize the level-2 measure so that quadrature loss does not bias inner products.
    let total = 1.0 - fm3.mass_defect;
    let f_3 = fm3.interpolate(|x| f1.eval(x[0] + x[1]));
    let u_3 = Resolvent::new(fm3, beta)?.apply(&f_3)?.output;
    let a_2 = beta * fm3.inner(&u_3, &f_3) / total;
    let norm_sq_2 = fm3.inner(&f_3, &f_3) / total;

    let lifted = fm3.interpolate(|x| interpolate_uniform(&u_1, x[0] + x[1]));
    let e: Vec<f64> = u_3.iter().zip(&lifted).map(|(a, b)| a - b).collect();
    let energy_gap = beta * (beta * fm3.inner(&e, &e) + fm3.energy(&e, &e)) / total;

    let gap = a_2 - a_1;
    let norm_rel_diff = (norm_sq_1 - norm_sq_2).abs() / norm_sq_1.abs().max(f64::MIN_POSITIVE);
    Ok(MoscoReport {
        function: f1,
        theta: fm1.theta,
        beta,
        cells: fm1.len() - 1,
        mesh: match fm3.mesh {
            super::Mesh::Simplex { m, .. } => m,
            super::Mesh::Interval { cells } => cells,
        },
        a_1,
        a_2,
        gap,
        energy_gap,
        norm_sq_1,
        norm_sq_2,
        norm_rel_diff,
        tolerance: MOSCO_TOL,
        pass: a_1 <= a_2 + MOSCO_TOL,
    })
}

/// Assembles both levels and compares `a_1 = β(G¹F, F)` with `a_2 = β(G²F, F)`.
pub fn mosco_monotonicity(params: &Params, beta: f64, f1: TestFunction, cells: usize, mesh: usize) -> Result<MoscoReport> {
    let fm1 = assemble_1d(params, cells)?;
    let fm3 = assemble_3d(params, mesh)?;
    mosco_with(&fm1, &fm3, beta, f1)
}

/// `a_2` over a sequence of meshes with a Richardson estimate from the last two.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoscoTrend {
    pub function: TestFunction,
    pub a_1: f64,
    pub meshes: Vec<usize>,
    pub a_2: Vec<f64>,
    /// Assumes an `h²` error law.
    pub extrapolated: Option<f64>,
}

pub fn richardson(h_coarse: f64, a_coarse: f64, h_fine: f64, a_fine: f64) -> f64 {
    let r = (h_coarse / h_fine).powi(2);
    a_fine + (a_fine - a_coarse) / (r - 1.0)
}

pub fn mosco_refinement(params: &Params, beta: f64, f1: TestFunction, cells: usize, meshes: &[usize]) -> Result<MoscoTrend> {
    let fm1 = assemble_1d(params, cells)?;
    let mut a_1 = f64::NAN;
    let mut a_2 = Vec::with_capacity(meshes.len());
    for &m in meshes {
        let fm3 = assemble_3d(params, m)?;
        let r = mosco_with(&fm1, &fm3, beta, f1)?;
        a_1 = r.a_1;
        a_2.push(r.a_2);
    }
    let extrapolated = (meshes.len() >= 2).then(|| {
        let k = meshes.len();
        richardson(1.0 / meshes[k - 2] as f64, a_2[k - 2], 1.0 / meshes[k - 1] as f64, a_2[k - 1])
    });
    Ok(MoscoTrend { function: f1, a_1, meshes: meshes.to_vec(), a_2, extrapolated })
}
