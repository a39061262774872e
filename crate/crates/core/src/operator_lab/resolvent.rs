//! Grid resolvents `G_β = (βM + K)⁻¹ M`.

use serde::Serialize;

use super::sparse::{solve_refined, BandedCholesky, CsrMatrix};
use super::FormMatrices;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventSolve {
    pub beta: f64,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    /// Relative residual of `(βM + K)u = MF`.
    pub residual: f64,
}

/// Factored `βM + K`, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct Resolvent<'a> {
    fm: &'a FormMatrices,
    beta: f64,
    system: CsrMatrix,
    chol: BandedCholesky,
}

impl<'a> Resolvent<'a> {
    pub fn new(fm: &'a FormMatrices, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(LabError::InvalidArgument(format!("beta must be positive, got {beta}")));
        }
        let system = fm.mass.combine(beta, &fm.stiffness, 1.0);
        let chol = BandedCholesky::factor(&system)?;
        Ok(Self { fm, beta, system, chol })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn apply(&self, f: &[f64]) -> Result<ResolventSolve> {
        if f.len() != self.fm.len() {
            return Err(LabError::DimensionMismatch { expected: self.fm.len(), got: f.len() });
        }
        let rhs = self.fm.mass.matvec(f);
        let (output, residual) = solve_refined(&self.system, &self.chol, &rhs)?;
        Ok(ResolventSolve { beta: self.beta, input: f.to_vec(), output, residual })
    }
}

pub fn resolvent_apply(fm: &FormMatrices, beta: f64, f: &[f64]) -> Result<ResolventSolve> {
    Resolvent::new(fm, beta)?.apply(f)
}

pub const IDENTITY_TOL: f64 = 1e-8;

/// Contraction and resolvent-identity diagnostics over all pairs of `betas`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventReport {
    pub betas: Vec<f64>,
    /// Max over β of `‖βG_βF‖ / ‖F‖`.
    pub max_contraction_ratio: f64,
    /// Max over β ≠ γ of `‖G_βF − G_γF − (γ−β)G_βG_γF‖ / ‖F‖`.
    pub max_identity_defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn resolvent_checks(fm: &FormMatrices, betas: &[f64], f: &[f64]) -> Result<ResolventReport> {
    let fnorm = fm.norm(f);
    if fnorm == 0.0 {
        return Err(LabError::InvalidArgument("test function has zero norm".into()));
    }
    let solvers = betas.iter().map(|&b| Resolvent::new(fm, b)).collect::<Result<Vec<_>>>()?;
    let outputs = solvers.iter().map(|s| s.apply(f).map(|r| r.output)).collect::<Result<Vec<_>>>()?;
    let mut max_ratio = 0.0f64;
    for (b, u) in betas.iter().zip(&outputs) {
        let scaled: Vec<f64> = u.iter().map(|x| b * x).collect();
        max_ratio = max_ratio.max(fm.norm(&scaled) / fnorm);
    }
    let mut max_defect = 0.0f64;
    for (i, si) in solvers.iter().enumerate() {
        for (j, &gamma) in betas.iter().enumerate() {
            if i == j {
                continue;
            }
            let composed = si.apply(&outputs[j])?.output;
            let diff: Vec<f64> = (0..f.len())
                .map(|k| outputs[i][k] - outputs[j][k] - (gamma - betas[i]) * composed[k])
                .collect();
            max_defect = max_defect.max(fm.norm(&diff) / fnorm);
        }
    }
    Ok(ResolventReport {
        betas: betas.to_vec(),
        max_contraction_ratio: max_ratio,
        max_identity_defect: max_defect,
        tolerance: IDENTITY_TOL,
        pass: max_ratio <= 1.0 + 1e-12 && max_defect < IDENTITY_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Params;
    use crate::operator_lab::assemble_1d;

    fn fm() -> FormMatrices {
        assemble_1d(&Params::new(0.0).unwrap(), 200).unwrap()
    }

    #[test]
    fn constants_map_to_constants() {
        let fm = fm();
        let r = resolvent_apply(&fm, 2.0, &vec![1.0; fm.len()]).unwrap();
        assert!(r.residual < 1e-10);
        assert!(r.output.iter().all(|u| (u - 0.5).abs() < 1e-12));
    }

    #[test]
    fn linear_eigenfunction() {
        // K(x − ½) = ½ M(x − ½) at θ = 0 up to discretization, so G_β maps it to itself / (β + ½).
        let fm = fm();
        let f = fm.interpolate(|x| x[0] - 0.5);
        let r = resolvent_apply(&fm, 1.0, &f).unwrap();
        for (u, f) in r.output.iter().zip(&f) {
            assert!((u - f / 1.5).abs() < 1e-3);
        }
    }

    #[test]
    fn large_beta_approaches_identity() {
        let fm = fm();
        let f = fm.interpolate(|x| (3.0 * x[0]).sin());
        let beta = 1e6;
        let r = resolvent_apply(&fm, beta, &f).unwrap();
        let diff: Vec<f64> = r.output.iter().zip(&f).map(|(u, f)| beta * u - f).collect();
        assert!(fm.norm(&diff) / fm.norm(&f) < 1e-2);
    }

    #[test]
    fn contraction_and_identity() {
        let fm = fm();
        let f = fm.interpolate(|x| (5.0 * x[0]).cos() + x[0] * x[0]);
        let r = resolvent_checks(&fm, &[0.5, 1.0, 2.0], &f).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.max_contraction_ratio <= 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        let fm = fm();
        assert!(resolvent_apply(&fm, 0.0, &vec![1.0; fm.len()]).is_err());
        assert!(matches!(resolvent_apply(&fm, 1.0, &[1.0]), Err(LabError::DimensionMismatch { .. })));
        let zero = resolvent_apply(&fm, 1.0, &vec![0.0; fm.len()]).unwrap();
        assert!(zero.output.iter().all(|&u| u == 0.0));
    }
}
