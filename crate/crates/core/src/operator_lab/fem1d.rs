//! P1 elements on `(0, 1)` weighted by the Beta(θ+½, θ+½) density.

use rayon::prelude::*;
use statrs::function::beta::ln_beta;

use super::quadrature::{gauss_jacobi, gauss_legendre};
use super::{scatter, Element, FormMatrices, Mesh};
use crate::domain::Params;
use crate::error::{LabError, Result};

pub const MIN_CELLS: usize = 16;
const ORDER: usize = 10;

/// Local `(stiffness, mass)` for cell `k` of `n`.
fn local(k: usize, n: usize, a: f64, lnb: f64, rules: &Rules) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let h = 1.0 / n as f64;
    let (x0, x1) = (k as f64 * h, (k + 1) as f64 * h);
    let e = a - 1.0;
    // Quadrature points and effective weights for ∫ · ρ dx on the cell.
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(ORDER);
    if k == 0 {
        let scale = ((e + 1.0) * (0.5 * h).ln() - lnb).exp();
        for (t, w) in rules.left.0.iter().zip(&rules.left.1) {
            let x = 0.5 * h * (1.0 + t);
            pts.push((x, scale * w * (1.0 - x).powf(e)));
        }
    } else if k == n - 1 {
        let scale = ((e + 1.0) * (0.5 * h).ln() - lnb).exp();
        for (t, w) in rules.right.0.iter().zip(&rules.right.1) {
            let x = 1.0 - 0.5 * h * (1.0 - t);
            pts.push((x, scale * w * x.powf(e)));
        }
    } else {
        for (t, w) in rules.interior.0.iter().zip(&rules.interior.1) {
            let x = x0 + 0.5 * h * (1.0 + t);
            let rho = (e * (x.ln() + (-x).ln_1p()) - lnb).exp();
            pts.push((x, 0.5 * h * w * rho));
        }
    }
    let mut m = [[0.0; 2]; 2];
    let mut a_int = 0.0;
    for &(x, w) in &pts {
        let phi = [(x1 - x) / h, (x - x0) / h];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += w * phi[i] * phi[j];
            }
        }
        a_int += w * x * (1.0 - x);
    }
    let c = 0.5 * a_int / (h * h);
    ([[c, -c], [-c, c]], m)
}

struct Rules {
    left: (Vec<f64>, Vec<f64>),
    right: (Vec<f64>, Vec<f64>),
    interior: (Vec<f64>, Vec<f64>),
}

/// Assembles the form `½∫x(1−x)u'v'ρ₁` and the `L²(ρ₁)` mass on `n_cells`
/// uniform cells.
pub fn assemble_1d(params: &Params, n_cells: usize) -> Result<FormMatrices> {
    if n_cells < MIN_CELLS {
        return Err(LabError::InvalidArgument(format!("n_cells must be at least {MIN_CELLS}, got {n_cells}")));
    }
    let a = params.theta() + 0.5;
    let e = a - 1.0;
    let lnb = ln_beta(a, a);
    let rules = Rules {
        left: gauss_jacobi(ORDER, 0.0, e),
        right: gauss_jacobi(ORDER, e, 0.0),
        interior: gauss_legendre(ORDER),
    };
    let elements: Vec<Element<2>> = (0..n_cells)
        .into_par_iter()
        .map(|k| {
            let (kl, ml) = local(k, n_cells, a, lnb, &rules);
            ([k, k + 1], kl, ml)
        })
        .collect();
    let n = n_cells + 1;
    let (stiffness, mass) = scatter(n, &elements);
    let total: f64 = elements.iter().map(|(_, _, m)| m.iter().flatten().sum::<f64>()).sum();
    Ok(FormMatrices {
        d: 1,
        theta: params.theta(),
        mesh: Mesh::Interval { cells: n_cells },
        nodes: (0..n).map(|k| vec![k as f64 / n_cells as f64]).collect(),
        stiffness,
        mass,
        mass_defect: 1.0 - total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_lab::detailed_balance_check;

    #[test]
    fn rejects_coarse_grids() {
        assert!(assemble_1d(&Params::new(0.0).unwrap(), 8).is_err());
    }

    #[test]
    fn structural_properties() {
        for theta in [-0.3, 0.0, 0.5, 2.0] {
            let fm = assemble_1d(&Params::new(theta).unwrap(), 64).unwrap();
            assert!(fm.constant_defect() < 1e-10, "theta {theta}");
            assert!(fm.mass_defect.abs() < 1e-12, "theta {theta}: {}", fm.mass_defect);
            assert!(detailed_balance_check(&fm).pass);
            assert_eq!(fm.stiffness.bandwidth(), 1);
        }
    }

    #[test]
    fn mass_reproduces_beta_moments() {
        // (x, 1) = E[x] = 1/2 and (x, x) = E[x²] = (a+1)/(2(2a+1)), exact for P1 interpolants of x.
        for theta in [0.0, 0.5, 2.0] {
            let fm = assemble_1d(&Params::new(theta).unwrap(), 128).unwrap();
            let u = fm.interpolate(|x| x[0]);
            let one = vec![1.0; fm.len()];
            assert!((fm.inner(&u, &one) - 0.5).abs() < 1e-12);
            let a = theta + 0.5;
            let second = (a + 1.0) / (2.0 * (2.0 * a + 1.0));
            assert!((fm.inner(&u, &u) - second).abs() < 1e-12);
            // E(x, x) = ½ E[x(1−x)] = ½ (1/2 − second).
            assert!((fm.energy(&u, &u) - 0.5 * (0.5 - second)).abs() < 1e-12);
        }
    }
}
