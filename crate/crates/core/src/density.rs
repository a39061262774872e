//! The projected density ρ_d of `(μ(B_1), …, μ(B_d))`.
//!
//! ```text
//! ρ_d(x) = C · Π_{i≤d+1} x_i^{-3/2} · (Σ_i p_i²/x_i)^{-(θ + (d+1)/2)}
//! C      = p_1⋯p_{d+1} Γ(θ + (d+1)/2) / (π^{d/2} Γ(θ + 1/2))
//! ```
//!
//! Everything is evaluated in log space.

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::domain::{BaseWeights, Params, SimplexPoint};
use crate::error::{LabError, Result};
use crate::sampler::sample_rho_levy;
use crate::stats::{MCEstimate, Moments};
use crate::stream::chunked;

/// `log ρ_d(x)`; `-inf` exactly on the boundary of the simplex.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct LogDensity(pub f64);

impl LogDensity {
    pub fn is_boundary(&self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn density(&self) -> f64 {
        self.0.exp()
    }
}

/// `log C` for the given base and θ.
pub fn log_normalizer(base: &BaseWeights, params: &Params) -> f64 {
    let d = base.dim() as f64;
    let theta = params.theta();
    let log_p: f64 = base.masses().iter().map(|p| p.ln()).sum();
    log_p + ln_gamma(theta + 0.5 * (d + 1.0)) - 0.5 * d * PI.ln() - ln_gamma(theta + 0.5)
}

pub fn log_rho(x: &SimplexPoint, base: &BaseWeights, params: &Params) -> Result<LogDensity> {
    if x.dim() != base.dim() {
        return Err(LabError::DimensionMismatch { expected: base.dim(), got: x.dim() });
    }
    Ok(log_rho_with(x.full(), base, params.theta(), log_normalizer(base, params)))
}

/// Same as [`log_rho`] over the full barycentric vector, with the normalizer
/// precomputed. Used by the quadrature loops.
pub(crate) fn log_rho_with(full: impl Iterator<Item = f64>, base: &BaseWeights, theta: f64, log_c: f64) -> LogDensity {
    let d = base.dim() as f64;
    let mut sum_log = 0.0;
    let mut s = 0.0;
    for (x, p) in full.zip(base.masses()) {
        if x <= 0.0 {
            return LogDensity(f64::NEG_INFINITY);
        }
        sum_log += x.ln();
        s += p * p / x;
    }
    LogDensity(log_c - 1.5 * sum_log - (theta + 0.5 * (d + 1.0)) * s.ln())
}

/// Density of Beta(θ + 1/2, θ + 1/2) at `x`, which is ρ_1 for the base (1/2, 1/2).
pub fn rho1_closed_form(x: f64, params: &Params) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(LabError::DomainError("x"));
    }
    let a = params.theta() + 0.5;
    Ok(((a - 1.0) * (x.ln() + (-x).ln_1p()) - ln_beta(a, a)).exp())
}

pub const NORMALIZATION_TAG: u32 = 0x0d00;

/// Monte Carlo estimate of `∫ ρ_d` using the θ = 0 density as proposal:
/// the ratio `exp(log ρ_θ - log ρ_0)` averaged over exact Lévy draws.
pub fn normalization_check(base: &BaseWeights, params: &Params, n: usize, seed: u64) -> Result<MCEstimate> {
    if n < 10_000 {
        return Err(LabError::InvalidArgument(format!("normalization check needs n >= 10^4, got {n}")));
    }
    let zero = Params::new(0.0)?;
    let parts = chunked(n, seed, NORMALIZATION_TAG, |rng, len| {
        let mut m = Moments::default();
        for _ in 0..len {
            let x = sample_rho_levy(base, rng);
            let target = log_rho(&x, base, params).expect("matching dimension");
            let proposal = log_rho(&x, base, &zero).expect("matching dimension");
            m.push((target.0 - proposal.0).exp());
        }
        m
    });
    Ok(Moments::merge_all(&parts).estimate(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_2_PI;

    fn sym1() -> BaseWeights {
        BaseWeights::symmetric(1).unwrap()
    }

    fn point(c: &[f64]) -> SimplexPoint {
        SimplexPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn arcsine_value_at_half() {
        let params = Params::new(0.0).unwrap();
        let v = log_rho(&point(&[0.5]), &sym1(), &params).unwrap().density();
        assert!((v - FRAC_2_PI).abs() < 1e-14);
        assert!((rho1_closed_form(0.5, &params).unwrap() - FRAC_2_PI).abs() < 1e-14);
    }

    #[test]
    fn uniform_at_theta_half() {
        let params = Params::new(0.5).unwrap();
        for x in [0.01, 0.3, 0.77, 0.999] {
            assert!((log_rho(&point(&[x]), &sym1(), &params).unwrap().density() - 1.0).abs() < 1e-13);
            assert!((rho1_closed_form(x, &params).unwrap() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn boundary_is_negative_infinity() {
        let params = Params::new(0.3).unwrap();
        let base = BaseWeights::new(vec![0.5, 0.3, 0.2]).unwrap();
        assert!(log_rho(&point(&[0.0, 0.4]), &base, &params).unwrap().is_boundary());
        assert!(log_rho(&point(&[0.6, 0.4]), &base, &params).unwrap().is_boundary());
        assert!(!log_rho(&point(&[0.3, 0.4]), &base, &params).unwrap().is_boundary());
    }

    #[test]
    fn dimension_mismatch() {
        let params = Params::new(0.0).unwrap();
        assert!(matches!(
            log_rho(&point(&[0.2, 0.2]), &sym1(), &params),
            Err(LabError::DimensionMismatch { expected: 1, got: 2 })
        ));
        assert!(rho1_closed_form(1.0, &params).is_err());
        assert!(rho1_closed_form(-0.1, &params).is_err());
    }

    #[test]
    fn closed_form_matches_general_formula_on_grid() {
        for theta in [0.0, 0.5, 2.0] {
            let params = Params::new(theta).unwrap();
            for i in 1..=200 {
                let x = i as f64 / 201.0;
                let general = log_rho(&point(&[x]), &sym1(), &params).unwrap().density();
                let closed = rho1_closed_form(x, &params).unwrap();
                assert!(((general - closed) / closed).abs() < 1e-10, "theta {theta} x {x}");
            }
        }
    }

    #[test]
    fn large_dimension_stays_finite() {
        let base = BaseWeights::symmetric(400).unwrap();
        let params = Params::new(1.0).unwrap();
        let x = SimplexPoint::new(vec![1.0 / 401.0; 400]).unwrap();
        assert!(log_rho(&x, &base, &params).unwrap().0.is_finite());
    }

    /// Composite Gauss–Legendre on `[0, π/2]` after `x = sin²φ`, which
    /// absorbs the `x^{θ-1/2}` endpoint behaviour.
    fn quad_1d(f: impl Fn(f64) -> f64) -> f64 {
        let (nodes, weights) = crate::operator_lab::quadrature::gauss_legendre(20);
        let panels = 200;
        let h = 0.5 * PI / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let a = k as f64 * h;
            for (t, w) in nodes.iter().zip(&weights) {
                let phi = a + 0.5 * h * (t + 1.0);
                let x = phi.sin().powi(2);
                if x > 0.0 && x < 1.0 {
                    total += 0.5 * h * w * f(x) * 2.0 * phi.sin() * phi.cos();
                }
            }
        }
        total
    }

    #[test]
    fn quadrature_oracle_integrates_to_one() {
        let base = BaseWeights::new(vec![0.3, 0.7]).unwrap();
        for theta in [0.0, 0.5, 1.0] {
            let params = Params::new(theta).unwrap();
            let total = quad_1d(|x| log_rho(&point(&[x]), &base, &params).unwrap().density());
            assert!((total - 1.0).abs() < 1e-6, "theta {theta}: {total}");
        }
        // d = 2 by iterated integration: x1 = u, x2 = (1 - u) v.
        let base = BaseWeights::new(vec![0.5, 0.3, 0.2]).unwrap();
        let params = Params::new(1.0).unwrap();
        let total = quad_1d(|u| {
            (1.0 - u) * quad_1d(|v| log_rho(&point(&[u, (1.0 - u) * v]), &base, &params).unwrap().density())
        });
        assert!((total - 1.0).abs() < 1e-4, "{total}");
    }

    #[test]
    fn normalization_monte_carlo() {
        let cases = [
            (BaseWeights::symmetric(1).unwrap(), 0.0),
            (BaseWeights::new(vec![0.5, 0.3, 0.2]).unwrap(), 1.0),
            (BaseWeights::symmetric(3).unwrap(), 0.5),
        ];
        for (base, theta) in cases {
            let est = normalization_check(&base, &Params::new(theta).unwrap(), 200_000, 17).unwrap();
            assert!((est.mean - 1.0).abs() <= 3.0 * est.stderr.max(1e-15), "theta {theta}: {est:?}");
        }
        let exact = normalization_check(&sym1(), &Params::new(0.0).unwrap(), 10_000, 1).unwrap();
        assert!((exact.mean - 1.0).abs() < 1e-12 && exact.stderr < 1e-12);
        assert!(normalization_check(&sym1(), &Params::new(0.0).unwrap(), 10, 1).is_err());
    }

    proptest! {
        #[test]
        fn permutation_symmetry(a in 0.05f64..0.4, b in 0.05f64..0.4, p0 in 0.1f64..0.45, theta in -0.4f64..2.0) {
            let p1 = 0.9 - p0;
            let base = BaseWeights::new(vec![p0, p1, 0.1]).unwrap();
            let swapped = BaseWeights::new(vec![p1, p0, 0.1]).unwrap();
            let params = Params::new(theta).unwrap();
            let l1 = log_rho(&point(&[a, b]), &base, &params).unwrap().0;
            let l2 = log_rho(&point(&[b, a]), &swapped, &params).unwrap().0;
            prop_assert!((l1 - l2).abs() < 1e-12);
        }
    }
}
