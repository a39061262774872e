//! Draws from GEM(1/2, θ), PD(1/2, θ), the projected Dirichlet process and
//! the projected density ρ_d.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, weighted::WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::domain::{BaseWeights, Params, SimplexPoint, WeightedSample};
use crate::error::{LabError, Result};

/// Upper bound on the number of sticks in one draw.
pub const MAX_STICKS: usize = 1_000_000;

/// Below this θ the tilt weights `T^{-θ}` have infinite variance.
pub const HIGH_VARIANCE_THETA: f64 = -0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Truncation {
    /// Exactly this many sticks.
    Sticks(usize),
    /// Stop once the unbroken remainder drops below the threshold.
    Residual(f64),
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Residual(1e-2)
    }
}

/// How the unbroken remainder is distributed over the partition cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResidualAssignment {
    /// Split in proportion to the base masses (the conditional mean of the
    /// remainder's split), so first moments are exact and second moments
    /// are off by O(residual²).
    #[default]
    Proportional,
    /// Give the whole remainder to one extra atom with a base-distributed label.
    PseudoAtom,
}

/// Sequential stick weights `V_k` and the unbroken remainder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StickWeights {
    pub v: Vec<f64>,
    pub residual: f64,
}

impl StickWeights {
    pub fn total(&self) -> f64 {
        self.v.iter().sum::<f64>() + self.residual
    }
}

/// Stick weights with i.i.d. category labels (0-based indices into the base).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledAtoms {
    pub weights: StickWeights,
    pub labels: Vec<usize>,
}

/// Beta(1/2, b) by the gamma ratio, with Gamma(1/2) drawn as Z²/2.
fn beta_half<R: Rng + ?Sized>(b: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let g1 = 0.5 * z * z;
    let g2 = Gamma::new(b, 1.0).expect("positive shape").sample(rng);
    let s = g1 + g2;
    if s > 0.0 {
        g1 / s
    } else {
        0.5
    }
}

pub fn sample_gem<R: Rng + ?Sized>(params: &Params, trunc: Truncation, rng: &mut R) -> Result<StickWeights> {
    let theta = params.theta();
    let (max_sticks, threshold) = match trunc {
        Truncation::Sticks(n) => {
            if n == 0 || n > MAX_STICKS {
                return Err(LabError::InvalidArgument(format!("stick count {n} outside 1..={MAX_STICKS}")));
            }
            (n, 0.0)
        }
        Truncation::Residual(eps) => {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(LabError::DomainError("residual threshold"));
            }
            (MAX_STICKS, eps)
        }
    };
    let mut v = Vec::new();
    let mut residual = 1.0;
    for k in 1..=max_sticks {
        let u = beta_half(theta + 0.5 * k as f64, rng);
        v.push(residual * u);
        residual *= 1.0 - u;
        if residual < threshold {
            return Ok(StickWeights { v, residual });
        }
    }
    match trunc {
        Truncation::Sticks(_) => Ok(StickWeights { v, residual }),
        Truncation::Residual(threshold) => Err(LabError::NonConvergence { threshold, cap: MAX_STICKS }),
    }
}

/// GEM weights in nonincreasing order (the residual is not included).
pub fn sample_pd<R: Rng + ?Sized>(params: &Params, trunc: Truncation, rng: &mut R) -> Result<Vec<f64>> {
    let mut v = sample_gem(params, trunc, rng)?.v;
    sort_descending(&mut v);
    Ok(v)
}

pub fn sort_descending(v: &mut [f64]) {
    v.sort_by(|a, b| b.total_cmp(a));
}

pub fn sample_labeled_atoms<R: Rng + ?Sized>(
    params: &Params,
    base: &BaseWeights,
    trunc: Truncation,
    rng: &mut R,
) -> Result<LabeledAtoms> {
    let weights = sample_gem(params, trunc, rng)?;
    let picker = label_picker(base);
    let labels = (0..weights.v.len()).map(|_| picker.sample(rng)).collect();
    Ok(LabeledAtoms { weights, labels })
}

fn label_picker(base: &BaseWeights) -> WeightedIndex<f64> {
    WeightedIndex::new(base.masses().iter().copied()).expect("validated base weights")
}

/// `(μ(B_1), …, μ(B_d))` for a truncated draw of the Dirichlet process.
pub fn sample_dp_projected<R: Rng + ?Sized>(
    params: &Params,
    base: &BaseWeights,
    trunc: Truncation,
    assignment: ResidualAssignment,
    rng: &mut R,
) -> Result<SimplexPoint> {
    let atoms = sample_labeled_atoms(params, base, trunc, rng)?;
    let mut mass = vec![0.0; base.masses().len()];
    for (&v, &label) in atoms.weights.v.iter().zip(&atoms.labels) {
        mass[label] += v;
    }
    let r = atoms.weights.residual;
    match assignment {
        ResidualAssignment::Proportional => {
            for (m, p) in mass.iter_mut().zip(base.masses()) {
                *m += r * p;
            }
        }
        ResidualAssignment::PseudoAtom => {
            mass[label_picker(base).sample(rng)] += r;
        }
    }
    normalize(&mut mass);
    SimplexPoint::from_full(mass)
}

fn normalize(v: &mut [f64]) -> f64 {
    let total: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= total;
    }
    total
}

/// One-sided stable-1/2 (Lévy) variables `t_j = p_j² / Z_j²` and their sum.
/// Writes the `t_j` into `t`.
fn levy_increments<R: Rng + ?Sized>(base: &BaseWeights, rng: &mut R, t: &mut [f64]) -> f64 {
    for (tj, &p) in t.iter_mut().zip(base.masses()) {
        *tj = loop {
            let z: f64 = rng.sample(StandardNormal);
            let v = p * p / (z * z);
            // Z = 0 has probability zero; redraw rather than return infinity.
            if v.is_finite() {
                break v;
            }
        };
    }
    t.iter().sum()
}

/// Exact draw from ρ_d at θ = 0: normalized independent Lévy variables with
/// scales `p_j`.
pub fn sample_rho_levy<R: Rng + ?Sized>(base: &BaseWeights, rng: &mut R) -> SimplexPoint {
    levy_point(base, rng).0
}

fn levy_point<R: Rng + ?Sized>(base: &BaseWeights, rng: &mut R) -> (SimplexPoint, f64) {
    let mut t = vec![0.0; base.masses().len()];
    loop {
        let total = levy_increments(base, rng, &mut t);
        let mut x = t.clone();
        normalize(&mut x);
        if let Ok(p) = SimplexPoint::from_full(x) {
            if p.is_interior() {
                return (p, total);
            }
        }
    }
}

/// Lévy point with importance weight `(Σ t_j)^{-θ}`; self-normalized averages
/// over these samples target expectations under ρ_d at `params.theta()`.
pub fn sample_rho_tilted<R: Rng + ?Sized>(params: &Params, base: &BaseWeights, rng: &mut R) -> WeightedSample {
    let theta = params.theta();
    let (point, total) = levy_point(base, rng);
    let weight = if theta == 0.0 { 1.0 } else { total.powf(-theta) };
    WeightedSample { point, weight, high_variance: theta <= HIGH_VARIANCE_THETA }
}

/// Exact Beta(a, b) draw by the gamma ratio.
pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let g1 = Gamma::new(a, 1.0).expect("positive shape").sample(rng);
    let g2 = Gamma::new(b, 1.0).expect("positive shape").sample(rng);
    g1 / (g1 + g2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{Moments, WeightedMoments, ks_statistic};
    use crate::stream::stream_rng;
    use proptest::prelude::*;
    use statrs::distribution::{Beta as BetaDist, ContinuousCDF};

    fn within(est: crate::stats::MCEstimate, target: f64, k: f64) -> bool {
        (est.mean - target).abs() <= k * est.stderr
    }

    #[test]
    fn first_stick_has_beta_mean() {
        // U_1 ~ Beta(1/2, θ + 1/2): mean 1/2 at θ = 0 and 1/4 at θ = 1.
        for (theta, target) in [(0.0, 0.5), (1.0, 0.25)] {
            let params = Params::new(theta).unwrap();
            let mut rng = stream_rng(1, 0);
            let mut m = Moments::default();
            for _ in 0..100_000 {
                m.push(sample_gem(&params, Truncation::Sticks(1), &mut rng).unwrap().v[0]);
            }
            assert!(within(m.estimate(1), target, 3.0), "theta {theta}: {:?}", m.estimate(1));
        }
    }

    #[test]
    fn residual_policy_meets_threshold() {
        let mut rng = stream_rng(2, 0);
        for theta in [-0.3, 0.0, 2.0] {
            let params = Params::new(theta).unwrap();
            for _ in 0..50 {
                let w = sample_gem(&params, Truncation::Residual(1e-3), &mut rng).unwrap();
                assert!(w.residual < 1e-3 && w.residual >= 0.0);
                assert!((w.total() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unreachable_threshold_reports_nonconvergence() {
        // The remainder decays like 1/n, so 1e-12 would need ~10^12 sticks.
        let params = Params::new(0.0).unwrap();
        let mut rng = stream_rng(3, 0);
        let err = sample_gem(&params, Truncation::Residual(1e-12), &mut rng).unwrap_err();
        assert_eq!(err, LabError::NonConvergence { threshold: 1e-12, cap: MAX_STICKS });
    }

    #[test]
    fn bad_truncation_rejected() {
        let params = Params::new(0.0).unwrap();
        let mut rng = stream_rng(3, 1);
        assert!(sample_gem(&params, Truncation::Sticks(0), &mut rng).is_err());
        assert!(sample_gem(&params, Truncation::Residual(1.5), &mut rng).is_err());
    }

    #[test]
    fn pd_is_sorted_gem() {
        let mut v = vec![0.2, 0.5, 0.1];
        sort_descending(&mut v);
        assert_eq!(v, vec![0.5, 0.2, 0.1]);

        let params = Params::new(0.5).unwrap();
        let gem = sample_gem(&params, Truncation::Sticks(40), &mut stream_rng(4, 0)).unwrap();
        let pd = sample_pd(&params, Truncation::Sticks(40), &mut stream_rng(4, 0)).unwrap();
        assert!(pd.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(pd.iter().sum::<f64>(), {
            let mut s = gem.v.clone();
            sort_descending(&mut s);
            s.iter().sum::<f64>()
        });
        assert!(pd[0] >= *gem.v.iter().max_by(|a, b| a.total_cmp(b)).unwrap());
    }

    #[test]
    fn projected_dp_mean_is_base() {
        let params = Params::new(1.0).unwrap();
        let base = BaseWeights::new(vec![0.5, 0.3, 0.2]).unwrap();
        let mut rng = stream_rng(5, 0);
        let mut m = [Moments::default(), Moments::default()];
        for _ in 0..100_000 {
            let x = sample_dp_projected(&params, &base, Truncation::default(), ResidualAssignment::default(), &mut rng).unwrap();
            m[0].push(x.coords()[0]);
            m[1].push(x.coords()[1]);
        }
        assert!(within(m[0].estimate(5), 0.5, 3.0), "{:?}", m[0].estimate(5));
        assert!(within(m[1].estimate(5), 0.3, 3.0), "{:?}", m[1].estimate(5));
    }

    #[test]
    fn pseudo_atom_assignment_stays_on_simplex() {
        let params = Params::new(0.0).unwrap();
        let base = BaseWeights::symmetric(3).unwrap();
        let mut rng = stream_rng(6, 0);
        for _ in 0..200 {
            let x = sample_dp_projected(&params, &base, Truncation::Residual(1e-4), ResidualAssignment::PseudoAtom, &mut rng).unwrap();
            assert!((x.full().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn levy_sampler_matches_arcsine_law() {
        let base = BaseWeights::symmetric(1).unwrap();
        let mut rng = stream_rng(7, 0);
        let mut xs: Vec<f64> = (0..1_000_000).map(|_| sample_rho_levy(&base, &mut rng).coords()[0]).collect();
        let arcsine = BetaDist::new(0.5, 0.5).unwrap();
        let d = ks_statistic(&mut xs, |x| arcsine.cdf(x));
        assert!(d < 0.002, "KS {d}");
    }

    #[test]
    fn levy_sampler_is_exchangeable_and_interior() {
        let base = BaseWeights::symmetric(3).unwrap();
        let mut rng = stream_rng(8, 0);
        let mut m = vec![Moments::default(); 4];
        for _ in 0..100_000 {
            let x = sample_rho_levy(&base, &mut rng);
            assert!(x.is_interior());
            for (mi, v) in m.iter_mut().zip(x.full()) {
                mi.push(v);
            }
        }
        for mi in &m {
            assert!(within(mi.estimate(8), 0.25, 3.0), "{:?}", mi.estimate(8));
        }
    }

    #[test]
    fn tilted_weights() {
        let base = BaseWeights::symmetric(3).unwrap();
        let mut rng = stream_rng(9, 0);
        let zero = Params::new(0.0).unwrap();
        assert_eq!(sample_rho_tilted(&zero, &base, &mut rng).weight, 1.0);
        let heavy = Params::new(-0.4).unwrap();
        assert!(sample_rho_tilted(&heavy, &base, &mut rng).high_variance);

        let params = Params::new(1.0).unwrap();
        let mut acc = WeightedMoments::default();
        for _ in 0..100_000 {
            let s = sample_rho_tilted(&params, &base, &mut rng);
            assert!(s.weight.is_finite() && s.weight > 0.0);
            acc.push(s.weight, s.point.coords()[0]);
        }
        assert!(within(acc.estimate(9), 0.25, 3.0), "{:?}", acc.estimate(9));
    }

    #[test]
    fn beta_sampler_mean() {
        let mut rng = stream_rng(10, 0);
        let mut m = Moments::default();
        for _ in 0..50_000 {
            m.push(sample_beta(1.5, 1.5, &mut rng));
        }
        assert!(within(m.estimate(10), 0.5, 3.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn telescoping_holds(seed in any::<u64>(), theta in -0.45f64..3.0, n in 1usize..200) {
            let params = Params::new(theta).unwrap();
            let w = sample_gem(&params, Truncation::Sticks(n), &mut stream_rng(seed, 0)).unwrap();
            prop_assert!(w.residual >= 0.0);
            prop_assert!(w.v.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!((w.total() - 1.0).abs() < 1e-12);
        }
    }
}
