//! Monte Carlo checks of exact integral identities and bounds under ρ_d.
//!
//! θ = 0 checks draw exactly from ρ_d with the Lévy sampler. Other θ use the
//! tilted sampler with self-normalized weights.

use serde::Serialize;

use crate::cylinder::{CylinderFunction, Polynomial, ibp_catalog};
use crate::domain::{BaseWeights, Params, SimplexPoint};
use crate::error::{LabError, Result};
use crate::generator::{apply_generator, carre_du_champ, stable_weights};
use crate::sampler::{sample_dp_projected, sample_rho_levy, sample_rho_tilted, ResidualAssignment, Truncation};
use crate::stats::{MCEstimate, Moments, WeightedMoments};
use crate::stream::chunked;

/// Default acceptance band in standard errors.
pub const DEFAULT_Z: f64 = 3.0;
/// Band for the integration-by-parts difference of two independent estimates.
pub const IBP_Z: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// Pass when `|estimate − target| <= z_threshold · stderr`.
    Exact,
    /// Pass when `estimate <= target`.
    UpperBound,
}

/// One Monte Carlo identity check, serialized flat as
/// `{name, d, theta, n, seed, estimate, stderr, target, z, pass, …}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub d: usize,
    pub theta: f64,
    pub n: usize,
    pub seed: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
    pub kind: TargetKind,
    pub z: f64,
    pub z_threshold: f64,
    /// Effective sample size for weighted estimates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ess: Option<f64>,
    pub pass: bool,
}

impl IdentityReport {
    pub fn exact(name: impl Into<String>, d: usize, theta: f64, est: MCEstimate, target: f64, k: f64) -> Self {
        let z = est.z_score(target);
        Self {
            name: name.into(),
            d,
            theta,
            n: est.n,
            seed: est.seed,
            estimate: est.mean,
            stderr: est.stderr,
            target,
            kind: TargetKind::Exact,
            z,
            z_threshold: k,
            ess: None,
            pass: z.abs() <= k,
        }
    }

    pub fn upper_bound(name: impl Into<String>, d: usize, theta: f64, est: MCEstimate, bound: f64) -> Self {
        Self {
            name: name.into(),
            d,
            theta,
            n: est.n,
            seed: est.seed,
            estimate: est.mean,
            stderr: est.stderr,
            target: bound,
            kind: TargetKind::UpperBound,
            z: est.z_score(bound),
            z_threshold: 0.0,
            ess: None,
            pass: est.mean <= bound,
        }
    }

    pub fn mc(&self) -> MCEstimate {
        MCEstimate { mean: self.estimate, stderr: self.stderr, n: self.n, seed: self.seed }
    }

    fn with_ess(mut self, ess: Option<f64>) -> Self {
        self.ess = ess;
        self
    }
}

/// `3 / ((d+1)(d+3))`.
pub fn sdf3_target(d: usize) -> f64 {
    3.0 / ((d as f64 + 1.0) * (d as f64 + 3.0))
}

/// `1 / ((d+1)(d+3))`.
pub fn sdf4_target(d: usize) -> f64 {
    1.0 / ((d as f64 + 1.0) * (d as f64 + 3.0))
}

pub const SDF_TAG: u32 = 0x5df0;

/// Both symmetric-base moments from one sample stream:
/// `(1/x_i²)/(Σ 1/x_j)²` averaged over `i <= d`, and
/// `(1/(x_i x_j))/(Σ 1/x_k)²` averaged over `i < j <= d` (when `d >= 2`).
pub fn verify_sdf_pair(d: usize, n: usize, seed: u64) -> Result<(IdentityReport, Option<IdentityReport>)> {
    if d == 0 || n < 2 {
        return Err(LabError::InvalidArgument("need d >= 1 and n >= 2".into()));
    }
    let base = BaseWeights::symmetric(d)?;
    let pairs = (d * (d.saturating_sub(1)) / 2) as f64;
    let parts = chunked(n, seed, SDF_TAG + d as u32, |rng, len| {
        let (mut diag, mut cross) = (Moments::default(), Moments::default());
        for _ in 0..len {
            let x = sample_rho_levy(&base, rng);
            let s: f64 = x.full().map(|v| 1.0 / v).sum();
            let (mut sy, mut sy2) = (0.0, 0.0);
            for &v in x.coords() {
                let y = 1.0 / v;
                sy += y;
                sy2 += y * y;
            }
            let s2 = s * s;
            diag.push(sy2 / s2 / d as f64);
            if pairs > 0.0 {
                cross.push(0.5 * (sy * sy - sy2) / s2 / pairs);
            }
        }
        (diag, cross)
    });
    let diag = Moments::merge_all(parts.iter().map(|p| &p.0)).estimate(seed);
    let cross = Moments::merge_all(parts.iter().map(|p| &p.1)).estimate(seed);
    let r3 = IdentityReport::exact("sdf3", d, 0.0, diag, sdf3_target(d), DEFAULT_Z);
    let r4 = (d >= 2).then(|| IdentityReport::exact("sdf4", d, 0.0, cross, sdf4_target(d), DEFAULT_Z));
    Ok((r3, r4))
}

pub fn verify_sdf3(d: usize, n: usize, seed: u64) -> Result<IdentityReport> {
    Ok(verify_sdf_pair(d, n, seed)?.0)
}

pub fn verify_sdf4(d: usize, n: usize, seed: u64) -> Result<IdentityReport> {
    if d < 2 {
        return Err(LabError::InvalidArgument("the cross moment needs d >= 2".into()));
    }
    Ok(verify_sdf_pair(d, n, seed)?.1.expect("d >= 2"))
}

/// `2p(d+1−p)/(d+3)` with `d = 2^k − 1`, `p = 2^{k−1}`.
pub fn eq4_target(k: u32) -> f64 {
    let d = ((1u64 << k) - 1) as f64;
    let p = (1u64 << (k - 1)) as f64;
    2.0 * p * (d + 1.0 - p) / (d + 3.0)
}

/// `‖L^(d) f_k‖² = 2^{2k−5} / (2^k + 2)`, the sixteenth of [`eq4_target`].
pub fn norm_growth_target(k: u32) -> f64 {
    2f64.powi(2 * k as i32 - 5) / (2f64.powi(k as i32) + 2.0)
}

pub const EQ4_TAG: u32 = 0xe400;
pub const MAX_NORM_GROWTH_LEVEL: u32 = 5;

/// `16 ∫ |L^(d) f|² ρ_d` for `f = x_1 + … + x_p` on the level-`k` dyadic
/// partition at θ = 0.
pub fn verify_eq4(k: u32, n: usize, seed: u64) -> Result<IdentityReport> {
    if k == 0 || k > 16 {
        return Err(LabError::InvalidArgument(format!("level {k} outside 1..=16")));
    }
    let d = (1usize << k) - 1;
    let p = 1usize << (k - 1);
    let base = BaseWeights::symmetric(d)?;
    let params = Params::new(0.0)?;
    let f = Polynomial::coordinate_sum(p);
    let parts = chunked(n, seed, EQ4_TAG + k, |rng, len| -> Result<Moments> {
        let mut m = Moments::default();
        for _ in 0..len {
            let x = sample_rho_levy(&base, rng);
            let lf = apply_generator(&f, &x, &base, &params)?;
            m.push(16.0 * lf * lf);
        }
        Ok(m)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let est = Moments::merge_all(&parts).estimate(seed);
    Ok(IdentityReport::exact(format!("eq4_k{k}"), d, 0.0, est, eq4_target(k), DEFAULT_Z))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormGrowthReport {
    /// `‖L f_k‖²` estimates and targets for `k = 1..=k_max`.
    pub rows: Vec<IdentityReport>,
    pub targets_increasing: bool,
    pub pass: bool,
}

/// Runs [`verify_eq4`] for `k = 1..=k_max` and rescales by 1/16.
pub fn norm_growth(k_max: u32, n: usize, seed: u64) -> Result<NormGrowthReport> {
    if k_max == 0 || k_max > MAX_NORM_GROWTH_LEVEL {
        return Err(LabError::InvalidArgument(format!("k_max must lie in 1..={MAX_NORM_GROWTH_LEVEL}")));
    }
    let mut rows = Vec::new();
    for k in 1..=k_max {
        let full = verify_eq4(k, n, seed)?;
        rows.push(IdentityReport::exact(
            format!("norm_growth_k{k}"),
            full.d,
            0.0,
            full.mc().scaled(1.0 / 16.0),
            norm_growth_target(k),
            DEFAULT_Z,
        ));
    }
    let targets_increasing = (1..k_max).all(|k| norm_growth_target(k + 1) > norm_growth_target(k));
    let pass = targets_increasing && rows.iter().all(|r| r.pass);
    Ok(NormGrowthReport { rows, targets_increasing, pass })
}

pub const IBP_TAG_FORM: u32 = 0x1b00;
pub const IBP_TAG_GENERATOR: u32 = 0x1b80;

fn check_base(base: &BaseWeights, f: &dyn CylinderFunction) -> Result<()> {
    if f.arity() > base.dim() {
        return Err(LabError::DimensionMismatch { expected: base.dim(), got: f.arity() });
    }
    Ok(())
}

/// Weighted averages of `stat(x)` (a vector of statistics) over ρ_d draws.
fn weighted_means<F>(base: &BaseWeights, params: &Params, n: usize, seed: u64, tag: u32, k: usize, stat: F) -> Result<Vec<WeightedMoments>>
where
    F: Fn(&SimplexPoint, &mut [f64]) -> Result<()> + Sync,
{
    let parts = chunked(n, seed, tag, |rng, len| -> Result<Vec<WeightedMoments>> {
        let mut acc = vec![WeightedMoments::default(); k];
        let mut buf = vec![0.0; k];
        for _ in 0..len {
            let s = sample_rho_tilted(params, base, rng);
            stat(&s.point, &mut buf)?;
            for (a, &v) in acc.iter_mut().zip(&buf) {
                a.push(s.weight, v);
            }
        }
        Ok(acc)
    });
    let mut total = vec![WeightedMoments::default(); k];
    for part in parts {
        for (t, p) in total.iter_mut().zip(part?.iter()) {
            t.merge(p);
        }
    }
    Ok(total)
}

/// Integration by parts for several pairs at once: `A = E[Γ(f, g)]` and
/// `B = E[−L f · g]` from two independent sample streams; each report
/// checks `|A − B|` against the combined standard error.
pub fn verify_ibp_pairs(
    pairs: &[(String, Polynomial, Polynomial)],
    base: &BaseWeights,
    params: &Params,
    n: usize,
    seed: u64,
) -> Result<Vec<IdentityReport>> {
    for (_, f, g) in pairs {
        check_base(base, f)?;
        check_base(base, g)?;
    }
    let k = pairs.len();
    let form = weighted_means(base, params, n, seed, IBP_TAG_FORM, k, |x, out| {
        for (o, (_, f, g)) in out.iter_mut().zip(pairs) {
            *o = carre_du_champ(f, g, x)?;
        }
        Ok(())
    })?;
    let generator = weighted_means(base, params, n, seed, IBP_TAG_GENERATOR, k, |x, out| {
        for (o, (_, f, g)) in out.iter_mut().zip(pairs) {
            *o = -apply_generator(f, x, base, params)? * g.value(x.coords());
        }
        Ok(())
    })?;
    let weighted = params.theta() != 0.0;
    Ok(pairs
        .iter()
        .zip(form.iter().zip(&generator))
        .map(|((name, _, _), (a, b))| {
            let (ea, eb) = (a.estimate(seed), b.estimate(seed));
            let diff = MCEstimate {
                mean: ea.mean - eb.mean,
                stderr: (ea.stderr.powi(2) + eb.stderr.powi(2)).sqrt(),
                n,
                seed,
            };
            let ess = weighted.then(|| a.ess().min(b.ess()));
            IdentityReport::exact(format!("ibp[{name}]"), base.dim(), params.theta(), diff, 0.0, IBP_Z).with_ess(ess)
        })
        .collect())
}

pub fn verify_ibp(f: &Polynomial, g: &Polynomial, base: &BaseWeights, params: &Params, n: usize, seed: u64) -> Result<IdentityReport> {
    let pairs = vec![("f,g".to_string(), f.clone(), g.clone())];
    Ok(verify_ibp_pairs(&pairs, base, params, n, seed)?.remove(0))
}

/// The polynomial catalog on `Δ_d`.
pub fn verify_ibp_catalog(base: &BaseWeights, params: &Params, n: usize, seed: u64) -> Result<Vec<IdentityReport>> {
    verify_ibp_pairs(&ibp_catalog(base.dim()), base, params, n, seed)
}

pub const BOUND41_TAG: u32 = 0x4100;

/// `M = ∫ (p_i⁴/x_i²) / (Σ_j p_j²/x_j)² ρ_d`, i.e. the second moment of the
/// normalized weight `w_i`. `i` is 1-based.
pub fn weight_second_moment(base: &BaseWeights, params: &Params, i: usize, n: usize, seed: u64) -> Result<(MCEstimate, f64)> {
    if i == 0 || i > base.dim() + 1 {
        return Err(LabError::InvalidArgument(format!("category {i} out of range")));
    }
    let acc = weighted_means(base, params, n, seed, BOUND41_TAG + base.dim() as u32, 1, |x, out| {
        out[0] = stable_weights(x, base)[i - 1].powi(2);
        Ok(())
    })?;
    Ok((acc[0].estimate(seed), acc[0].ess()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bound41Row {
    pub d: usize,
    pub moment: MCEstimate,
    /// `M_d (d+1+2θ)(d+3+2θ)`.
    pub rescaled: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bound41Report {
    pub i: usize,
    pub q: f64,
    pub theta: f64,
    pub rows: Vec<Bound41Row>,
    /// Largest rescaled value: an empirical stand-in for the constant `C(θ, p_i)`.
    pub empirical_constant: f64,
    pub spread: f64,
    pub max_spread: f64,
    pub pass: bool,
}

/// Largest accepted ratio between the extreme rescaled moments.
pub const BOUND41_MAX_SPREAD: f64 = 3.0;

/// Rescaled moments over `d_list` for the geometric base with ratio `q`.
pub fn verify_bound41(q: f64, params: &Params, i: usize, d_list: &[usize], n: usize, seed: u64) -> Result<Bound41Report> {
    if d_list.is_empty() || d_list.iter().any(|&d| d < i) {
        return Err(LabError::InvalidArgument("every d must be at least i".into()));
    }
    let theta = params.theta();
    let mut rows = Vec::new();
    for &d in d_list {
        let base = BaseWeights::geometric(q, d)?;
        let (moment, ess) = weight_second_moment(&base, params, i, n, seed)?;
        let scale = (d as f64 + 1.0 + 2.0 * theta) * (d as f64 + 3.0 + 2.0 * theta);
        rows.push(Bound41Row { d, moment, rescaled: moment.mean * scale, ess });
    }
    let max = rows.iter().map(|r| r.rescaled).fold(f64::MIN, f64::max);
    let min = rows.iter().map(|r| r.rescaled).fold(f64::MAX, f64::min);
    let spread = max / min;
    let pass = rows.iter().all(|r| r.moment.mean > 0.0) && spread < BOUND41_MAX_SPREAD;
    Ok(Bound41Report { i, q, theta, rows, empirical_constant: max, spread, max_spread: BOUND41_MAX_SPREAD, pass })
}

pub const CROSS_TAG_LEVY: u32 = 0xc500;
pub const CROSS_TAG_DP: u32 = 0xc580;

/// Coordinate moments `E[x_i]` and `E[x_i²]` over all `d + 1` coordinates.
fn coordinate_moments<F>(d: usize, n: usize, seed: u64, tag: u32, draw: F) -> Result<Vec<Moments>>
where
    F: Fn(&mut crate::stream::LabRng) -> Result<SimplexPoint> + Sync,
{
    let parts = chunked(n, seed, tag, |rng, len| -> Result<Vec<Moments>> {
        let mut acc = vec![Moments::default(); 2 * (d + 1)];
        for _ in 0..len {
            let x = draw(rng)?;
            for (i, v) in x.full().enumerate() {
                acc[2 * i].push(v);
                acc[2 * i + 1].push(v * v);
            }
        }
        Ok(acc)
    });
    let mut total = vec![Moments::default(); 2 * (d + 1)];
    for part in parts {
        for (t, p) in total.iter_mut().zip(part?.iter()) {
            t.merge(p);
        }
    }
    Ok(total)
}

/// At θ = 0, compares first and second coordinate moments of the exact
/// Lévy sampler with the truncated stick-breaking projection. Each report
/// tests the difference of two independent means against zero.
pub fn cross_validate_samplers(base: &BaseWeights, trunc: Truncation, n: usize, seed: u64) -> Result<Vec<IdentityReport>> {
    let params = Params::new(0.0)?;
    let d = base.dim();
    let levy = coordinate_moments(d, n, seed, CROSS_TAG_LEVY + d as u32, |rng| Ok(sample_rho_levy(base, rng)))?;
    let dp = coordinate_moments(d, n, seed, CROSS_TAG_DP + d as u32, |rng| {
        sample_dp_projected(&params, base, trunc, ResidualAssignment::Proportional, rng)
    })?;
    Ok(levy
        .iter()
        .zip(&dp)
        .enumerate()
        .map(|(k, (a, b))| {
            let (ea, eb) = (a.estimate(seed), b.estimate(seed));
            let diff = MCEstimate {
                mean: ea.mean - eb.mean,
                stderr: (ea.stderr.powi(2) + eb.stderr.powi(2)).sqrt(),
                n,
                seed,
            };
            let name = format!("levy_vs_dp[x{}^{}]", k / 2 + 1, k % 2 + 1);
            IdentityReport::exact(name, d, 0.0, diff, 0.0, DEFAULT_Z)
        })
        .collect())
}

pub const MEAN_TAG: u32 = 0xa100;

/// `E[x_i] = p_i` for every coordinate, using the tilted sampler.
pub fn verify_mean_identity(base: &BaseWeights, params: &Params, n: usize, seed: u64) -> Result<Vec<IdentityReport>> {
    let d = base.dim();
    let acc = weighted_means(base, params, n, seed, MEAN_TAG + d as u32, d + 1, |x, out| {
        for (o, v) in out.iter_mut().zip(x.full()) {
            *o = v;
        }
        Ok(())
    })?;
    let weighted = params.theta() != 0.0;
    Ok(acc
        .iter()
        .zip(base.masses())
        .enumerate()
        .map(|(i, (m, &p))| {
            IdentityReport::exact(format!("mean[x{}]", i + 1), d, params.theta(), m.estimate(seed), p, DEFAULT_Z)
                .with_ess(weighted.then(|| m.ess()))
        })
        .collect())
}
