//! Euler–Maruyama paths of the `L^(d)` diffusion on `Δ_d` and stationarity
//! checks.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::distribution::{Beta as BetaDist, ContinuousCDF};

use crate::domain::{BaseWeights, Params, SimplexPoint};
use crate::error::{LabError, Result};
use crate::sampler::{ResidualAssignment, Truncation, sample_beta, sample_dp_projected, sample_rho_levy};
use crate::stats::{Moments, ks_statistic};
use crate::stream::{LabRng, stream_id, stream_rng};

/// Coordinates are kept at least this far from the boundary.
pub const BOUNDARY_EPS: f64 = 1e-10;
/// Largest accepted time step.
pub const MAX_DT: f64 = 0.1;
const CHOLESKY_JITTER: f64 = 1e-14;

/// Reusable state for Euler steps at a fixed base and θ.
#[derive(Debug, Clone)]
pub struct EulerStepper {
    base: Vec<f64>,
    theta: f64,
    d: usize,
    chol: Vec<f64>,
    noise: Vec<f64>,
    drift: Vec<f64>,
    xi: Vec<f64>,
}

impl EulerStepper {
    pub fn new(base: &BaseWeights, params: &Params) -> Self {
        let d = base.dim();
        Self {
            base: base.masses().to_vec(),
            theta: params.theta(),
            d,
            chol: vec![0.0; d * d],
            noise: vec![0.0; d],
            drift: vec![0.0; d],
            xi: vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    fn check_dt(dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(LabError::DomainError("dt"));
        }
        if dt > MAX_DT {
            return Err(LabError::StepTooLarge { dt, max: MAX_DT });
        }
        Ok(())
    }

    /// Advances the `d` explicit coordinates in `x` by one step with the
    /// given standard normal vector `xi`.
    pub fn step_with_noise(&mut self, x: &mut [f64], dt: f64, xi: &[f64]) {
        let d = self.d;
        let last = (1.0 - x.iter().sum::<f64>()).max(BOUNDARY_EPS);
        // drift
        let mut s = self.base[d] * self.base[d] / last;
        for i in 0..d {
            s += self.base[i] * self.base[i] / x[i];
        }
        let scale = self.theta + 0.5 * (d as f64 + 1.0);
        for i in 0..d {
            let w = self.base[i] * self.base[i] / x[i] / s;
            self.drift[i] = 0.5 * (-0.5 - self.theta * x[i] + scale * w);
        }
        // σ σᵀ = a(x) by Cholesky, lower triangle row-major.
        for i in 0..d {
            for j in 0..=i {
                let a = x[i] * (if i == j { 1.0 } else { 0.0 } - x[j]);
                let mut v = a - (0..j).map(|k| self.chol[i * d + k] * self.chol[j * d + k]).sum::<f64>();
                if i == j {
                    if v <= 0.0 {
                        v = CHOLESKY_JITTER;
                    }
                    self.chol[i * d + i] = v.sqrt();
                } else {
                    self.chol[i * d + j] = v / self.chol[j * d + j];
                }
            }
        }
        let sq = dt.sqrt();
        for i in 0..d {
            self.noise[i] = (0..=i).map(|k| self.chol[i * d + k] * xi[k]).sum::<f64>();
        }
        for i in 0..d {
            x[i] += self.drift[i] * dt + sq * self.noise[i];
        }
        clamp_to_simplex(x);
    }

    pub fn step<R: Rng + ?Sized>(&mut self, x: &mut [f64], dt: f64, rng: &mut R) {
        let mut xi = std::mem::take(&mut self.xi);
        for v in xi.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        self.step_with_noise(x, dt, &xi);
        self.xi = xi;
    }
}

/// Projects coordinates to `[ε, ∞)` and rescales so that `Σ x_i <= 1 − ε`.
pub fn clamp_to_simplex(x: &mut [f64]) {
    for v in x.iter_mut() {
        if !(*v >= BOUNDARY_EPS) {
            *v = BOUNDARY_EPS;
        }
    }
    let sum: f64 = x.iter().sum();
    if sum > 1.0 - BOUNDARY_EPS {
        let r = (1.0 - BOUNDARY_EPS) / sum;
        for v in x.iter_mut() {
            *v *= r;
        }
    }
}

pub fn euler_step<R: Rng + ?Sized>(
    x: &SimplexPoint,
    dt: f64,
    base: &BaseWeights,
    params: &Params,
    rng: &mut R,
) -> Result<SimplexPoint> {
    EulerStepper::check_dt(dt)?;
    if x.dim() != base.dim() {
        return Err(LabError::DimensionMismatch { expected: base.dim(), got: x.dim() });
    }
    if !x.is_interior() {
        return Err(LabError::BoundaryPoint);
    }
    let mut stepper = EulerStepper::new(base, params);
    let mut c = x.coords().to_vec();
    stepper.step(&mut c, dt, rng);
    SimplexPoint::new(c)
}

/// States on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<SimplexPoint>,
}

impl PathSample {
    /// CSV with header `time,x1,...,xd`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let d = self.states.first().map_or(0, |s| s.dim());
        let header: Vec<String> = std::iter::once("time".to_string()).chain((1..=d).map(|i| format!("x{i}"))).collect();
        writeln!(w, "{}", header.join(","))?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let row: Vec<String> = std::iter::once(t.to_string()).chain(s.coords().iter().map(|v| v.to_string())).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    EulerStepper::check_dt(dt)?;
    if !(t_end >= dt) {
        return Err(LabError::InvalidArgument(format!("horizon {t_end} shorter than dt {dt}")));
    }
    Ok((t_end / dt).round() as usize)
}

/// Iterated Euler steps from `x0`, recording every `thin`-th state (the
/// initial and final states are always recorded).
pub fn simulate_path<R: Rng + ?Sized>(
    x0: &SimplexPoint,
    t_end: f64,
    dt: f64,
    thin: usize,
    base: &BaseWeights,
    params: &Params,
    rng: &mut R,
) -> Result<PathSample> {
    let steps = step_count(t_end, dt)?;
    if x0.dim() != base.dim() {
        return Err(LabError::DimensionMismatch { expected: base.dim(), got: x0.dim() });
    }
    if !x0.is_interior() {
        return Err(LabError::BoundaryPoint);
    }
    let thin = thin.max(1);
    let mut stepper = EulerStepper::new(base, params);
    let mut x = x0.coords().to_vec();
    let mut times = vec![0.0];
    let mut states = vec![x0.clone()];
    for k in 1..=steps {
        stepper.step(&mut x, dt, rng);
        if k % thin == 0 || k == steps {
            times.push(k as f64 * dt);
            states.push(SimplexPoint::new(x.clone())?);
        }
    }
    Ok(PathSample { dt, times, states })
}

/// Terminal state of one path without recording intermediate states.
fn terminal<R: Rng + ?Sized>(stepper: &mut EulerStepper, x: &mut [f64], steps: usize, dt: f64, rng: &mut R) {
    for _ in 0..steps {
        stepper.step(x, dt, rng);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentComparison {
    pub coordinate: usize,
    pub power: u32,
    pub initial: f64,
    pub terminal: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityReport {
    pub d: usize,
    pub theta: f64,
    pub n_paths: usize,
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
    /// `"ks"` (d = 1, symmetric base) or `"moments"`.
    pub method: String,
    /// KS distance of the terminal states from the exact stationary law.
    pub ks_terminal: Option<f64>,
    /// KS distance of the initial states, for reference.
    pub ks_initial: Option<f64>,
    pub moments: Vec<MomentComparison>,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

pub const STATIONARITY_TAG: u32 = 0x5100;
pub const KS_THRESHOLD: f64 = 0.02;
pub const MOMENT_Z_THRESHOLD: f64 = 3.0;

/// Draws an exact stationary sample for the starting point of a path.
fn stationary_start(base: &BaseWeights, params: &Params, rng: &mut LabRng) -> Result<SimplexPoint> {
    let theta = params.theta();
    if base.dim() == 1 && base.is_symmetric() {
        let a = theta + 0.5;
        return SimplexPoint::new(vec![sample_beta(a, a, rng)]);
    }
    if theta == 0.0 {
        return Ok(sample_rho_levy(base, rng));
    }
    sample_dp_projected(params, base, Truncation::Residual(1e-3), ResidualAssignment::Proportional, rng)
}

/// Starts `n_paths` paths from the stationary law, runs them to `t_end`
/// and compares terminal and initial marginals.
pub fn stationarity_report(
    base: &BaseWeights,
    params: &Params,
    n_paths: usize,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<StationarityReport> {
    let d = base.dim();
    if d > 3 {
        return Err(LabError::InvalidArgument(format!("stationarity checks support d <= 3, got {d}")));
    }
    if n_paths < 2 {
        return Err(LabError::InvalidArgument("need at least two paths".into()));
    }
    let steps = step_count(t_end, dt)?;
    use rayon::prelude::*;
    let pairs: Vec<(SimplexPoint, Vec<f64>)> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = stream_rng(seed, stream_id(STATIONARITY_TAG, p as u64));
            let start = stationary_start(base, params, &mut rng)?;
            let mut x = start.coords().to_vec();
            clamp_to_simplex(&mut x);
            let mut stepper = EulerStepper::new(base, params);
            terminal(&mut stepper, &mut x, steps, dt, &mut rng);
            Ok((start, x))
        })
        .collect::<Result<_>>()?;

    let theta = params.theta();
    let mut report = StationarityReport {
        d,
        theta,
        n_paths,
        t_end,
        dt,
        seed,
        method: String::new(),
        ks_terminal: None,
        ks_initial: None,
        moments: Vec::new(),
        statistic: 0.0,
        threshold: 0.0,
        pass: false,
    };
    if d == 1 && base.is_symmetric() {
        let a = theta + 0.5;
        let law = BetaDist::new(a, a).map_err(|e| LabError::InvalidArgument(e.to_string()))?;
        let mut term: Vec<f64> = pairs.iter().map(|p| p.1[0]).collect();
        let mut init: Vec<f64> = pairs.iter().map(|p| p.0.coords()[0]).collect();
        let ks_t = ks_statistic(&mut term, |x| law.cdf(x));
        let ks_i = ks_statistic(&mut init, |x| law.cdf(x));
        report.method = "ks".into();
        report.ks_terminal = Some(ks_t);
        report.ks_initial = Some(ks_i);
        report.statistic = ks_t;
        report.threshold = KS_THRESHOLD;
        report.pass = ks_t < KS_THRESHOLD;
    } else {
        let mut worst = 0.0f64;
        for i in 0..d {
            for power in [1u32, 2] {
                let mut mi = Moments::default();
                let mut mt = Moments::default();
                for (s, t) in &pairs {
                    mi.push(s.coords()[i].powi(power as i32));
                    mt.push(t[i].powi(power as i32));
                }
                let (ei, et) = (mi.estimate(seed), mt.estimate(seed));
                let z = (et.mean - ei.mean) / (ei.stderr.powi(2) + et.stderr.powi(2)).sqrt();
                worst = worst.max(z.abs());
                report.moments.push(MomentComparison { coordinate: i + 1, power, initial: ei.mean, terminal: et.mean, z });
            }
        }
        report.method = "moments".into();
        report.statistic = worst;
        report.threshold = MOMENT_Z_THRESHOLD;
        report.pass = worst <= MOMENT_Z_THRESHOLD;
    }
    Ok(report)
}

/// Terminal KS statistic at `dt` and `dt / 2` (d = 1, symmetric base), as a
/// discretization-bias diagnostic. Not asserted.
pub fn dt_refinement(params: &Params, n_paths: usize, t_end: f64, dt: f64, seed: u64) -> Result<(f64, f64)> {
    let base = BaseWeights::symmetric(1)?;
    let coarse = stationarity_report(&base, params, n_paths, t_end, dt, seed)?;
    let fine = stationarity_report(&base, params, n_paths, t_end, 0.5 * dt, seed)?;
    Ok((coarse.statistic, fine.statistic))
}
