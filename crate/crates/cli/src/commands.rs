//! Subcommand bodies. Each returns a rendered output and an overall pass flag.

use std::fmt::Write as _;

use dirichlet_lab::density::{log_rho, rho1_closed_form};
use dirichlet_lab::domain::dyadic_base;
use dirichlet_lab::generator::estimate_bi;
use dirichlet_lab::operator_lab::{mosco_monotonicity, mosco_refinement, spectrum, TestFunction};
use dirichlet_lab::report::{PlotData, PlotRow};
use dirichlet_lab::sampler::{
    sample_dp_projected, sample_gem, sample_pd, sample_rho_levy, sample_rho_tilted, ResidualAssignment, Truncation,
};
use dirichlet_lab::simulate::{simulate_path, stationarity_report};
use dirichlet_lab::stream::stream_rng;
use dirichlet_lab::verify;
use dirichlet_lab::{BaseWeights, Params, SimplexPoint};
use serde::Serialize;
use serde_json::Value;

use crate::config::{Command, Format, Settings};
use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 0;

/// Stream used by the `sample` and `simulate` commands.
const CLI_STREAM: u64 = 0xc1_0000;

/// What a command produced.
pub struct Outcome {
    /// Report as JSON, always available.
    pub report: Value,
    /// CSV body for commands with a tabular form.
    pub csv: Option<String>,
    pub plot: Vec<PlotRow>,
    pub pass: bool,
}

impl Outcome {
    fn json<T: Serialize>(report: &T, plot: Vec<PlotRow>, pass: bool) -> Result<Self, CliError> {
        Ok(Self { report: to_value(report)?, csv: None, plot, pass })
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Compute(format!("serialization: {e}")))
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn default_format(cmd: Command) -> Format {
    match cmd {
        Command::Sample | Command::Density | Command::Simulate | Command::Spectrum => Format::Csv,
        Command::Verify | Command::Mosco | Command::BiLimit => Format::Json,
    }
}

fn params(s: &Settings, default_theta: f64) -> Result<Params, CliError> {
    Ok(Params::new(s.theta.unwrap_or(default_theta))?)
}

/// Base from `--base`, `--level` or `--d` (symmetric), in that order.
fn base(s: &Settings, default_d: usize) -> Result<BaseWeights, CliError> {
    if let Some(p) = &s.base {
        return Ok(BaseWeights::new(p.clone())?);
    }
    if let Some(level) = s.level {
        return Ok(dyadic_base(level)?.base().clone());
    }
    Ok(BaseWeights::symmetric(s.d.unwrap_or(default_d))?)
}

fn truncation(s: &Settings) -> Result<Truncation, CliError> {
    match (s.sticks, s.residual) {
        (Some(_), Some(_)) => Err(config_err("--sticks and --residual are mutually exclusive")),
        (Some(k), None) => Ok(Truncation::Sticks(k)),
        (None, Some(r)) => Ok(Truncation::Residual(r)),
        (None, None) => Ok(Truncation::default()),
    }
}

fn seed(s: &Settings) -> u64 {
    s.seed.unwrap_or(DEFAULT_SEED)
}

fn join(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn run(cmd: Command, s: &Settings) -> Result<Outcome, CliError> {
    match cmd {
        Command::Sample => sample(s),
        Command::Density => density(s),
        Command::Simulate => simulate(s),
        Command::Verify => verify_cmd(s),
        Command::Spectrum => spectrum_cmd(s),
        Command::Mosco => mosco(s),
        Command::BiLimit => bi_limit(s),
    }
}

fn sample(s: &Settings) -> Result<Outcome, CliError> {
    let what = s.what.as_deref().unwrap_or("gem");
    let n = s.n.unwrap_or(10);
    let p = params(s, 0.0)?;
    let trunc = truncation(s)?;
    let mut rng = stream_rng(seed(s), CLI_STREAM);
    let mut csv = String::new();
    let mut rows = Vec::with_capacity(n);
    match what {
        "gem" => {
            writeln!(csv, "draw,residual,weights").unwrap();
            for k in 0..n {
                let w = sample_gem(&p, trunc, &mut rng)?;
                writeln!(csv, "{k},{},\"{}\"", w.residual, join(w.v.iter().copied())).unwrap();
                rows.push(to_value(&w)?);
            }
        }
        "pd" => {
            writeln!(csv, "draw,weights").unwrap();
            for k in 0..n {
                let w = sample_pd(&p, trunc, &mut rng)?;
                writeln!(csv, "{k},\"{}\"", join(w.iter().copied())).unwrap();
                rows.push(to_value(&w)?);
            }
        }
        "dp" | "levy" | "tilted" => {
            let b = base(s, 3)?;
            if what == "levy" && p.theta() != 0.0 {
                return Err(config_err("the levy sampler is exact only at theta = 0"));
            }
            let header: Vec<String> = (1..=b.dim() + 1).map(|i| format!("x{i}")).collect();
            let weighted = what == "tilted";
            writeln!(csv, "draw,{}{}", header.join(","), if weighted { ",weight" } else { "" }).unwrap();
            for k in 0..n {
                let (point, weight) = match what {
                    "dp" => (sample_dp_projected(&p, &b, trunc, ResidualAssignment::Proportional, &mut rng)?, None),
                    "levy" => (sample_rho_levy(&b, &mut rng), None),
                    _ => {
                        let w = sample_rho_tilted(&p, &b, &mut rng);
                        (w.point, Some(w.weight))
                    }
                };
                let mut line = format!("{k},{}", join(point.full()));
                if let Some(w) = weight {
                    write!(line, ",{w}").unwrap();
                }
                writeln!(csv, "{line}").unwrap();
                let full: Vec<f64> = point.full().collect();
                rows.push(serde_json::json!({ "point": full, "weight": weight }));
            }
        }
        other => return Err(config_err(format!("unknown sampler {other:?} (gem, pd, dp, levy, tilted)"))),
    }
    Ok(Outcome { report: serde_json::json!({ "what": what, "draws": rows }), csv: Some(csv), plot: Vec::new(), pass: true })
}

fn density(s: &Settings) -> Result<Outcome, CliError> {
    let p = params(s, 0.0)?;
    let mut csv = String::new();
    let mut rows = Vec::new();
    if let Some(g) = s.grid {
        if s.x.is_some() {
            return Err(config_err("--grid and --x are mutually exclusive"));
        }
        if g == 0 {
            return Err(config_err("--grid needs at least one point"));
        }
        let b = base(s, 1)?;
        if b.dim() != 1 {
            return Err(config_err("--grid is available for d = 1 only"));
        }
        writeln!(csv, "x,log_density,density,closed_form").unwrap();
        let mut plot = Vec::with_capacity(g);
        for j in 1..=g {
            let u = j as f64 / (g as f64 + 1.0);
            let ld = log_rho(&SimplexPoint::new(vec![u])?, &b, &p)?;
            let closed = if b.is_symmetric() { Some(rho1_closed_form(u, &p)?) } else { None };
            writeln!(csv, "{u},{},{},{}", ld.0, ld.density(), closed.map(|c| c.to_string()).unwrap_or_default()).unwrap();
            rows.push(serde_json::json!({ "x": [u], "log_density": ld.0, "density": ld.density(), "closed_form": closed }));
            let mut row = PlotRow::new("density", u, ld.density());
            if let Some(c) = closed {
                row = row.target(c);
            }
            plot.push(row);
        }
        return Ok(Outcome { report: Value::Array(rows), csv: Some(csv), plot, pass: true });
    }
    let x = s.x.clone().ok_or_else(|| config_err("density needs --x or --grid"))?;
    let b = base(s, x.len())?;
    let point = SimplexPoint::new(x.clone())?;
    let ld = log_rho(&point, &b, &p)?;
    writeln!(csv, "x,log_density,density").unwrap();
    writeln!(csv, "\"{}\",{},{}", join(x.iter().copied()), ld.0, ld.density()).unwrap();
    let report = serde_json::json!({ "x": x, "log_density": ld.0, "density": ld.density() });
    Ok(Outcome { report, csv: Some(csv), plot: Vec::new(), pass: true })
}

fn simulate(s: &Settings) -> Result<Outcome, CliError> {
    let p = params(s, 0.0)?;
    let dt = s.dt.unwrap_or(1e-3);
    let t_end = s.t_end.unwrap_or(1.0);
    if let Some(paths) = s.paths {
        let b = base(s, 1)?;
        let r = stationarity_report(&b, &p, paths, t_end, dt, seed(s))?;
        return Outcome::json(&r, r.plot_rows(), r.pass);
    }
    let x0 = match &s.x {
        Some(x) => x.clone(),
        None => {
            let d = s.base.as_ref().map(|b| b.len()).or(s.level.map(|l| (1usize << l) - 1)).or(s.d).unwrap_or(1);
            vec![1.0 / (d as f64 + 1.0); d]
        }
    };
    let b = base(s, x0.len())?;
    let x0 = SimplexPoint::new(x0)?;
    let mut rng = stream_rng(seed(s), CLI_STREAM + 1);
    let path = simulate_path(&x0, t_end, dt, s.thin.unwrap_or(1), &b, &p, &mut rng)?;
    let mut buf = Vec::new();
    path.write_csv(&mut buf)?;
    let csv = String::from_utf8(buf).map_err(|e| CliError::Compute(e.to_string()))?;
    Ok(Outcome { report: to_value(&path)?, csv: Some(csv), plot: Vec::new(), pass: true })
}

fn verify_cmd(s: &Settings) -> Result<Outcome, CliError> {
    let id = s.id.as_deref().ok_or_else(|| config_err("verify needs --id"))?;
    let n = s.n.unwrap_or(100_000);
    let seed = seed(s);
    let d = s.d.unwrap_or(3);
    match id {
        "sdf3" | "sdf4" => {
            let r = if id == "sdf3" { verify::verify_sdf3(d, n, seed)? } else { verify::verify_sdf4(d, n, seed)? };
            Outcome::json(&r, r.plot_rows(), r.pass)
        }
        "eq4" => {
            let r = verify::verify_eq4(s.k.unwrap_or(1), n, seed)?;
            Outcome::json(&r, r.plot_rows(), r.pass)
        }
        "norm-growth" => {
            let r = verify::norm_growth(s.k.unwrap_or(3), n, seed)?;
            Outcome::json(&r, r.plot_rows(), r.pass)
        }
        "ibp" | "mean" => {
            let b = base(s, 3)?;
            let p = params(s, 0.0)?;
            let r = if id == "ibp" {
                verify::verify_ibp_catalog(&b, &p, n, seed)?
            } else {
                verify::verify_mean_identity(&b, &p, n, seed)?
            };
            let pass = r.iter().all(|x| x.pass);
            Outcome::json(&r, r.plot_rows(), pass)
        }
        "cross" => {
            let b = base(s, 3)?;
            let r = verify::cross_validate_samplers(&b, truncation(s)?, n, seed)?;
            let pass = r.iter().all(|x| x.pass);
            Outcome::json(&r, r.plot_rows(), pass)
        }
        "bound41" => {
            let p = params(s, 0.0)?;
            let d_list = s.d_list.clone().unwrap_or_else(|| vec![3, 7, 15]);
            let r = verify::verify_bound41(s.q.unwrap_or(0.5), &p, s.i.unwrap_or(1), &d_list, n, seed)?;
            Outcome::json(&r, r.plot_rows(), r.pass)
        }
        other => Err(config_err(format!(
            "unknown identity {other:?} (sdf3, sdf4, eq4, norm-growth, ibp, bound41, mean, cross)"
        ))),
    }
}

fn spectrum_cmd(s: &Settings) -> Result<Outcome, CliError> {
    let p = params(s, 0.0)?;
    let r = spectrum(&p, s.cells.unwrap_or(2000), s.top.unwrap_or(5))?;
    let mut buf = Vec::new();
    r.write_csv(&mut buf)?;
    let csv = String::from_utf8(buf).map_err(|e| CliError::Compute(e.to_string()))?;
    Ok(Outcome { report: to_value(&r)?, csv: Some(csv), plot: r.plot_rows(), pass: r.pass })
}

fn mosco(s: &Settings) -> Result<Outcome, CliError> {
    let p = params(s, 0.0)?;
    let beta = s.beta.unwrap_or(1.0);
    let cells = s.cells.unwrap_or(2000);
    let mesh = s.mesh.unwrap_or(16);
    let functions: Vec<TestFunction> = match &s.function {
        Some(f) => vec![f.parse()?],
        None => TestFunction::CATALOG.to_vec(),
    };
    if let Some(trend) = &s.trend {
        let mut meshes = trend.clone();
        meshes.push(mesh);
        meshes.sort_unstable();
        meshes.dedup();
        let mut out = Vec::new();
        for &f in &functions {
            out.push(mosco_refinement(&p, beta, f, cells, &meshes)?);
        }
        return Outcome::json(&out, out.plot_rows(), true);
    }
    let mut out = Vec::new();
    for &f in &functions {
        out.push(mosco_monotonicity(&p, beta, f, cells, mesh)?);
    }
    let pass = out.iter().all(|r| r.pass);
    Outcome::json(&out, out.plot_rows(), pass)
}

fn bi_limit(s: &Settings) -> Result<Outcome, CliError> {
    let p = params(s, 0.0)?;
    let d_list = s.d_list.clone().unwrap_or_else(|| vec![3, 7, 15]);
    let r = estimate_bi(s.i.unwrap_or(1), s.q.unwrap_or(0.5), &p, &d_list, s.n.unwrap_or(100_000), truncation(s)?, seed(s))?;
    Outcome::json(&r, r.plot_rows(), true)
}
