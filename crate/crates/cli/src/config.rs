//! Flags, config files and their merge.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "dlab", version, about = "Experiments for the two-parameter Dirichlet process at alpha = 1/2")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Draw from GEM, PD, projected DP or ρ_d samplers.
    Sample,
    /// Evaluate the projected density.
    Density,
    /// Euler paths of the finite-dimensional diffusion, or a stationarity check.
    Simulate,
    /// Monte Carlo verification of an identity or bound.
    Verify,
    /// Generalized eigenvalues of the d = 1 form.
    Spectrum,
    /// Level-1 versus level-2 resolvent monotonicity.
    Mosco,
    /// Convergence diagnostics for the B_i ratio.
    BiLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Every tunable; the same keys are accepted in the config file.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Also write long-format plot data to this file.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plotdata: Option<PathBuf>,

    #[arg(long, global = true, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Dimension for a symmetric base.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Dyadic partition level (d = 2^level − 1).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
    /// Explicit base weights, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<f64>>,
    /// Geometric base ratio (bound41, bi-limit).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,

    /// sample: gem | pd | dp | levy | tilted.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub what: Option<String>,
    /// Stop stick-breaking once the remainder is below this.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    /// Use exactly this many sticks instead of a residual threshold.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sticks: Option<usize>,

    /// Point (free coordinates), comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    /// density at d = 1: evaluate on this many interior grid points.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[arg(long = "t-end", global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Record every thin-th state.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thin: Option<usize>,
    /// simulate: run a stationarity check over this many paths.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,

    /// verify: sdf3 | sdf4 | eq4 | norm-growth | ibp | bound41 | mean | cross.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    /// eq4 level, or the largest level for norm-growth.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    /// Category index (1-based).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i: Option<usize>,
    #[arg(long = "d-list", global = true, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_list: Option<Vec<usize>>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top: Option<usize>,
    /// d = 3 mesh divisions per unit (h = 1/mesh).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// mosco: linear | square | cubic | cosine | constant (default: the four non-constant ones).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    /// mosco: additional meshes for the refinement trend.
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trend: Option<Vec<usize>>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Settings {
    /// Fills fields missing here from `file`.
    pub fn merged_with(mut self, file: &Settings) -> Settings {
        merge_fields!(self, file; seed, threads, out, format, plotdata, theta, d, level, base, q, n, what,
            residual, sticks, x, grid, dt, t_end, thin, paths, id, k, i, d_list, cells, top, mesh, beta,
            function, trend);
        self
    }

    pub fn load(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// The resolved configuration embedded in every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(flatten)]
    pub settings: Settings,
}
