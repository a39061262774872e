//! Long-format CSV for external plotting.

use std::io::Write;

use crate::generator::BiReport;
use crate::operator_lab::{MoscoReport, MoscoTrend, SpectrumReport};
use crate::simulate::StationarityReport;
use crate::verify::{Bound41Report, IdentityReport, NormGrowthReport};

pub const PLOTDATA_HEADER: &str = "experiment,x,y,stderr,target";

#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub experiment: String,
    pub x: f64,
    pub y: f64,
    pub stderr: Option<f64>,
    pub target: Option<f64>,
}

impl PlotRow {
    pub fn new(experiment: impl Into<String>, x: f64, y: f64) -> Self {
        Self { experiment: experiment.into(), x, y, stderr: None, target: None }
    }

    pub fn stderr(mut self, s: f64) -> Self {
        self.stderr = Some(s);
        self
    }

    pub fn target(mut self, t: f64) -> Self {
        self.target = Some(t);
        self
    }
}

/// Reports that can be flattened into plot rows.
pub trait PlotData {
    fn plot_rows(&self) -> Vec<PlotRow>;
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the header followed by one line per row.
pub fn emit_plotdata<W: Write>(rows: &[PlotRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{PLOTDATA_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.experiment, r.x, r.y, opt(r.stderr), opt(r.target))?;
    }
    Ok(())
}

impl PlotData for IdentityReport {
    fn plot_rows(&self) -> Vec<PlotRow> {
        vec![PlotRow::new(&self.name, self.d as f64, self.estimate).stderr(self.stderr).target(self.target)]
    }
}

impl PlotData for NormGrowthReport {
    fn plot_rows(&self) -> Vec<PlotRow> {
        self.rows
            .iter()
            .enumerate()
            .map(|(k, r)| PlotRow::new("norm_growth", (k + 1) as f64, r.estimate).stderr(r.stderr).target(r.target))
            .collect()
    }
}

impl PlotData for SpectrumReport {
    fn plot_rows(&self) -> Vec<PlotRow> {
        self.rows.iter().map(|r| PlotRow::new("spectrum", r.i as f64, r.computed).target(r.target)).collect()
    }
}

impl PlotData for Bound41Report {
    fn plot_rows(&self) -> Vec<PlotRow> {
        self.rows
            .iter()
            .map(|r| {
                let scale = r.rescaled / r.moment.mean;
                PlotRow::new("bound41_rescaled", r.d as f64, r.rescaled).stderr(r.moment.stderr * scale)
            })
            .collect()
    }
}

impl PlotData for BiReport {
    fn plot_rows(&self) -> Vec<PlotRow> {
        let mut rows = Vec::new();
        for r in &self.rows {
            let x = r.d as f64;
            rows.push(PlotRow::new("bi_aggregate", x, r.aggregate.mean).stderr(r.aggregate.stderr));
            rows.push(PlotRow::new("bi_next_category", x, r.next_category.mean).stderr(r.next_category.stderr));
            if let Some(s) = &r.aggregate_step {
                rows.push(PlotRow::new("bi_aggregate_step", x, s.mean).stderr(s.stderr));
            }
            if let Some(s) = &r.next_category_step {
                rows.push(PlotRow::new("bi_next_category_step", x, s.mean).stderr(s.stderr));
            }
        }
        rows
    }
}

impl PlotData for StationarityReport {
    fn plot_rows(&self) -> Vec<PlotRow> {
        let mut rows = vec![PlotRow::new("stationarity_statistic", self.t_end, self.statistic).target(self.threshold)];
        for m in &self.moments {
            let x = (m.coordinate * 10 + m.power as usize) as f64;
            rows.push(PlotRow::new("stationarity_moment", x, m.terminal).target(m.initial));
        }
        rows
    }
}

impl PlotData for MoscoReport {
    fn plot_rows(&self) -> Vec<PlotRow> {
        let name = format!("mosco_{}", self.function.name());
        vec![PlotRow::new(&name, 1.0, self.a_1), PlotRow::new(&name, 2.0, self.a_2)]
    }
}

impl PlotData for MoscoTrend {
    fn plot_rows(&self) -> Vec<PlotRow> {
        let name = format!("mosco_trend_{}", self.function.name());
        self.meshes
            .iter()
            .zip(&self.a_2)
            .map(|(&m, &a)| {
                let row = PlotRow::new(&name, 1.0 / m as f64, a);
                match self.extrapolated {
                    Some(t) => row.target(t),
                    None => row,
                }
            })
            .collect()
    }
}

impl<T: PlotData> PlotData for [T] {
    fn plot_rows(&self) -> Vec<PlotRow> {
        self.iter().flat_map(|r| r.plot_rows()).collect()
    }
}
