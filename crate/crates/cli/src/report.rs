//! Run reports and their JSON, CSV and plot-data renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const CSV_HEADER: [&str; 16] = [
    "process",
    "lower_boundary",
    "upper_boundary",
    "horizon",
    "n",
    "paths",
    "seed",
    "series_terms",
    "envelope_samples",
    "mean",
    "std_error",
    "lower",
    "upper",
    "bracket_width",
    "timing_ms",
    "version",
];

/// A process parameter as given on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Number(f64),
    Expr(String),
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub process: String,
    pub parameters: BTreeMap<String, Param>,
    pub lower_boundary: String,
    pub upper_boundary: String,
    pub horizon: f64,
    pub n: usize,
    pub paths: u64,
    pub seed: u64,
    pub series_terms: usize,
    pub envelope_samples: usize,
    pub antithetic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub mean: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
    pub bracket_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub request: Request,
    pub results: Results,
    pub timing_ms: f64,
    pub version: String,
}

/// Sampled `(t, value)` pairs of one boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// A finished run: the report plus boundary samples for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub report: RunReport,
    pub curves: Vec<Curve>,
}

pub fn emit_json(reports: &[&RunReport]) -> String {
    let text = match reports {
        [one] => serde_json::to_string_pretty(one),
        many => serde_json::to_string_pretty(many),
    };
    text.expect("reports contain only plain data") + "\n"
}

pub fn emit_csv(reports: &[&RunReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("writing to memory");
    for r in reports {
        let q = &r.request;
        let s = &r.results;
        w.write_record([
            q.process.clone(),
            q.lower_boundary.clone(),
            q.upper_boundary.clone(),
            q.horizon.to_string(),
            q.n.to_string(),
            q.paths.to_string(),
            q.seed.to_string(),
            q.series_terms.to_string(),
            q.envelope_samples.to_string(),
            s.mean.to_string(),
            s.std_error.to_string(),
            s.lower.to_string(),
            s.upper.to_string(),
            s.bracket_width.to_string(),
            r.timing_ms.to_string(),
            r.version.clone(),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is utf-8")
}

/// Blocks of `t,value` rows, each headed by `# series: <name>` and separated by a blank line.
pub fn emit_plot_data(runs: &[&Run]) -> String {
    let mut out = String::new();
    for run in runs {
        for c in &run.curves {
            if !out.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(out, "# series: {}", c.name);
            out.push_str("t,value\n");
            for (t, v) in &c.points {
                let _ = writeln!(out, "{t},{v}");
            }
        }
    }
    out
}
