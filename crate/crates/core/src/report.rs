//! Output files of a run.
//!
//! Per run directory:
//! * `metrics.csv`: `second,n_vehicles,avg_delay_s,load_variance,avg_sinr,path_stability`
//!   where `avg_sinr` is linear and `path_stability` is the raw f4 of the
//!   second's representative (lower is more stable)
//! * `pareto_t<k>.csv`: `f1,f2,f3,f4,violation`, one row per rank-0 member
//! * `fronts.svg`, `metrics.svg`
//!
//! A `summary.json` with per-gamma aggregates sits at the top of the output
//! directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{Comparison, OraclePoint};
use crate::plot;
use crate::temporal::{FrontMember, SecondResult};

pub const METRICS_HEADER: [&str; 6] = [
    "second",
    "n_vehicles",
    "avg_delay_s",
    "load_variance",
    "avg_sinr",
    "path_stability",
];

pub const FRONT_HEADER: [&str; 5] = ["f1", "f2", "f3", "f4", "violation"];

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_metrics<W: Write>(results: &[SecondResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in results {
        let m = &r.metrics;
        w.write_record([
            r.second_index.to_string(),
            r.n_vehicles.to_string(),
            m.avg_delay_s.to_string(),
            m.load_variance.to_string(),
            m.avg_sinr.to_string(),
            m.path_stability.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("metrics", e))?;
    Ok(())
}

pub fn write_front<W: Write>(front: impl IntoIterator<Item = crate::objectives::ObjectiveVector>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FRONT_HEADER)?;
    for o in front {
        w.write_record([
            o.f1.to_string(),
            o.f2.to_string(),
            o.f3.to_string(),
            o.f4.to_string(),
            o.violation.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("front", e))?;
    Ok(())
}

fn front_objectives(front: &[FrontMember]) -> impl Iterator<Item = crate::objectives::ObjectiveVector> + '_ {
    front.iter().map(|m| m.objectives)
}

/// Aggregates of one run over all its seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub gamma: f64,
    pub search_seed: u64,
    pub output_dir: PathBuf,
    pub seconds: usize,
    pub mean_avg_delay_s: f64,
    pub mean_load_variance: f64,
    pub mean_avg_sinr: f64,
    /// Mean f4 over seconds after the first (the first has no predecessor).
    pub mean_path_stability: f64,
    /// `time_continuity_weight * mean_path_stability`; reporting only.
    pub weighted_path_stability: f64,
    pub mean_front_size: f64,
    /// Seconds whose representative satisfies every constraint.
    pub feasible_seconds: usize,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn summarize(results: &[SecondResult], gamma: f64, search_seed: u64, w_c: f64, output_dir: PathBuf) -> RunSummary {
    let stability = mean(results.iter().skip(1).map(|r| r.metrics.path_stability));
    RunSummary {
        gamma,
        search_seed,
        output_dir,
        seconds: results.len(),
        mean_avg_delay_s: mean(results.iter().map(|r| r.metrics.avg_delay_s)),
        mean_load_variance: mean(results.iter().map(|r| r.metrics.load_variance)),
        mean_avg_sinr: mean(results.iter().map(|r| r.metrics.avg_sinr)),
        mean_path_stability: stability,
        weighted_path_stability: w_c * stability,
        mean_front_size: mean(results.iter().map(|r| r.pareto_front.len() as f64)),
        feasible_seconds: results
            .iter()
            .filter(|r| r.representative().objectives.is_feasible())
            .count(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub scenario: String,
    pub time_continuity_weight: f64,
    pub runs: Vec<RunSummary>,
}

/// Writes metrics, per-second fronts and figures of one run into `dir`.
pub fn write_run(dir: &Path, results: &[SecondResult], label: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_metrics(results, create(&dir.join("metrics.csv"))?)?;
    for r in results {
        let path = dir.join(format!("pareto_t{}.csv", r.second_index));
        write_front(front_objectives(&r.pareto_front), create(&path)?)?;
    }
    write_text(&dir.join("fronts.svg"), &plot::front_svg(results, label))?;
    write_text(
        &dir.join("metrics.svg"),
        &plot::metrics_svg(&[(label.to_string(), results)]),
    )?;
    Ok(())
}

/// Writes `summary.json` and, for sweeps, a metrics figure overlaying every
/// gamma.
pub fn write_summary(dir: &Path, summary: &Summary, runs: &[(String, &[SecondResult])]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_text(&dir.join("summary.json"), &(serde_json::to_string_pretty(summary)? + "\n"))?;
    if runs.len() > 1 {
        write_text(&dir.join("metrics_comparison.svg"), &plot::metrics_svg(runs))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedComparison {
    pub seed: u64,
    #[serde(flatten)]
    pub comparison: Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub joint_evaluations: u128,
    pub oracle_points: usize,
    pub oracle_feasible: bool,
    pub seeds: Vec<SeedComparison>,
    pub max_dominated: usize,
    pub min_ratio: f64,
}

/// Writes `oracle_front.csv` and `oracle_report.json` into `dir`.
pub fn write_oracle(dir: &Path, front: &[OraclePoint], report: &OracleReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_front(front.iter().map(|p| p.objectives), create(&dir.join("oracle_front.csv"))?)?;
    write_text(&dir.join("oracle_report.json"), &(serde_json::to_string_pretty(report)? + "\n"))
}
