//! Command-line entry points.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::info;

use crate::config::{GammaSetting, RunConfig};
use crate::error::{Error, Result};
use crate::oracle;
use crate::report::{self, OracleReport, SeedComparison, Summary};
use crate::temporal::{self, SecondResult};
use crate::trajectory::{self, Archetype, ScenarioSpec};

#[derive(Debug, Parser)]
#[command(name = "vanet-moo", version, about = "Temporal-aware multi-objective relay optimization for V2V networks")]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize every second of a scenario and write metrics, fronts and plots.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated inheritance ratios; overrides the config.
        #[arg(long, value_delimiter = ',')]
        gamma: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate a tiny instance exactly and compare the search against it.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic trajectory CSV in the highD column layout.
    GenScenario {
        #[arg(long)]
        archetype: String,
        #[arg(long)]
        duration: u32,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 25)]
        fps: u32,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_usage() {
        2
    } else {
        1
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config, gamma, seed, out } => cmd_run(&config, gamma, seed, out),
        Command::Oracle { config, out } => cmd_oracle(&config, out),
        Command::GenScenario {
            archetype,
            duration,
            out,
            seed,
            fps,
        } => cmd_gen_scenario(&archetype, duration, &out, seed, fps),
    }
}

/// Subdirectory name of one gamma within a sweep.
pub fn gamma_dir(gamma: f64) -> String {
    format!("gamma_{gamma}")
}

pub fn cmd_run(config: &Path, gamma: Option<Vec<f64>>, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(g) = gamma {
        cfg.algorithm.gamma = GammaSetting::Sweep(g);
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    cfg.validate()?;
    let snapshots = cfg.snapshots()?;
    let gammas = cfg.gammas();
    let sweep = gammas.len() > 1;
    let mut all: Vec<(String, Vec<SecondResult>)> = Vec::new();
    let mut summaries = Vec::new();
    for (k, &g) in gammas.iter().enumerate() {
        let solver = temporal::SolverConfig {
            search_seed: temporal::sweep_seed(cfg.seed, k),
            ..cfg.solver(g)?
        };
        info!("running gamma {g} over {} seconds", snapshots.len());
        let results = temporal::run_scenario(&snapshots, &solver)?;
        let dir = if sweep {
            cfg.output_dir.join(gamma_dir(g))
        } else {
            cfg.output_dir.clone()
        };
        let label = format!("gamma = {g}");
        report::write_run(&dir, &results, &label)?;
        summaries.push(report::summarize(
            &results,
            g,
            solver.search_seed,
            cfg.algorithm.time_continuity_weight,
            dir,
        ));
        all.push((label, results));
    }
    let scenario = match (&cfg.scenario.trajectory, cfg.scenario.archetype) {
        (Some(p), _) => p.display().to_string(),
        (None, a) => a.unwrap_or(Archetype::Increasing).to_string(),
    };
    let summary = Summary {
        seed: cfg.seed,
        scenario,
        time_continuity_weight: cfg.algorithm.time_continuity_weight,
        runs: summaries,
    };
    let views: Vec<(String, &[SecondResult])> = all.iter().map(|(l, r)| (l.clone(), r.as_slice())).collect();
    report::write_summary(&cfg.output_dir, &summary, &views)?;
    for r in &summary.runs {
        println!(
            "gamma {:>4}: delay {:.4e} s, load var {:.3e}, sinr {:.3e}, f4 {:.3}, feasible {}/{} -> {}",
            r.gamma,
            r.mean_avg_delay_s,
            r.mean_load_variance,
            r.mean_avg_sinr,
            r.mean_path_stability,
            r.feasible_seconds,
            r.seconds,
            r.output_dir.display()
        );
    }
    Ok(())
}

pub fn cmd_oracle(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let instance = cfg.oracle_instance()?;
    let (evo, seeds) = cfg.oracle_params()?;
    let out = out.unwrap_or_else(|| cfg.output_dir.clone());
    let joint = instance.joint_count()?;
    info!("enumerating {joint} joint genomes");
    let front = oracle::enumerate_front(&instance)?;
    let exact: Vec<_> = front.iter().map(|p| p.objectives).collect();
    let mut per_seed = Vec::new();
    for &seed in &seeds {
        let search = oracle::search_front(&instance, evo.clone(), seed)?;
        let comparison = oracle::compare(&exact, &search)?;
        println!(
            "seed {seed}: {} search points, {} dominated, hypervolume ratio {:.4}",
            comparison.search_points, comparison.dominated, comparison.ratio
        );
        per_seed.push(SeedComparison { seed, comparison });
    }
    let report = OracleReport {
        joint_evaluations: joint,
        oracle_points: front.len(),
        oracle_feasible: exact.iter().all(|o| o.is_feasible()),
        max_dominated: per_seed.iter().map(|s| s.comparison.dominated).max().unwrap_or(0),
        min_ratio: per_seed.iter().map(|s| s.comparison.ratio).fold(f64::INFINITY, f64::min),
        seeds: per_seed,
    };
    report::write_oracle(&out, &front, &report)?;
    println!(
        "oracle: {} points from {joint} evaluations -> {}",
        front.len(),
        out.display()
    );
    Ok(())
}

pub fn cmd_gen_scenario(archetype: &str, duration: u32, out: &Path, seed: u64, fps: u32) -> Result<()> {
    let archetype: Archetype = archetype.parse()?;
    let spec = ScenarioSpec {
        frame_rate: fps,
        ..ScenarioSpec::for_archetype(archetype, duration, seed)
    };
    spec.validate()?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(out).map_err(|e| Error::io(out, e))?;
    trajectory::write_scenario_csv(&spec, BufWriter::new(file))?;
    println!("wrote {} ({archetype}, {duration} s)", out.display());
    Ok(())
}
