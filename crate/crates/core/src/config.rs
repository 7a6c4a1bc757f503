//! Run configuration as written by people (TOML or JSON, human units) and
//! its conversion into the unit-consistent core types.
//!
//! ```toml
//! seed = 42
//!
//! [scenario]
//! archetype = "increasing"
//! duration_s = 40
//!
//! [algorithm]
//! gamma = [0.0, 0.3, 0.5, 0.8]
//!
//! [qos]
//! min_sinr_db = 10.0
//! max_delay_ms = 100.0
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelParams};
use crate::encoding::{Bounds, GeneBlock, GeneGrid, Genome};
use crate::error::{Error, Result};
use crate::evolution::EvoParams;
use crate::objectives::QosThresholds;
use crate::oracle::TinyInstance;
use crate::temporal::SolverConfig;
use crate::trajectory::{self, Archetype, ScenarioSpec, Snapshot, VehicleId, VehicleState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Base seed of every random stream; there is no wall-clock seeding.
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub algorithm: AlgorithmSection,
    #[serde(default)]
    pub qos: QosSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Either a recorded trajectory file or a synthetic archetype.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archetype: Option<Archetype>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_rate: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub road_length_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lane_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_vehicles: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub departure_rate: Option<f64>,
    /// Seed of the synthetic scene; defaults to the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

const DEFAULT_DURATION_S: u32 = 40;
const DEFAULT_FRAME_RATE: u32 = 25;

/// Where the snapshots of a run come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSource {
    Trajectory { path: PathBuf, frame_rate: u32 },
    Synthetic(ScenarioSpec),
}

impl ScenarioSection {
    pub fn resolve(&self, run_seed: u64) -> Result<ScenarioSource> {
        let frame_rate = self.frame_rate.unwrap_or(DEFAULT_FRAME_RATE);
        match (&self.trajectory, self.archetype) {
            (Some(_), Some(_)) => Err(Error::config(
                "scenario",
                "set either `trajectory` or `archetype`, not both",
            )),
            (Some(path), None) => {
                if frame_rate == 0 {
                    return Err(Error::config("scenario.frame_rate", "must be at least 1"));
                }
                Ok(ScenarioSource::Trajectory {
                    path: path.clone(),
                    frame_rate,
                })
            }
            (None, archetype) => {
                let base = ScenarioSpec::for_archetype(
                    archetype.unwrap_or(Archetype::Increasing),
                    self.duration_s.unwrap_or(DEFAULT_DURATION_S),
                    self.seed.unwrap_or(run_seed),
                );
                let spec = ScenarioSpec {
                    frame_rate,
                    road_length_m: self.road_length_m.unwrap_or(base.road_length_m),
                    lane_count: self.lane_count.unwrap_or(base.lane_count),
                    initial_vehicles: self.initial_vehicles.unwrap_or(base.initial_vehicles),
                    arrival_rate: self.arrival_rate.unwrap_or(base.arrival_rate),
                    departure_rate: self.departure_rate.unwrap_or(base.departure_rate),
                    ..base
                };
                spec.validate()?;
                Ok(ScenarioSource::Synthetic(spec))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSection {
    /// Data block size range, bits.
    pub s_b_bits: [f64; 2],
    /// Node power range, milliwatts.
    pub p_n_mw: [f64; 2],
    pub hops: usize,
    pub d_max_m: f64,
}

impl Default for BoundsSection {
    fn default() -> Self {
        let b = Bounds::default();
        BoundsSection {
            s_b_bits: [b.s_b_min, b.s_b_max],
            p_n_mw: [b.p_n_min, b.p_n_max],
            hops: b.hops,
            d_max_m: b.d_max,
        }
    }
}

impl BoundsSection {
    pub fn to_bounds(&self) -> Bounds {
        Bounds {
            s_b_min: self.s_b_bits[0],
            s_b_max: self.s_b_bits[1],
            p_n_min: self.p_n_mw[0],
            p_n_max: self.p_n_mw[1],
            hops: self.hops,
            d_max: self.d_max_m,
            grid: None,
        }
    }
}

/// One inheritance ratio or a sweep over several.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSetting {
    One(f64),
    Sweep(Vec<f64>),
}

impl GammaSetting {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GammaSetting::One(g) => vec![*g],
            GammaSetting::Sweep(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmSection {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub eta_c: f64,
    pub eta_m: f64,
    pub tournament_size: usize,
    pub gamma: GammaSetting,
    /// Weight applied to mean f4 in the summary; never used for sorting.
    pub time_continuity_weight: f64,
}

impl Default for AlgorithmSection {
    fn default() -> Self {
        let e = EvoParams::default();
        AlgorithmSection {
            population: e.pop_size,
            generations: e.max_generations,
            crossover_rate: e.p_crossover,
            mutation_rate: e.p_mutation,
            eta_c: e.eta_c,
            eta_m: e.eta_m,
            tournament_size: e.tournament_size,
            gamma: GammaSetting::One(0.3),
            time_continuity_weight: 0.3,
        }
    }
}

impl AlgorithmSection {
    pub fn to_params(&self) -> EvoParams {
        EvoParams {
            pop_size: self.population,
            max_generations: self.generations,
            p_crossover: self.crossover_rate,
            p_mutation: self.mutation_rate,
            eta_c: self.eta_c,
            eta_m: self.eta_m,
            tournament_size: self.tournament_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QosSection {
    pub min_rx_power_dbm: f64,
    pub min_sinr_db: f64,
    pub max_delay_ms: f64,
}

impl Default for QosSection {
    fn default() -> Self {
        QosSection {
            min_rx_power_dbm: -90.0,
            min_sinr_db: 10.0,
            max_delay_ms: 100.0,
        }
    }
}

impl QosSection {
    pub fn to_thresholds(&self) -> Result<QosThresholds> {
        for (field, v) in [
            ("qos.min_rx_power_dbm", self.min_rx_power_dbm),
            ("qos.min_sinr_db", self.min_sinr_db),
        ] {
            if !v.is_finite() {
                return Err(Error::config(field, "must be finite"));
            }
        }
        if !(self.max_delay_ms.is_finite() && self.max_delay_ms > 0.0) {
            return Err(Error::config("qos.max_delay_ms", "must be positive"));
        }
        Ok(QosThresholds {
            min_rx_power_w: channel::from_db(self.min_rx_power_dbm) / 1000.0,
            min_sinr: channel::from_db(self.min_sinr_db),
            max_delay_s: self.max_delay_ms / 1000.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub vehicles: Vec<VehicleState>,
    #[serde(default = "one")]
    pub hops: usize,
    pub s_b_grid_bits: Vec<f64>,
    pub p_n_grid_mw: Vec<f64>,
    /// Relay ids of the f4 anchor, one list per vehicle in `vehicles` order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub previous_relays: Option<Vec<Vec<u32>>>,
    #[serde(default = "oracle_population")]
    pub population: usize,
    #[serde(default = "oracle_generations")]
    pub generations: usize,
    #[serde(default = "oracle_seeds")]
    pub seeds: Vec<u64>,
}

fn one() -> usize {
    1
}

fn oracle_population() -> usize {
    200
}

fn oracle_generations() -> usize {
    200
}

fn oracle_seeds() -> Vec<u64> {
    (0..5).collect()
}

impl RunConfig {
    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        // relative trajectory paths are relative to the config file
        if let (Some(t), Some(dir)) = (&cfg.scenario.trajectory, path.parent()) {
            if t.is_relative() {
                cfg.scenario.trajectory = Some(dir.join(t));
            }
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let field = e.span().map_or_else(|| "config".to_string(), |s| locate(text, s.start));
            Error::config(field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.algorithm.gamma.values()
    }

    /// Checks every section; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let gammas = self.gammas();
        if gammas.is_empty() {
            return Err(Error::config("algorithm.gamma", "needs at least one value"));
        }
        for g in gammas {
            self.solver(g)?.validate()?;
        }
        let w = self.algorithm.time_continuity_weight;
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::config("algorithm.time_continuity_weight", "must be non-negative"));
        }
        self.scenario.resolve(self.seed)?;
        if self.oracle.is_some() {
            self.oracle_instance()?.validate()?;
        }
        Ok(())
    }

    /// Core solver settings for one inheritance ratio.
    pub fn solver(&self, gamma: f64) -> Result<SolverConfig> {
        Ok(SolverConfig {
            channel: self.channel.clone(),
            bounds: self.bounds.to_bounds(),
            evo: self.algorithm.to_params(),
            thresholds: self.qos.to_thresholds()?,
            gamma,
            channel_seed: self.seed,
            search_seed: self.seed,
        })
    }

    pub fn snapshots(&self) -> Result<Vec<Snapshot>> {
        match self.scenario.resolve(self.seed)? {
            ScenarioSource::Trajectory { path, frame_rate } => trajectory::load_trajectory(path, frame_rate),
            ScenarioSource::Synthetic(spec) => trajectory::synthesize_scenario(&spec),
        }
    }

    /// The tiny instance described by the `[oracle]` section.
    pub fn oracle_instance(&self) -> Result<TinyInstance> {
        let o = self
            .oracle
            .as_ref()
            .ok_or_else(|| Error::config("oracle", "section missing"))?;
        if o.vehicles.is_empty() {
            return Err(Error::config("oracle.vehicles", "needs at least one vehicle"));
        }
        let snapshot = Snapshot::new(1, 0, o.vehicles.clone()).map_err(|e| Error::config("oracle.vehicles", e.to_string()))?;
        let bounds = Bounds {
            hops: o.hops,
            grid: Some(GeneGrid {
                s_b: o.s_b_grid_bits.clone(),
                p_n: o.p_n_grid_mw.clone(),
            }),
            ..self.bounds.to_bounds()
        };
        let previous = match &o.previous_relays {
            None => None,
            Some(relays) => {
                if relays.len() != o.vehicles.len() {
                    return Err(Error::config(
                        "oracle.previous_relays",
                        format!("needs one list per vehicle ({}), got {}", o.vehicles.len(), relays.len()),
                    ));
                }
                // pair with vehicles before the snapshot reorders by id
                let mut pairs: Vec<(VehicleId, &Vec<u32>)> = o.vehicles.iter().map(|v| v.id).zip(relays).collect();
                pairs.sort_by_key(|(id, _)| *id);
                Some(Genome {
                    roster: pairs.iter().map(|(id, _)| *id).collect(),
                    blocks: pairs
                        .iter()
                        .map(|(_, r)| GeneBlock {
                            s_b: bounds.s_b_min,
                            p_n: bounds.p_n_min,
                            relays: r.iter().map(|&id| VehicleId(id)).collect(),
                        })
                        .collect(),
                })
            }
        };
        let instance = TinyInstance {
            snapshot,
            channel: self.channel.clone(),
            bounds,
            thresholds: self.qos.to_thresholds()?,
            channel_seed: self.seed,
            previous,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn oracle_params(&self) -> Result<(EvoParams, Vec<u64>)> {
        let o = self
            .oracle
            .as_ref()
            .ok_or_else(|| Error::config("oracle", "section missing"))?;
        let evo = EvoParams {
            pop_size: o.population,
            max_generations: o.generations,
            ..self.algorithm.to_params()
        };
        evo.validate().map_err(|e| match e {
            Error::Config { field, message } => Error::Config {
                field: field.replace("algorithm.", "oracle."),
                message,
            },
            other => other,
        })?;
        if o.seeds.is_empty() {
            return Err(Error::config("oracle.seeds", "needs at least one seed"));
        }
        Ok((evo, o.seeds.clone()))
    }
}

/// Dotted path of the TOML key at or before `offset`, best effort.
fn locate(text: &str, offset: usize) -> String {
    let before = &text[..offset.min(text.len())];
    let mut table = String::new();
    for line in before.lines() {
        let t = line.trim();
        if t.starts_with('[') && !t.starts_with("[[") {
            table = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        }
    }
    let line = text[before.rfind('\n').map_or(0, |i| i + 1)..]
        .lines()
        .next()
        .unwrap_or("");
    let key = line.split('=').next().unwrap_or("").trim();
    match (table.is_empty(), key.is_empty() || key.starts_with('[')) {
        (true, true) => "config".into(),
        (true, false) => key.into(),
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}
