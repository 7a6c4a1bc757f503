//! Python bindings: scenario synthesis and loading, the channel model, the
//! Pareto utilities and the temporal solver.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use vanet_moo::channel;
use vanet_moo::evolution::{self, EvoParams};
use vanet_moo::objectives::ObjectiveVector;
use vanet_moo::{cli, oracle, temporal, trajectory};
use vanet_moo::{Archetype, Bounds, ChannelParams, Error, RunConfig, ScenarioSpec, SolverConfig, VehicleState};

/// `(f1, f2, f3, f4, violation)`
type Row = (f64, f64, f64, f64, f64);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Domain(_) | Error::BeyondReference { .. } => PyValueError::new_err(e.to_string()),
        e if e.is_usage() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

/// One second of traffic: vehicles as `(id, x, y, vx, vy)` tuples sorted by id.
#[pyclass(frozen, from_py_object, module = "vanetmoo")]
#[derive(Clone)]
struct Snapshot {
    inner: trajectory::Snapshot,
}

#[pymethods]
impl Snapshot {
    #[new]
    #[pyo3(signature = (second, vehicles, frame=0))]
    fn new(second: u32, vehicles: Vec<(u32, f64, f64, f64, f64)>, frame: i64) -> PyResult<Self> {
        let v = vehicles
            .into_iter()
            .map(|(id, x, y, vx, vy)| VehicleState::new(id, x, y, vx, vy))
            .collect();
        Ok(Snapshot {
            inner: trajectory::Snapshot::new(second, frame, v).map_err(py_err)?,
        })
    }

    #[getter]
    fn second(&self) -> u32 {
        self.inner.second_index
    }

    #[getter]
    fn frame(&self) -> i64 {
        self.inner.frame_index
    }

    #[getter]
    fn ids(&self) -> Vec<u32> {
        self.inner.ids().map(|i| i.0).collect()
    }

    fn vehicles(&self) -> Vec<(u32, f64, f64, f64, f64)> {
        self.inner
            .vehicles()
            .iter()
            .map(|v| (v.id.0, v.x, v.y, v.vx, v.vy))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Snapshot(second={}, vehicles={})", self.inner.second_index, self.inner.len())
    }
}

fn wrap(snaps: Vec<trajectory::Snapshot>) -> Vec<Snapshot> {
    snaps.into_iter().map(|inner| Snapshot { inner }).collect()
}

/// Synthetic highway scenario of one archetype: "increasing", "fluctuating"
/// or "decreasing".
#[pyfunction]
#[pyo3(signature = (archetype, duration_s=40, seed=1, frame_rate=25, initial_vehicles=None))]
fn synthesize_scenario(
    archetype: &str,
    duration_s: u32,
    seed: u64,
    frame_rate: u32,
    initial_vehicles: Option<u32>,
) -> PyResult<Vec<Snapshot>> {
    let a: Archetype = archetype.parse().map_err(py_err)?;
    let base = ScenarioSpec::for_archetype(a, duration_s, seed);
    let spec = ScenarioSpec {
        frame_rate,
        initial_vehicles: initial_vehicles.unwrap_or(base.initial_vehicles),
        ..base
    };
    trajectory::synthesize_scenario(&spec).map(wrap).map_err(py_err)
}

/// Per-second snapshots of a highD-style trajectory CSV.
#[pyfunction]
#[pyo3(signature = (path, frame_rate=25))]
fn load_trajectory(path: PathBuf, frame_rate: u32) -> PyResult<Vec<Snapshot>> {
    trajectory::load_trajectory(path, frame_rate).map(wrap).map_err(py_err)
}

/// Channel model parameters; unspecified fields keep their defaults.
#[pyclass(skip_from_py_object, module = "vanetmoo")]
struct Channel {
    inner: ChannelParams,
}

#[pymethods]
impl Channel {
    #[new]
    #[pyo3(signature = (carrier_hz=None, path_loss_exponent=None, shadow_sigma_db=None, bandwidth_hz=None, doppler_threshold_hz=None))]
    fn new(
        carrier_hz: Option<f64>,
        path_loss_exponent: Option<f64>,
        shadow_sigma_db: Option<f64>,
        bandwidth_hz: Option<f64>,
        doppler_threshold_hz: Option<f64>,
    ) -> PyResult<Self> {
        let d = ChannelParams::default();
        let inner = ChannelParams {
            carrier_hz: carrier_hz.unwrap_or(d.carrier_hz),
            path_loss_exponent: path_loss_exponent.unwrap_or(d.path_loss_exponent),
            shadow_sigma_db: shadow_sigma_db.unwrap_or(d.shadow_sigma_db),
            bandwidth_hz: bandwidth_hz.unwrap_or(d.bandwidth_hz),
            doppler_threshold_hz: doppler_threshold_hz.unwrap_or(d.doppler_threshold_hz),
            ..d
        };
        inner.validate().map_err(py_err)?;
        Ok(Channel { inner })
    }

    fn path_loss_db(&self, distance_m: f64) -> PyResult<f64> {
        channel::path_loss_db(distance_m, &self.inner).map_err(py_err)
    }

    fn doppler_factor(&self, relative_speed: f64) -> f64 {
        channel::doppler_factor(relative_speed, &self.inner)
    }

    /// Received power in watts.
    #[pyo3(signature = (transmit_w, distance_m, relative_speed=0.0, shadow_db=0.0))]
    fn received_power(&self, transmit_w: f64, distance_m: f64, relative_speed: f64, shadow_db: f64) -> PyResult<f64> {
        channel::received_power(transmit_w, distance_m, relative_speed, shadow_db, &self.inner).map_err(py_err)
    }

    fn thermal_noise(&self) -> f64 {
        channel::thermal_noise(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

fn objective_vectors(objectives: Vec<Vec<f64>>, violations: Option<Vec<f64>>) -> PyResult<Vec<ObjectiveVector>> {
    let violations = violations.unwrap_or_else(|| vec![0.0; objectives.len()]);
    if violations.len() != objectives.len() {
        return Err(PyValueError::new_err("violations must match objectives in length"));
    }
    objectives
        .into_iter()
        .zip(violations)
        .map(|(o, v)| {
            let f: [f64; 4] = o
                .try_into()
                .map_err(|o: Vec<f64>| PyValueError::new_err(format!("expected 4 objectives, got {}", o.len())))?;
            Ok(ObjectiveVector::new(f, v))
        })
        .collect()
}

/// Fronts of indices under feasibility-first dominance, best first.
#[pyfunction]
#[pyo3(signature = (objectives, violations=None))]
fn non_dominated_sort(objectives: Vec<Vec<f64>>, violations: Option<Vec<f64>>) -> PyResult<Vec<Vec<usize>>> {
    Ok(evolution::non_dominated_sort(&objective_vectors(objectives, violations)?))
}

#[pyfunction]
fn crowding_distance(front: Vec<Vec<f64>>) -> Vec<f64> {
    evolution::crowding_distance(&front)
}

/// Exact hypervolume (minimization) of `points` against `reference`.
#[pyfunction]
fn hypervolume(points: Vec<Vec<f64>>, reference: Vec<f64>) -> PyResult<f64> {
    oracle::hypervolume(&points, &reference).map_err(py_err)
}

/// Outcome of one optimized second.
#[pyclass(frozen, module = "vanetmoo")]
struct SecondResult {
    inner: temporal::SecondResult,
}

#[pymethods]
impl SecondResult {
    #[getter]
    fn second(&self) -> u32 {
        self.inner.second_index
    }

    #[getter]
    fn n_vehicles(&self) -> usize {
        self.inner.n_vehicles
    }

    /// `(avg_delay_s, load_variance, avg_sinr, path_stability)`
    #[getter]
    fn metrics(&self) -> (f64, f64, f64, f64) {
        let m = &self.inner.metrics;
        (m.avg_delay_s, m.load_variance, m.avg_sinr, m.path_stability)
    }

    /// Front members as `(f1, f2, f3, f4, violation)`.
    #[getter]
    fn front(&self) -> Vec<Row> {
        self.inner
            .pareto_front
            .iter()
            .map(|m| {
                let o = m.objectives;
                (o.f1, o.f2, o.f3, o.f4, o.violation)
            })
            .collect()
    }

    #[getter]
    fn representative_index(&self) -> usize {
        self.inner.representative_index
    }

    /// Genes of the representative: `{id: (block_bits, power_mw, [relay ids])}`.
    fn representative_genes(&self) -> Vec<(u32, f64, f64, Vec<u32>)> {
        let g = &self.inner.representative().genome;
        g.roster
            .iter()
            .zip(&g.blocks)
            .map(|(id, b)| (id.0, b.s_b, b.p_n, b.relays.iter().map(|r| r.0).collect()))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "SecondResult(second={}, vehicles={}, front={})",
            self.inner.second_index,
            self.inner.n_vehicles,
            self.inner.pareto_front.len()
        )
    }
}

/// Optimizes every snapshot in order, inheriting a `gamma` share of each
/// initial population from the previous second.
#[pyfunction]
#[pyo3(signature = (snapshots, gamma=0.3, seed=0, population=100, generations=20, hops=3))]
fn run_scenario(
    py: Python<'_>,
    snapshots: Vec<Snapshot>,
    gamma: f64,
    seed: u64,
    population: usize,
    generations: usize,
    hops: usize,
) -> PyResult<Vec<SecondResult>> {
    let config = SolverConfig {
        gamma,
        channel_seed: seed,
        search_seed: seed,
        evo: EvoParams {
            pop_size: population,
            max_generations: generations,
            ..EvoParams::default()
        },
        bounds: Bounds {
            hops,
            ..Bounds::default()
        },
        ..SolverConfig::default()
    };
    let snaps: Vec<trajectory::Snapshot> = snapshots.into_iter().map(|s| s.inner).collect();
    let results = py
        .detach(|| temporal::run_scenario(&snaps, &config))
        .map_err(py_err)?;
    Ok(results.into_iter().map(|inner| SecondResult { inner }).collect())
}

/// Runs a TOML or JSON config file exactly like `vanet-moo run`.
#[pyfunction]
#[pyo3(signature = (config, gamma=None, seed=None, out=None))]
fn run_config(
    py: Python<'_>,
    config: PathBuf,
    gamma: Option<Vec<f64>>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> PyResult<()> {
    py.detach(|| cli::cmd_run(&config, gamma, seed, out)).map_err(py_err)
}

/// The parsed config as a JSON string.
#[pyfunction]
fn load_config(path: PathBuf) -> PyResult<String> {
    let cfg = RunConfig::load(path).map_err(py_err)?;
    cfg.validate().map_err(py_err)?;
    cfg.to_json().map_err(py_err)
}

/// Exact front of the config's tiny instance as `(f1, f2, f3, f4, violation)`.
#[pyfunction]
fn oracle_front(py: Python<'_>, config: PathBuf) -> PyResult<Vec<Row>> {
    let cfg = RunConfig::load(config).map_err(py_err)?;
    let instance = cfg.oracle_instance().map_err(py_err)?;
    let front = py.detach(|| oracle::enumerate_front(&instance)).map_err(py_err)?;
    Ok(front
        .iter()
        .map(|p| {
            let o = p.objectives;
            (o.f1, o.f2, o.f3, o.f4, o.violation)
        })
        .collect())
}

#[pymodule]
fn vanetmoo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Snapshot>()?;
    m.add_class::<Channel>()?;
    m.add_class::<SecondResult>()?;
    m.add_function(wrap_pyfunction!(synthesize_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(load_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(non_dominated_sort, m)?)?;
    m.add_function(wrap_pyfunction!(crowding_distance, m)?)?;
    m.add_function(wrap_pyfunction!(hypervolume, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(load_config, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_front, m)?)?;
    Ok(())
}
