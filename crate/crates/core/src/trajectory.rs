//! Vehicle snapshots: highD-style CSV ingestion and a synthetic highway
//! generator.
//!
//! A run consumes one [`Snapshot`] per second. Each snapshot is the state of
//! the scene at the middle frame of that second.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: VehicleId,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl VehicleState {
    pub fn new(id: u32, x: f64, y: f64, vx: f64, vy: f64) -> Self {
        VehicleState {
            id: VehicleId(id),
            x,
            y,
            vx,
            vy,
        }
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

/// Planar Euclidean distance in meters.
pub fn distance(a: &VehicleState, b: &VehicleState) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Magnitude of the velocity difference in m/s.
pub fn relative_speed(a: &VehicleState, b: &VehicleState) -> f64 {
    (a.vx - b.vx).hypot(a.vy - b.vy)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub second_index: u32,
    pub frame_index: i64,
    vehicles: Vec<VehicleState>,
}

impl Snapshot {
    /// Builds a snapshot, sorting vehicles by id. Duplicate ids, non-finite
    /// kinematics and empty rosters are rejected.
    pub fn new(second_index: u32, frame_index: i64, mut vehicles: Vec<VehicleState>) -> Result<Self> {
        if vehicles.is_empty() {
            return Err(Error::EmptySecond {
                second: second_index,
                frame: frame_index,
            });
        }
        vehicles.sort_by_key(|v| v.id);
        for w in vehicles.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::Domain(format!(
                    "vehicle {} appears twice in frame {frame_index}",
                    w[0].id
                )));
            }
        }
        if let Some(v) = vehicles
            .iter()
            .find(|v| ![v.x, v.y, v.vx, v.vy].iter().all(|c| c.is_finite()))
        {
            return Err(Error::Domain(format!("vehicle {} has non-finite state", v.id)));
        }
        Ok(Snapshot {
            second_index,
            frame_index,
            vehicles,
        })
    }

    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    pub fn len(&self) -> usize {
        self.vehicles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.vehicles.iter().map(|v| v.id)
    }

    pub fn index_of(&self, id: VehicleId) -> Option<usize> {
        self.vehicles.binary_search_by_key(&id, |v| v.id).ok()
    }

    pub fn get(&self, id: VehicleId) -> Option<&VehicleState> {
        self.index_of(id).map(|i| &self.vehicles[i])
    }
}

/// Frame (1-based within the second) used as the representative state:
/// the median of `1..=frame_rate`, rounded up.
pub fn middle_frame_offset(frame_rate: u32) -> i64 {
    i64::from(frame_rate.div_ceil(2))
}

const COLUMNS: [&str; 6] = ["frame", "id", "x", "y", "xVelocity", "yVelocity"];

/// Reads a highD-formatted trajectory CSV and returns one snapshot per whole
/// second. Extra columns are ignored.
pub fn load_trajectory(path: impl AsRef<Path>, frame_rate: u32) -> Result<Vec<Snapshot>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_trajectory(file, frame_rate)
}

pub fn read_trajectory<R: Read>(reader: R, frame_rate: u32) -> Result<Vec<Snapshot>> {
    if frame_rate == 0 {
        return Err(Error::config("frame_rate", "must be at least 1"));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut cols = [0usize; 6];
    for (slot, name) in cols.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or(Error::MissingColumn { column: name })?;
    }

    let mut frames: BTreeMap<i64, Vec<VehicleState>> = BTreeMap::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let field = |k: usize| record.get(cols[k]).unwrap_or("");
        let bad = |k: usize| Error::BadRow {
            row: row + 1,
            message: format!("cannot parse `{}` value {:?}", COLUMNS[k], field(k)),
        };
        let frame: i64 = field(0).parse().map_err(|_| bad(0))?;
        let id: u32 = field(1).parse().map_err(|_| bad(1))?;
        let mut vals = [0.0f64; 4];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = field(k + 2).parse().map_err(|_| bad(k + 2))?;
        }
        frames
            .entry(frame)
            .or_default()
            .push(VehicleState::new(id, vals[0], vals[1], vals[2], vals[3]));
    }

    let (&first, _) = frames.first_key_value().ok_or(Error::EmptyTrajectory)?;
    let (&last, _) = frames.last_key_value().ok_or(Error::EmptyTrajectory)?;
    let fps = i64::from(frame_rate);
    let seconds = (last - first + 1) / fps;
    if seconds == 0 {
        return Err(Error::EmptyTrajectory);
    }

    (1..=seconds)
        .map(|s| {
            let second = s as u32;
            let frame = first + (s - 1) * fps + middle_frame_offset(frame_rate) - 1;
            let vehicles = frames.remove(&frame).unwrap_or_default();
            Snapshot::new(second, frame, vehicles)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Archetype {
    Increasing,
    Fluctuating,
    Decreasing,
}

impl Archetype {
    pub const ALL: [Archetype; 3] = [
        Archetype::Increasing,
        Archetype::Fluctuating,
        Archetype::Decreasing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Archetype::Increasing => "increasing",
            Archetype::Fluctuating => "fluctuating",
            Archetype::Decreasing => "decreasing",
        }
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Archetype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Archetype::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "archetype",
                    format!("unknown archetype {s:?}; valid names: increasing, fluctuating, decreasing"),
                )
            })
    }
}

/// Parameters of a synthetic highway scene.
///
/// Vehicles follow their lane at constant speed on a periodic stretch of
/// road; the roster changes only through Poisson arrivals and departures at
/// second boundaries. For the fluctuating archetype the two rates swap every
/// quarter of the duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub archetype: Archetype,
    pub duration_s: u32,
    pub road_length_m: f64,
    pub lane_count: u32,
    pub initial_vehicles: u32,
    /// Expected arrivals per second.
    pub arrival_rate: f64,
    /// Expected departures per second.
    pub departure_rate: f64,
    pub frame_rate: u32,
    pub rng_seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec::for_archetype(Archetype::Increasing, 40, 1)
    }
}

impl ScenarioSpec {
    /// Defaults reproducing the vehicle-count curves of the three reference
    /// scenes (roughly 10 to 20+, fluctuating around 15, and 24 down to ~12).
    pub fn for_archetype(archetype: Archetype, duration_s: u32, rng_seed: u64) -> Self {
        let (initial_vehicles, arrival_rate, departure_rate) = match archetype {
            Archetype::Increasing => (10, 0.5, 0.15),
            Archetype::Fluctuating => (15, 0.6, 0.15),
            Archetype::Decreasing => (24, 0.1, 0.4),
        };
        ScenarioSpec {
            archetype,
            duration_s,
            road_length_m: 480.0,
            lane_count: 6,
            initial_vehicles,
            arrival_rate,
            departure_rate,
            frame_rate: 25,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration_s < 2 {
            return Err(Error::config("scenario.duration_s", "must be at least 2 seconds"));
        }
        if !(self.road_length_m.is_finite() && self.road_length_m > 0.0) {
            return Err(Error::config("scenario.road_length_m", "must be positive"));
        }
        if self.lane_count == 0 {
            return Err(Error::config("scenario.lane_count", "must be at least 1"));
        }
        if self.initial_vehicles == 0 {
            return Err(Error::config("scenario.initial_vehicles", "must be at least 1"));
        }
        for (field, rate) in [
            ("scenario.arrival_rate", self.arrival_rate),
            ("scenario.departure_rate", self.departure_rate),
        ] {
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(Error::config(field, "must be a non-negative rate"));
            }
        }
        if self.frame_rate == 0 {
            return Err(Error::config("scenario.frame_rate", "must be at least 1"));
        }
        Ok(())
    }

    fn phase_length(&self) -> u32 {
        (self.duration_s / 4).max(1)
    }

    /// Arrival and departure rates for the transition into second `s`.
    fn rates(&self, s: u32) -> (f64, f64) {
        match self.archetype {
            Archetype::Fluctuating if ((s - 2) / self.phase_length()) % 2 == 1 => {
                (self.departure_rate, self.arrival_rate)
            }
            _ => (self.arrival_rate, self.departure_rate),
        }
    }
}

#[derive(Debug, Clone)]
struct Track {
    id: u32,
    x0: f64,
    y: f64,
    vx: f64,
    t0: f64,
}

impl Track {
    fn state_at(&self, t: f64, road_length: f64) -> VehicleState {
        let x = (self.x0 + self.vx * (t - self.t0)).rem_euclid(road_length);
        VehicleState::new(self.id, x, self.y, self.vx, 0.0)
    }
}

const LANE_WIDTH_M: f64 = 3.75;
const MEDIAN_WIDTH_M: f64 = 4.0;

fn new_track(spec: &ScenarioSpec, id: u32, t0: f64, at_entry: bool, rng: &mut impl Rng) -> Track {
    let lane = rng.random_range(0..spec.lane_count);
    let forward_lanes = spec.lane_count.div_ceil(2);
    let forward = lane < forward_lanes;
    let lane_in_dir = if forward { lane } else { lane - forward_lanes };
    let speed = 22.0 + 4.0 * f64::from(lane_in_dir) + rng.random_range(-2.0..2.0);
    let y = f64::from(lane) * LANE_WIDTH_M
        + LANE_WIDTH_M / 2.0
        + if forward { 0.0 } else { MEDIAN_WIDTH_M };
    let x0 = if at_entry {
        // entered somewhere within the preceding second
        let travelled = speed * rng.random::<f64>();
        if forward {
            travelled
        } else {
            spec.road_length_m - travelled
        }
    } else {
        rng.random_range(0.0..spec.road_length_m)
    };
    let vx = if forward { speed } else { -speed };
    Track { id, x0, y, vx, t0 }
}

fn poisson(rate: f64, rng: &mut impl Rng) -> usize {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).map(|d| d.sample(rng) as usize).unwrap_or(0)
}

/// Per-second rosters of the synthetic scene.
fn simulate(spec: &ScenarioSpec) -> Vec<Vec<Track>> {
    let mut rng = rng::stream(spec.rng_seed, Role::Scenario, &[]);
    let mut next_id = 1u32;
    let mut active: Vec<Track> = (0..spec.initial_vehicles)
        .map(|_| {
            let t = new_track(spec, next_id, 0.0, false, &mut rng);
            next_id += 1;
            t
        })
        .collect();

    let mut rosters = vec![active.clone()];
    for s in 2..=spec.duration_s {
        let (arrival_rate, departure_rate) = spec.rates(s);
        let mut arrivals = poisson(arrival_rate, &mut rng);
        let mut departures = poisson(departure_rate, &mut rng);

        if spec.archetype == Archetype::Fluctuating && (s - 2) % spec.phase_length() == 0 {
            // the first transition of every phase moves in the phase's direction
            let rising = arrival_rate >= departure_rate;
            if rising && arrivals <= departures {
                arrivals = departures + 1;
            } else if !rising && departures <= arrivals && active.len() > 1 {
                arrivals = 0;
                departures = departures.max(1);
            }
        }

        let departures = departures.min(active.len() - 1);
        if departures > 0 {
            let mut leaving = index::sample(&mut rng, active.len(), departures).into_vec();
            leaving.sort_unstable_by(|a, b| b.cmp(a));
            for i in leaving {
                active.remove(i);
            }
        }
        let t0 = f64::from(s - 1);
        for _ in 0..arrivals {
            active.push(new_track(spec, next_id, t0, true, &mut rng));
            next_id += 1;
        }
        rosters.push(active.clone());
    }
    rosters
}

fn frame_time(frame: i64, frame_rate: u32) -> f64 {
    (frame - 1) as f64 / f64::from(frame_rate)
}

/// Generates the scene described by `spec`, one snapshot per second.
/// Output is a pure function of `spec` (including its seed).
pub fn synthesize_scenario(spec: &ScenarioSpec) -> Result<Vec<Snapshot>> {
    spec.validate()?;
    let fps = i64::from(spec.frame_rate);
    simulate(spec)
        .iter()
        .enumerate()
        .map(|(k, roster)| {
            let second = k as u32 + 1;
            let frame = (second as i64 - 1) * fps + middle_frame_offset(spec.frame_rate);
            let t = frame_time(frame, spec.frame_rate);
            let vehicles = roster
                .iter()
                .map(|tr| tr.state_at(t, spec.road_length_m))
                .collect();
            Snapshot::new(second, frame, vehicles)
        })
        .collect()
}

/// Writes every frame of the synthetic scene in the highD column layout.
pub fn write_scenario_csv<W: Write>(spec: &ScenarioSpec, writer: W) -> Result<()> {
    spec.validate()?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(COLUMNS)?;
    let fps = i64::from(spec.frame_rate);
    for (k, roster) in simulate(spec).iter().enumerate() {
        let mut roster = roster.clone();
        roster.sort_by_key(|t| t.id);
        for f in 1..=fps {
            let frame = k as i64 * fps + f;
            let t = frame_time(frame, spec.frame_rate);
            for tr in &roster {
                let v = tr.state_at(t, spec.road_length_m);
                w.write_record(&[
                    frame.to_string(),
                    v.id.to_string(),
                    v.x.to_string(),
                    v.y.to_string(),
                    v.vx.to_string(),
                    v.vy.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
