//! Per-second precomputation shared by every genome evaluated in that second.

use crate::channel::{self, ChannelParams, ShadowField};
use crate::error::Result;
use crate::trajectory::{distance, relative_speed, Snapshot, VehicleId};

/// Pairwise distances and range-limited neighbor lists of one snapshot.
#[derive(Debug, Clone)]
pub struct Geometry {
    ids: Vec<VehicleId>,
    dist: Vec<f64>,
    d_max: f64,
    /// For each vehicle, every vehicle within `d_max` (itself included), by index.
    neighbors: Vec<Vec<usize>>,
}

impl Geometry {
    pub fn new(snapshot: &Snapshot, d_max: f64) -> Self {
        let v = snapshot.vehicles();
        let n = v.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = distance(&v[i], &v[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| dist[i * n + j] <= d_max).collect())
            .collect();
        Geometry {
            ids: snapshot.ids().collect(),
            dist,
            d_max,
            neighbors,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[VehicleId] {
        &self.ids
    }

    pub fn id(&self, index: usize) -> VehicleId {
        self.ids[index]
    }

    pub fn index_of(&self, id: VehicleId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.ids.len() + j]
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Whether any other vehicle is within range of `i`.
    pub fn has_neighbor(&self, i: usize) -> bool {
        self.neighbors[i].len() > 1
    }

    /// Nearest vehicle to `from` within range, skipping `exclude`; ties go to
    /// the lower id.
    pub fn nearest_within_range(&self, from: usize, exclude: &[usize]) -> Option<usize> {
        self.neighbors[from]
            .iter()
            .copied()
            .filter(|&j| j != from && !exclude.contains(&j))
            .min_by(|&a, &b| {
                self.distance(from, a)
                    .total_cmp(&self.distance(from, b))
                    .then(self.ids[a].cmp(&self.ids[b]))
            })
    }
}

/// Everything needed to evaluate genomes against one snapshot.
#[derive(Debug, Clone)]
pub struct Scene {
    pub snapshot: Snapshot,
    pub geometry: Geometry,
    pub channel: ChannelParams,
    /// `gain_into[rx * n + tx]`: linear gain of the link tx -> rx; zero on the diagonal.
    gain_into: Vec<f64>,
    noise: f64,
}

impl Scene {
    /// Precomputes geometry and link gains. Shadowing is drawn from
    /// `channel_seed` and the snapshot's second index.
    pub fn new(snapshot: Snapshot, channel: &ChannelParams, d_max: f64, channel_seed: u64) -> Result<Self> {
        let shadow = ShadowField::new(channel_seed, snapshot.second_index, channel.shadow_sigma_db);
        Self::with_shadow(snapshot, channel, d_max, &shadow)
    }

    pub fn with_shadow(
        snapshot: Snapshot,
        channel: &ChannelParams,
        d_max: f64,
        shadow: &ShadowField,
    ) -> Result<Self> {
        let geometry = Geometry::new(&snapshot, d_max);
        let v = snapshot.vehicles();
        let n = v.len();
        let mut gain_into = vec![0.0; n * n];
        for rx in 0..n {
            for tx in 0..n {
                if tx == rx {
                    continue;
                }
                gain_into[rx * n + tx] = channel::link_gain(
                    channel.link_distance(geometry.distance(tx, rx)),
                    relative_speed(&v[tx], &v[rx]),
                    shadow.sample_db(v[tx].id, v[rx].id),
                    channel,
                )?;
            }
        }
        Ok(Scene {
            noise: channel::thermal_noise(channel),
            snapshot,
            geometry,
            channel: channel.clone(),
            gain_into,
        })
    }

    pub fn len(&self) -> usize {
        self.geometry.len()
    }

    pub fn is_empty(&self) -> bool {
        self.geometry.is_empty()
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn gain(&self, tx: usize, rx: usize) -> f64 {
        self.gain_into[rx * self.len() + tx]
    }

    /// Gains of every transmitter into `rx`.
    pub fn gains_into(&self, rx: usize) -> &[f64] {
        let n = self.len();
        &self.gain_into[rx * n..(rx + 1) * n]
    }

    /// SINR of `tx -> rx` given every vehicle's transmit power in watts.
    pub fn sinr(&self, tx: usize, rx: usize, powers_w: &[f64]) -> f64 {
        let gains = self.gains_into(rx);
        let mut interference = 0.0;
        for (k, (&g, &p)) in gains.iter().zip(powers_w).enumerate() {
            if k != tx && k != rx {
                interference += g * p;
            }
        }
        powers_w[tx] * gains[tx] / (interference + self.noise)
    }
}
