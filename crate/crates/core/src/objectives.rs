//! The four minimized objectives and the aggregate constraint violation.
//!
//! * f1: mean end-to-end delay over vehicles, seconds
//! * f2: variance of the normalized relay loads
//! * f3: mean inverse SINR over all (vehicle, hop) slots
//! * f4: temporal instability against the previous second's representative

use serde::{Deserialize, Serialize};

use crate::channel::SPEED_OF_LIGHT;
use crate::encoding::{active_hops, Genome};
use crate::error::{Error, Result};
use crate::scene::Scene;
use crate::trajectory::VehicleId;

pub const NUM_OBJECTIVES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    pub violation: f64,
}

impl ObjectiveVector {
    pub fn new(f: [f64; NUM_OBJECTIVES], violation: f64) -> Self {
        ObjectiveVector {
            f1: f[0],
            f2: f[1],
            f3: f[2],
            f4: f[3],
            violation,
        }
    }

    pub fn values(&self) -> [f64; NUM_OBJECTIVES] {
        [self.f1, self.f2, self.f3, self.f4]
    }

    pub fn is_feasible(&self) -> bool {
        self.violation <= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosThresholds {
    /// Minimum received power, watts.
    pub min_rx_power_w: f64,
    /// Minimum SINR, linear.
    pub min_sinr: f64,
    /// Maximum end-to-end delay, seconds.
    pub max_delay_s: f64,
}

impl Default for QosThresholds {
    fn default() -> Self {
        QosThresholds {
            // -90 dBm
            min_rx_power_w: 1e-12,
            // 10 dB
            min_sinr: 10.0,
            max_delay_s: 0.1,
        }
    }
}

impl QosThresholds {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("qos.min_rx_power", self.min_rx_power_w),
            ("qos.min_sinr", self.min_sinr),
            ("qos.max_delay", self.max_delay_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(field, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkMetric {
    pub source: VehicleId,
    pub tx: VehicleId,
    pub rx: VehicleId,
    pub distance_m: f64,
    pub rx_power_w: f64,
    pub sinr: f64,
}

/// Full evaluation of one genome: objectives plus the per-vehicle delays and
/// per-link metrics they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objectives: ObjectiveVector,
    pub delays: Vec<f64>,
    pub links: Vec<LinkMetric>,
}

struct Resolved {
    paths: Vec<Vec<(usize, usize)>>,
    powers_w: Vec<f64>,
}

fn resolve(g: &Genome, scene: &Scene) -> Result<Resolved> {
    if g.roster.as_slice() != scene.geometry.ids() {
        return Err(Error::RosterMismatch(format!(
            "genome has {} vehicles, second {} has {}",
            g.len(),
            scene.snapshot.second_index,
            scene.len()
        )));
    }
    Ok(Resolved {
        paths: g
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| active_hops(b, i, &scene.geometry))
            .collect(),
        powers_w: g.blocks.iter().map(|b| b.transmit_watts()).collect(),
    })
}

fn slot_count(g: &Genome) -> f64 {
    (g.len() * g.hops().max(1)) as f64
}

/// Per-vehicle delays. A node relaying k flows gives each of them an equal
/// 1/k share of the network bandwidth (1 bit/s/Hz); every hop of vehicle i
/// carries i's own block size.
fn delays(g: &Genome, scene: &Scene, r: &Resolved) -> Vec<f64> {
    let n = g.len();
    let mut flows = vec![0usize; n];
    for path in &r.paths {
        let mut senders: Vec<usize> = path.iter().map(|&(tx, _)| tx).collect();
        senders.sort_unstable();
        senders.dedup();
        for tx in senders {
            flows[tx] += 1;
        }
    }
    let bandwidth = scene.channel.bandwidth_hz;
    r.paths
        .iter()
        .zip(&g.blocks)
        .map(|(path, block)| {
            path.iter()
                .map(|&(tx, rx)| {
                    let rate = bandwidth / flows[tx].max(1) as f64;
                    block.s_b / rate + scene.geometry.distance(tx, rx) / SPEED_OF_LIGHT
                })
                .sum()
        })
        .collect()
}

fn load_variance(g: &Genome, r: &Resolved) -> f64 {
    let n = g.len();
    if n == 0 {
        return 0.0;
    }
    let mut counts = vec![0usize; n];
    for path in &r.paths {
        for &(_, rx) in path {
            counts[rx] += 1;
        }
    }
    let denom = slot_count(g);
    let loads: Vec<f64> = counts.iter().map(|&c| c as f64 / denom).collect();
    let mean = loads.iter().sum::<f64>() / n as f64;
    loads.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n as f64
}

fn links(scene: &Scene, r: &Resolved) -> Vec<LinkMetric> {
    let geo = &scene.geometry;
    r.paths
        .iter()
        .enumerate()
        .flat_map(|(src, path)| {
            path.iter().map(move |&(tx, rx)| LinkMetric {
                source: geo.id(src),
                tx: geo.id(tx),
                rx: geo.id(rx),
                distance_m: geo.distance(tx, rx),
                rx_power_w: r.powers_w[tx] * scene.gain(tx, rx),
                sinr: scene.sinr(tx, rx, &r.powers_w),
            })
        })
        .collect()
}

/// f3 from the active links of `g`: the sum of 1/SINR divided by the number
/// of relay slots.
pub fn inverse_sinr_mean(g: &Genome, links: &[LinkMetric]) -> f64 {
    if g.is_empty() {
        return 0.0;
    }
    links.iter().map(|l| 1.0 / l.sinr).sum::<f64>() / slot_count(g)
}

/// f1 and the per-vehicle delays D_i.
pub fn eval_delay(g: &Genome, scene: &Scene) -> Result<(f64, Vec<f64>)> {
    let r = resolve(g, scene)?;
    let d = delays(g, scene, &r);
    let f1 = if d.is_empty() {
        0.0
    } else {
        d.iter().sum::<f64>() / d.len() as f64
    };
    Ok((f1, d))
}

/// f2: population variance of the normalized relay loads.
pub fn eval_load(g: &Genome, scene: &Scene) -> Result<f64> {
    let r = resolve(g, scene)?;
    Ok(load_variance(g, &r))
}

/// f3 and the metrics of every active link.
pub fn eval_link_quality(g: &Genome, scene: &Scene) -> Result<(f64, Vec<LinkMetric>)> {
    let r = resolve(g, scene)?;
    let l = links(scene, &r);
    Ok((inverse_sinr_mean(g, &l), l))
}

/// f4: share of relay slots that changed since `previous`, averaged with a
/// roster-size change penalty when the rosters differ. Vehicles are matched
/// by id.
pub fn eval_stability(current: &Genome, previous: Option<&Genome>) -> f64 {
    let Some(prev) = previous else {
        return 0.0;
    };
    let hops = current.hops().min(prev.hops());
    let (mut common, mut changed) = (0usize, 0usize);
    let (mut i, mut j) = (0, 0);
    while i < current.len() && j < prev.len() {
        match current.roster[i].cmp(&prev.roster[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                changed += current.blocks[i].relays[..hops]
                    .iter()
                    .zip(&prev.blocks[j].relays[..hops])
                    .filter(|(a, b)| a != b)
                    .count();
                i += 1;
                j += 1;
            }
        }
    }
    let path_change = if common == 0 || hops == 0 {
        1.0
    } else {
        changed as f64 / (common * hops) as f64
    };
    if current.roster == prev.roster && current.hops() == prev.hops() {
        return path_change;
    }
    let (n_now, n_prev) = (current.len(), prev.len());
    let penalty = n_now.abs_diff(n_prev) as f64 / n_now.max(n_prev).max(1) as f64;
    0.5 * (path_change + penalty)
}

/// Aggregate violation of the power, SINR, delay and hop-range constraints,
/// each as a relative shortfall. A vehicle with an in-range neighbor but no
/// active hop adds 1.
pub fn eval_constraints(
    g: &Genome,
    scene: &Scene,
    thresholds: &QosThresholds,
    links: &[LinkMetric],
    delays: &[f64],
) -> f64 {
    let d_max = scene.geometry.d_max();
    let mut v = 0.0;
    for l in links {
        v += ((thresholds.min_rx_power_w - l.rx_power_w) / thresholds.min_rx_power_w).max(0.0);
        v += ((thresholds.min_sinr - l.sinr) / thresholds.min_sinr).max(0.0);
        v += ((l.distance_m - d_max) / d_max).max(0.0);
    }
    for &d in delays {
        v += ((d - thresholds.max_delay_s) / thresholds.max_delay_s).max(0.0);
    }
    let mut served = vec![false; g.len()];
    for l in links {
        if let Some(i) = scene.geometry.index_of(l.source) {
            served[i] = true;
        }
    }
    for (i, s) in served.iter().enumerate() {
        if !s && scene.geometry.has_neighbor(i) {
            v += 1.0;
        }
    }
    v
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Evaluates all objectives and the constraint violation of `g`.
pub fn evaluate(
    g: &Genome,
    scene: &Scene,
    previous_best: Option<&Genome>,
    thresholds: &QosThresholds,
) -> Result<Evaluation> {
    let r = resolve(g, scene)?;
    let delays = delays(g, scene, &r);
    let links = links(scene, &r);
    let violation = eval_constraints(g, scene, thresholds, &links, &delays);
    let objectives = ObjectiveVector {
        f1: mean(&delays),
        f2: load_variance(g, &r),
        f3: inverse_sinr_mean(g, &links),
        f4: eval_stability(g, previous_best),
        violation,
    };
    Ok(Evaluation {
        objectives,
        delays,
        links,
    })
}
