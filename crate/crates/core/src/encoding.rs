//! Genome layout, random initialization, relay repair and dimension
//! adaptation between seconds.
//!
//! Each vehicle owns a block `[s_b, p_n, r_1..r_H]`. Relay genes hold vehicle
//! ids rather than roster positions so that blocks survive roster changes.
//! A relay slot holding the source's own id is a self-loop: the slot is
//! inactive and the path is that much shorter.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::Geometry;
use crate::trajectory::VehicleId;

/// Discrete values for the continuous genes; when present, every produced
/// gene value is snapped to the nearest grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneGrid {
    pub s_b: Vec<f64>,
    pub p_n: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// Data block size range, bits.
    pub s_b_min: f64,
    pub s_b_max: f64,
    /// Node power range, milliwatts.
    pub p_n_min: f64,
    pub p_n_max: f64,
    /// Relay slots per vehicle.
    pub hops: usize,
    /// Maximum hop distance, meters.
    pub d_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GeneGrid>,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            s_b_min: 1e5,
            s_b_max: 1e7,
            p_n_min: 1e3,
            p_n_max: 1e5,
            hops: 3,
            d_max: 300.0,
            grid: None,
        }
    }
}

fn snap_to(grid: &[f64], v: f64) -> f64 {
    grid.iter()
        .copied()
        .min_by(|a, b| (a - v).abs().total_cmp(&(b - v).abs()))
        .unwrap_or(v)
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("bounds.s_b_bits", self.s_b_min, self.s_b_max),
            ("bounds.p_n_mw", self.p_n_min, self.p_n_max),
        ];
        for (field, lo, hi) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                return Err(Error::config(field, format!("invalid range [{lo}, {hi}]")));
            }
        }
        if self.hops == 0 {
            return Err(Error::config("bounds.hops", "must be at least 1"));
        }
        if !(self.d_max.is_finite() && self.d_max > 0.0) {
            return Err(Error::config("bounds.d_max_m", "must be positive"));
        }
        if let Some(grid) = &self.grid {
            let axes = [
                ("oracle.s_b_grid_bits", &grid.s_b, self.s_b_min, self.s_b_max),
                ("oracle.p_n_grid_mw", &grid.p_n, self.p_n_min, self.p_n_max),
            ];
            for (field, values, lo, hi) in axes {
                if values.is_empty() {
                    return Err(Error::config(field, "grid needs at least one value"));
                }
                if let Some(v) = values.iter().find(|v| !(lo..=hi).contains(*v)) {
                    return Err(Error::config(field, format!("grid value {v} outside [{lo}, {hi}]")));
                }
            }
        }
        Ok(())
    }

    pub fn clamp_s_b(&self, v: f64) -> f64 {
        let v = v.clamp(self.s_b_min, self.s_b_max);
        match &self.grid {
            Some(g) => snap_to(&g.s_b, v),
            None => v,
        }
    }

    pub fn clamp_p_n(&self, v: f64) -> f64 {
        let v = v.clamp(self.p_n_min, self.p_n_max);
        match &self.grid {
            Some(g) => snap_to(&g.p_n, v),
            None => v,
        }
    }

    fn sample_s_b(&self, rng: &mut impl Rng) -> f64 {
        match &self.grid {
            Some(g) => *g.s_b.choose(rng).expect("validated non-empty"),
            None => sample_range(self.s_b_min, self.s_b_max, rng),
        }
    }

    fn sample_p_n(&self, rng: &mut impl Rng) -> f64 {
        match &self.grid {
            Some(g) => *g.p_n.choose(rng).expect("validated non-empty"),
            None => sample_range(self.p_n_min, self.p_n_max, rng),
        }
    }
}

fn sample_range(lo: f64, hi: f64, rng: &mut impl Rng) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneBlock {
    /// Data block size, bits.
    pub s_b: f64,
    /// Node power, milliwatts.
    pub p_n: f64,
    pub relays: Vec<VehicleId>,
}

impl GeneBlock {
    pub fn transmit_watts(&self) -> f64 {
        self.p_n / 1000.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub roster: Vec<VehicleId>,
    pub blocks: Vec<GeneBlock>,
}

impl Genome {
    pub fn len(&self) -> usize {
        self.roster.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roster.is_empty()
    }

    pub fn hops(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.relays.len())
    }

    /// Scalar decision-vector length, `(2 + H) * N`.
    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(|b| 2 + b.relays.len()).sum()
    }

    pub fn block(&self, id: VehicleId) -> Option<&GeneBlock> {
        self.roster.binary_search(&id).ok().map(|i| &self.blocks[i])
    }

    /// Bit-exact identity key, used to drop duplicate offspring.
    pub fn key(&self) -> Vec<u64> {
        let mut k = Vec::with_capacity(self.dimension() + self.len());
        for (id, b) in self.roster.iter().zip(&self.blocks) {
            k.push(u64::from(id.0));
            k.push(b.s_b.to_bits());
            k.push(b.p_n.to_bits());
            k.extend(b.relays.iter().map(|r| u64::from(r.0)));
        }
        k
    }

    /// Checks the structural invariants against the roster and bounds of a
    /// scene.
    pub fn check(&self, geometry: &Geometry, bounds: &Bounds) -> Result<()> {
        if self.roster.as_slice() != geometry.ids() {
            return Err(Error::RosterMismatch("genome roster differs from snapshot".into()));
        }
        if self.blocks.len() != self.roster.len() {
            return Err(Error::RosterMismatch(format!(
                "{} blocks for {} vehicles",
                self.blocks.len(),
                self.roster.len()
            )));
        }
        for (id, b) in self.roster.iter().zip(&self.blocks) {
            if !(bounds.s_b_min..=bounds.s_b_max).contains(&b.s_b)
                || !(bounds.p_n_min..=bounds.p_n_max).contains(&b.p_n)
            {
                return Err(Error::Domain(format!("vehicle {id}: gene out of bounds")));
            }
            if b.relays.len() != bounds.hops {
                return Err(Error::Domain(format!(
                    "vehicle {id}: {} relay slots, expected {}",
                    b.relays.len(),
                    bounds.hops
                )));
            }
            if let Some(r) = b.relays.iter().find(|r| geometry.index_of(**r).is_none()) {
                return Err(Error::UnknownVehicle(*r));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Active hops of the path owned by `source`, as (tx, rx) scene indices.
///
/// Walking the relay slots from the source, a slot is skipped when it holds
/// the source's id, repeats the current node, or names a vehicle outside the
/// roster.
pub fn active_hops(block: &GeneBlock, source: usize, geometry: &Geometry) -> Vec<(usize, usize)> {
    let mut hops = Vec::with_capacity(block.relays.len());
    let mut cur = source;
    for r in &block.relays {
        match geometry.index_of(*r) {
            Some(j) if j != source && j != cur => {
                hops.push((cur, j));
                cur = j;
            }
            _ => {}
        }
    }
    hops
}

/// Draws `hops` relay slots hop by hop, each uniformly from the vehicles in
/// range of the previous hop node (that node and the source included; either
/// choice yields a self-loop).
pub fn random_relays(source: usize, hops: usize, geometry: &Geometry, rng: &mut impl Rng) -> Vec<VehicleId> {
    let src_id = geometry.id(source);
    let mut cur = source;
    (0..hops)
        .map(|_| {
            let pick = *geometry.neighbors(cur).choose(rng).expect("a vehicle is its own neighbor");
            if pick == cur || pick == source {
                src_id
            } else {
                cur = pick;
                geometry.id(pick)
            }
        })
        .collect()
}

/// Draws one relay for a slot whose previous hop node is `cur`.
pub fn random_relay(source: usize, cur: usize, geometry: &Geometry, rng: &mut impl Rng) -> VehicleId {
    let pick = *geometry.neighbors(cur).choose(rng).expect("a vehicle is its own neighbor");
    if pick == cur || pick == source {
        geometry.id(source)
    } else {
        geometry.id(pick)
    }
}

pub fn random_block(source: usize, geometry: &Geometry, bounds: &Bounds, rng: &mut impl Rng) -> GeneBlock {
    let s_b = bounds.sample_s_b(rng);
    let p_n = bounds.sample_p_n(rng);
    GeneBlock {
        s_b,
        p_n,
        relays: random_relays(source, bounds.hops, geometry, rng),
    }
}

pub fn random_genome(geometry: &Geometry, bounds: &Bounds, rng: &mut impl Rng) -> Genome {
    Genome {
        roster: geometry.ids().to_vec(),
        blocks: (0..geometry.len())
            .map(|i| random_block(i, geometry, bounds, rng))
            .collect(),
    }
}

/// Replaces relay slots that name departed vehicles or exceed the hop range
/// with the nearest in-range vehicle to the previous hop node (lower id on
/// ties). With no candidate the slot becomes a self-loop. Idempotent.
pub fn repair_relays(mut genome: Genome, geometry: &Geometry, bounds: &Bounds) -> Genome {
    for (source, block) in genome.blocks.iter_mut().enumerate() {
        repair_block(block, source, geometry, bounds);
    }
    genome
}

pub(crate) fn repair_block(block: &mut GeneBlock, source: usize, geometry: &Geometry, bounds: &Bounds) {
    let src_id = geometry.id(source);
    block.relays.resize(bounds.hops, src_id);
    let mut cur = source;
    for slot in block.relays.iter_mut() {
        if *slot == src_id {
            continue;
        }
        match geometry.index_of(*slot) {
            Some(j) if j == cur => *slot = src_id,
            Some(j) if geometry.distance(cur, j) <= geometry.d_max() => cur = j,
            _ => match geometry.nearest_within_range(cur, &[source]) {
                Some(j) => {
                    *slot = geometry.id(j);
                    cur = j;
                }
                None => *slot = src_id,
            },
        }
    }
}

/// Carries a genome into a new roster: blocks of remaining vehicles are kept
/// (matched by id), departed vehicles are dropped, entering vehicles get fresh
/// random blocks, and relays are repaired against the new geometry.
pub fn adapt_dimension(old: &Genome, geometry: &Geometry, bounds: &Bounds, rng: &mut impl Rng) -> Genome {
    let blocks = geometry
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| match old.block(*id) {
            Some(b) => b.clone(),
            None => random_block(i, geometry, bounds, rng),
        })
        .collect();
    repair_relays(
        Genome {
            roster: geometry.ids().to_vec(),
            blocks,
        },
        geometry,
        bounds,
    )
}
