//! Exhaustive ground truth for tiny instances and the hypervolume indicator
//! used to compare the evolutionary search against it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::encoding::{self, Bounds, GeneBlock, Genome};
use crate::error::{Error, Result};
use crate::evolution::{self, EvoParams, Individual};
use crate::objectives::{self, ObjectiveVector, QosThresholds};
use crate::scene::Scene;
use crate::temporal::{self, SolverConfig};
use crate::trajectory::Snapshot;

pub const MAX_VEHICLES: usize = 5;
pub const MAX_HOPS: usize = 2;
pub const MAX_GRID: usize = 3;
pub const MAX_EVALUATIONS: u128 = 5_000_000;

const CHUNK: u64 = 1 << 16;

/// A decision space small enough to enumerate: every vehicle picks a block
/// size and a power from the grid and any roster id for each relay slot.
#[derive(Debug, Clone)]
pub struct TinyInstance {
    pub snapshot: Snapshot,
    pub channel: ChannelParams,
    /// Must carry a grid.
    pub bounds: Bounds,
    pub thresholds: QosThresholds,
    pub channel_seed: u64,
    /// Anchor for f4; `None` makes f4 zero everywhere.
    pub previous: Option<Genome>,
}

impl TinyInstance {
    fn grid(&self) -> Result<(&[f64], &[f64])> {
        let g = self
            .bounds
            .grid
            .as_ref()
            .ok_or_else(|| Error::config("oracle.grid", "an oracle instance needs s_b and p_n grids"))?;
        Ok((&g.s_b, &g.p_n))
    }

    /// Options per vehicle: |S| * |P| * N^H.
    fn options_per_vehicle(&self) -> Result<u128> {
        let (s, p) = self.grid()?;
        let n = self.snapshot.len() as u128;
        Ok(s.len() as u128 * p.len() as u128 * n.pow(self.bounds.hops as u32))
    }

    /// Number of joint genomes the oracle evaluates.
    pub fn joint_count(&self) -> Result<u128> {
        let k = self.options_per_vehicle()?;
        Ok(k.checked_pow(self.snapshot.len() as u32).unwrap_or(u128::MAX))
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        self.channel.validate()?;
        self.thresholds.validate()?;
        let (s, p) = self.grid()?;
        if self.snapshot.len() > MAX_VEHICLES {
            return Err(Error::config(
                "oracle.vehicles",
                format!("at most {MAX_VEHICLES} vehicles, got {}", self.snapshot.len()),
            ));
        }
        if self.bounds.hops > MAX_HOPS {
            return Err(Error::config("oracle.hops", format!("at most {MAX_HOPS}, got {}", self.bounds.hops)));
        }
        for (field, g) in [("oracle.s_b_grid_bits", s), ("oracle.p_n_grid_mw", p)] {
            if g.is_empty() || g.len() > MAX_GRID {
                return Err(Error::config(field, format!("needs 1 to {MAX_GRID} values, got {}", g.len())));
            }
        }
        let count = self.joint_count()?;
        if count > MAX_EVALUATIONS {
            return Err(Error::InstanceTooLarge {
                count,
                limit: MAX_EVALUATIONS,
            });
        }
        Ok(())
    }

    pub fn scene(&self) -> Result<Scene> {
        Scene::new(self.snapshot.clone(), &self.channel, self.bounds.d_max, self.channel_seed)
    }

    /// Solver settings for running the evolutionary search on this instance.
    pub fn solver_config(&self, evo: EvoParams, search_seed: u64) -> SolverConfig {
        SolverConfig {
            channel: self.channel.clone(),
            bounds: self.bounds.clone(),
            evo,
            thresholds: self.thresholds.clone(),
            gamma: 0.0,
            channel_seed: self.channel_seed,
            search_seed,
        }
    }
}

/// A point of the exact front with one genome attaining it.
#[derive(Debug, Clone)]
pub struct OraclePoint {
    pub objectives: ObjectiveVector,
    pub genome: Genome,
}

/// Every repaired block a vehicle can take, indexed by its option number.
fn block_table(instance: &TinyInstance, scene: &Scene) -> Result<Vec<Vec<GeneBlock>>> {
    let (s_grid, p_grid) = instance.grid()?;
    let geo = &scene.geometry;
    let n = geo.len();
    let hops = instance.bounds.hops;
    let relay_combos = n.pow(hops as u32);
    Ok((0..n)
        .map(|source| {
            let mut table = Vec::with_capacity(s_grid.len() * p_grid.len() * relay_combos);
            for combo in 0..relay_combos {
                let mut relays = Vec::with_capacity(hops);
                let mut c = combo;
                for _ in 0..hops {
                    relays.push(geo.id(c % n));
                    c /= n;
                }
                for &p_n in p_grid {
                    for &s_b in s_grid {
                        let mut block = GeneBlock {
                            s_b,
                            p_n,
                            relays: relays.clone(),
                        };
                        encoding::repair_block(&mut block, source, geo, &instance.bounds);
                        table.push(block);
                    }
                }
            }
            table
        })
        .collect())
}

fn genome_at(index: u64, table: &[Vec<GeneBlock>], scene: &Scene) -> Genome {
    let mut rest = index;
    let blocks = table
        .iter()
        .map(|options| {
            let k = options.len() as u64;
            let b = options[(rest % k) as usize].clone();
            rest /= k;
            b
        })
        .collect();
    Genome {
        roster: scene.geometry.ids().to_vec(),
        blocks,
    }
}

fn covers(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    evolution::constrained_dominates(a, b) || (a.values() == b.values() && a.violation == b.violation)
}

/// Non-dominated archive under constraint-domination; identical vectors keep
/// the first arrival.
#[derive(Debug, Default)]
struct Archive {
    points: Vec<(ObjectiveVector, u64)>,
}

impl Archive {
    fn insert(&mut self, o: ObjectiveVector, index: u64) {
        if self.points.iter().any(|(a, _)| covers(a, &o)) {
            return;
        }
        self.points.retain(|(a, _)| !evolution::constrained_dominates(&o, a));
        self.points.push((o, index));
    }
}

/// Enumerates every joint genome and returns the non-dominated set under the
/// same constraint-domination rule as the search. When feasible genomes exist
/// the result is exactly the feasible Pareto set; otherwise it holds the
/// minimum-violation genomes. Points are sorted by objective vector.
pub fn enumerate_front(instance: &TinyInstance) -> Result<Vec<OraclePoint>> {
    instance.validate()?;
    let scene = instance.scene()?;
    let table = block_table(instance, &scene)?;
    let total = instance.joint_count()? as u64;
    let previous = instance.previous.as_ref();
    let chunks: Vec<Archive> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut archive = Archive::default();
            for index in c * CHUNK..((c + 1) * CHUNK).min(total) {
                let g = genome_at(index, &table, &scene);
                let o = objectives::evaluate(&g, &scene, previous, &instance.thresholds)?.objectives;
                archive.insert(o, index);
            }
            Ok(archive)
        })
        .collect::<Result<_>>()?;
    let mut merged = Archive::default();
    for chunk in chunks {
        for (o, index) in chunk.points {
            merged.insert(o, index);
        }
    }
    let mut out: Vec<OraclePoint> = merged
        .points
        .into_iter()
        .map(|(objectives, index)| OraclePoint {
            objectives,
            genome: genome_at(index, &table, &scene),
        })
        .collect();
    out.sort_by(|a, b| {
        let (x, y) = (a.objectives.values(), b.objectives.values());
        x.iter()
            .zip(&y)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

/// Exact hypervolume of `points` (minimization) against `reference`, by
/// recursive slicing along the last objective.
pub fn hypervolume<P: AsRef<[f64]>>(points: &[P], reference: &[f64]) -> Result<f64> {
    let d = reference.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for (index, p) in points.iter().enumerate() {
        let p = p.as_ref();
        if p.len() != d {
            return Err(Error::Domain(format!(
                "point {index} has {} objectives, reference has {d}",
                p.len()
            )));
        }
        if p.iter().zip(reference).any(|(x, r)| !(x <= r)) {
            return Err(Error::BeyondReference { index });
        }
        pts.push(p.to_vec());
    }
    if d == 0 || pts.is_empty() {
        return Ok(0.0);
    }
    Ok(slice_volume(pts, reference))
}

fn slice_volume(mut pts: Vec<Vec<f64>>, reference: &[f64]) -> f64 {
    let d = reference.len();
    match d {
        1 => pts.iter().map(|p| reference[0] - p[0]).fold(0.0, f64::max),
        2 => {
            pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            let mut area = 0.0;
            let mut best_y = reference[1];
            for (i, p) in pts.iter().enumerate() {
                best_y = best_y.min(p[1]);
                let next_x = pts.get(i + 1).map_or(reference[0], |q| q[0]);
                area += (next_x - p[0]) * (reference[1] - best_y);
            }
            area
        }
        _ => {
            let last = d - 1;
            pts.sort_by(|a, b| a[last].total_cmp(&b[last]));
            let mut volume = 0.0;
            for i in 0..pts.len() {
                let z = pts[i][last];
                let next_z = pts.get(i + 1).map_or(reference[last], |q| q[last]);
                if next_z <= z {
                    continue;
                }
                let slab: Vec<Vec<f64>> = pts[..=i].iter().map(|p| p[..last].to_vec()).collect();
                volume += slice_volume(slab, &reference[..last]) * (next_z - z);
            }
            volume
        }
    }
}

/// Reference point for comparisons: the oracle nadir pushed out by 10% of
/// each objective's range, or by 10% of the nadir (1.0 at zero) when the
/// range is empty.
pub fn reference_point(front: &[ObjectiveVector]) -> Vec<f64> {
    (0..objectives::NUM_OBJECTIVES)
        .map(|m| {
            let vals = front.iter().map(|o| o.values()[m]);
            let lo = vals.clone().fold(f64::INFINITY, f64::min);
            let hi = vals.fold(f64::NEG_INFINITY, f64::max);
            let range = hi - lo;
            let pad = if range > 0.0 {
                0.1 * range
            } else if hi != 0.0 {
                0.1 * hi.abs()
            } else {
                1.0
            };
            hi + pad
        })
        .collect()
}

/// Outcome of checking a search front against the exact front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub oracle_points: usize,
    pub search_points: usize,
    /// Search points strictly dominated by some oracle point.
    pub dominated: usize,
    /// Search points that do not dominate the reference and were left out of
    /// the search hypervolume.
    pub outside_reference: usize,
    pub reference: Vec<f64>,
    pub oracle_hypervolume: f64,
    pub search_hypervolume: f64,
    pub ratio: f64,
}

pub fn compare(oracle: &[ObjectiveVector], search: &[ObjectiveVector]) -> Result<Comparison> {
    let reference = reference_point(oracle);
    let dominated = search
        .iter()
        .filter(|s| oracle.iter().any(|o| evolution::constrained_dominates(o, s)))
        .count();
    let inside: Vec<[f64; 4]> = search
        .iter()
        .map(|s| s.values())
        .filter(|v| v.iter().zip(&reference).all(|(x, r)| x <= r))
        .collect();
    let oracle_values: Vec<[f64; 4]> = oracle.iter().map(|o| o.values()).collect();
    let oracle_hypervolume = hypervolume(&oracle_values, &reference)?;
    let search_hypervolume = hypervolume(&inside, &reference)?;
    let ratio = if oracle_hypervolume > 0.0 {
        search_hypervolume / oracle_hypervolume
    } else if search_hypervolume == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(Comparison {
        oracle_points: oracle.len(),
        search_points: search.len(),
        dominated,
        outside_reference: search.len() - inside.len(),
        reference,
        oracle_hypervolume,
        search_hypervolume,
        ratio,
    })
}

/// Runs the evolutionary search on the instance (grid-snapped through the
/// instance bounds) and returns its final rank-0 set with duplicate vectors
/// removed.
pub fn search_front(instance: &TinyInstance, evo: EvoParams, seed: u64) -> Result<Vec<ObjectiveVector>> {
    instance.validate()?;
    let scene = instance.scene()?;
    let config = instance.solver_config(evo, seed);
    config.validate()?;
    let initial = temporal::initialize_population(&scene, None, &config)?;
    let ctx = evolution::GenerationContext {
        scene: &scene,
        bounds: &config.bounds,
        thresholds: &config.thresholds,
        params: &config.evo,
        previous_best: instance.previous.as_ref(),
        delta_n: 0,
    };
    // generation 0 was scored without an f4 anchor
    let initial = if instance.previous.is_some() { reevaluate(initial, &ctx)? } else { initial };
    let population = temporal::evolve(initial, &ctx, seed)?;
    let mut front: Vec<ObjectiveVector> = population.iter().filter(|i| i.rank == 0).map(|i| i.objectives).collect();
    front.sort_by(|a, b| {
        a.values()
            .iter()
            .zip(&b.values())
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    front.dedup_by(|a, b| a.values() == b.values() && a.violation == b.violation);
    Ok(front)
}

fn reevaluate(population: Vec<Individual>, ctx: &evolution::GenerationContext<'_>) -> Result<Vec<Individual>> {
    let mut out = Vec::with_capacity(population.len());
    for mut ind in population {
        ind.objectives = ctx.evaluate(&ind.genome)?;
        out.push(ind);
    }
    evolution::sort_population(&mut out);
    Ok(out)
}
