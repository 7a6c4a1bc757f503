//! Second-by-second orchestration: elite inheritance, dimension adaptation,
//! the per-second evolutionary loop, knee selection and metric extraction.

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::encoding::{self, Bounds, Genome};
use crate::error::{Error, Result};
use crate::evolution::{self, EvoParams, GenerationContext, Individual, Provenance};
use crate::objectives::{self, ObjectiveVector, QosThresholds};
use crate::rng::{self, Role};
use crate::scene::Scene;
use crate::trajectory::Snapshot;

/// Everything the solver needs besides the snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub channel: ChannelParams,
    pub bounds: Bounds,
    pub evo: EvoParams,
    pub thresholds: QosThresholds,
    /// Fraction of each initial population inherited from the previous second.
    pub gamma: f64,
    /// Seed of the shadow-fading field.
    pub channel_seed: u64,
    /// Seed of every search stream (initialization, inheritance, variation).
    pub search_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            channel: ChannelParams::default(),
            bounds: Bounds::default(),
            evo: EvoParams::default(),
            thresholds: QosThresholds::default(),
            gamma: 0.0,
            channel_seed: 0,
            search_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.bounds.validate()?;
        self.evo.validate()?;
        self.thresholds.validate()?;
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("algorithm.gamma", format!("must lie in [0, 1], got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn scene(&self, snapshot: Snapshot) -> Result<Scene> {
        Scene::new(snapshot, &self.channel, self.bounds.d_max, self.channel_seed)
    }
}

/// Metrics of a second's representative solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondMetrics {
    pub avg_delay_s: f64,
    pub load_variance: f64,
    /// Mean linear SINR over the representative's active links; 0 without links.
    pub avg_sinr: f64,
    /// Raw f4 of the representative.
    pub path_stability: f64,
}

#[derive(Debug, Clone)]
pub struct FrontMember {
    pub genome: Genome,
    pub objectives: ObjectiveVector,
}

#[derive(Debug, Clone)]
pub struct SecondResult {
    pub second_index: u32,
    pub n_vehicles: usize,
    /// Rank-0 members of the final population, in population order.
    pub pareto_front: Vec<FrontMember>,
    /// Index of the knee point within `pareto_front`.
    pub representative_index: usize,
    pub metrics: SecondMetrics,
    /// Final sorted population, the source of the next second's elites.
    pub population: Vec<Individual>,
}

impl SecondResult {
    pub fn representative(&self) -> &FrontMember {
        &self.pareto_front[self.representative_index]
    }
}

/// Number of inherited genomes: gamma * P rounded half up.
pub fn inheritance_count(gamma: f64, pop_size: usize) -> usize {
    ((gamma * pop_size as f64 + 0.5).floor() as usize).min(pop_size)
}

/// The best `count` genomes by (rank asc, crowding desc, index asc).
pub fn select_inheritance(previous: &[Individual], count: usize) -> Vec<Genome> {
    if count > previous.len() {
        warn!("inheritance count {count} exceeds population {}; clamped", previous.len());
    }
    let mut order: Vec<usize> = (0..previous.len()).collect();
    order.sort_by(|&a, &b| evolution::selection_order(&previous[a], &previous[b]).then(a.cmp(&b)));
    order
        .into_iter()
        .take(count)
        .map(|i| previous[i].genome.clone())
        .collect()
}

/// Generation-0 population of a second: adapted elites of the previous second
/// followed by random genomes, evaluated and sorted.
pub fn initialize_population(scene: &Scene, previous: Option<&SecondResult>, config: &SolverConfig) -> Result<Vec<Individual>> {
    let second = u64::from(scene.snapshot.second_index);
    let p = config.evo.pop_size;
    let geo = &scene.geometry;
    let inherited: Vec<Genome> = match previous {
        Some(prev) => {
            let mut rng = rng::stream(config.search_seed, Role::Inherit, &[second]);
            select_inheritance(&prev.population, inheritance_count(config.gamma, p))
                .iter()
                .map(|g| encoding::adapt_dimension(g, geo, &config.bounds, &mut rng))
                .collect()
        }
        None => Vec::new(),
    };
    let mut rng = rng::stream(config.search_seed, Role::Init, &[second]);
    let random: Vec<Genome> = (inherited.len()..p)
        .map(|_| encoding::random_genome(geo, &config.bounds, &mut rng))
        .collect();
    let ctx = context(scene, previous, config);
    let mut pop = ctx.evaluate_all(inherited, Provenance::Inherited)?;
    pop.extend(ctx.evaluate_all(random, Provenance::Random)?);
    evolution::sort_population(&mut pop);
    Ok(pop)
}

fn context<'a>(scene: &'a Scene, previous: Option<&'a SecondResult>, config: &'a SolverConfig) -> GenerationContext<'a> {
    GenerationContext {
        scene,
        bounds: &config.bounds,
        thresholds: &config.thresholds,
        params: &config.evo,
        previous_best: previous.map(|p| &p.representative().genome),
        delta_n: previous.map_or(0, |p| p.n_vehicles.abs_diff(scene.len())),
    }
}

/// Runs `max_generations` generations on `population`. Each generation draws
/// from its own stream keyed by (second, generation).
pub fn evolve(mut population: Vec<Individual>, ctx: &GenerationContext<'_>, search_seed: u64) -> Result<Vec<Individual>> {
    let second = u64::from(ctx.scene.snapshot.second_index);
    for generation in 0..ctx.params.max_generations {
        let mut rng = rng::stream(search_seed, Role::Variation, &[second, generation as u64]);
        population = evolution::run_generation(population, ctx, &mut rng)?;
    }
    Ok(population)
}

/// Knee point: the member closest to the origin after min-max normalizing
/// f1..f3 over the front. f4 is ignored; ties go to the lower index.
pub fn knee_index(front: &[ObjectiveVector]) -> usize {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for o in front {
        for (m, v) in o.values()[..3].iter().enumerate() {
            lo[m] = lo[m].min(*v);
            hi[m] = hi[m].max(*v);
        }
    }
    let score = |o: &ObjectiveVector| -> f64 {
        o.values()[..3]
            .iter()
            .enumerate()
            .map(|(m, v)| {
                let range = hi[m] - lo[m];
                let z = if range > 0.0 { (v - lo[m]) / range } else { 0.0 };
                z * z
            })
            .sum()
    };
    let mut best = 0;
    let mut best_score = f64::INFINITY;
    for (i, o) in front.iter().enumerate() {
        let s = score(o);
        if s < best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

/// Solves one second against the previous second's result.
pub fn run_second(snapshot: Snapshot, previous: Option<&SecondResult>, config: &SolverConfig) -> Result<SecondResult> {
    let scene = config.scene(snapshot)?;
    let initial = initialize_population(&scene, previous, config)?;
    let ctx = context(&scene, previous, config);
    let population = evolve(initial, &ctx, config.search_seed)?;
    let pareto_front: Vec<FrontMember> = population
        .iter()
        .filter(|i| i.rank == 0)
        .map(|i| FrontMember {
            genome: i.genome.clone(),
            objectives: i.objectives,
        })
        .collect();
    let objs: Vec<ObjectiveVector> = pareto_front.iter().map(|m| m.objectives).collect();
    let representative_index = knee_index(&objs);
    let rep = &pareto_front[representative_index];
    let eval = objectives::evaluate(&rep.genome, &scene, ctx.previous_best, &config.thresholds)?;
    let avg_sinr = if eval.links.is_empty() {
        0.0
    } else {
        eval.links.iter().map(|l| l.sinr).sum::<f64>() / eval.links.len() as f64
    };
    let metrics = SecondMetrics {
        avg_delay_s: rep.objectives.f1,
        load_variance: rep.objectives.f2,
        avg_sinr,
        path_stability: rep.objectives.f4,
    };
    Ok(SecondResult {
        second_index: scene.snapshot.second_index,
        n_vehicles: scene.len(),
        pareto_front,
        representative_index,
        metrics,
        population,
    })
}

/// Folds [`run_second`] over the snapshots, calling `on_second` after each.
/// Populations of all but the last second are released once consumed.
pub fn run_scenario_with(
    snapshots: &[Snapshot],
    config: &SolverConfig,
    mut on_second: impl FnMut(&SecondResult),
) -> Result<Vec<SecondResult>> {
    config.validate()?;
    if snapshots.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mut results: Vec<SecondResult> = Vec::with_capacity(snapshots.len());
    for snap in snapshots {
        let second = snap.second_index;
        let r = run_second(snap.clone(), results.last(), config).map_err(|e| Error::AtSecond {
            second,
            source: Box::new(e),
        })?;
        if let Some(prev) = results.last_mut() {
            prev.population = Vec::new();
        }
        on_second(&r);
        results.push(r);
    }
    Ok(results)
}

pub fn run_scenario(snapshots: &[Snapshot], config: &SolverConfig) -> Result<Vec<SecondResult>> {
    let total = snapshots.len();
    run_scenario_with(snapshots, config, |r| {
        info!(
            "second {}/{}: {} vehicles, front {}, delay {:.4e} s, f4 {:.3}",
            r.second_index,
            total,
            r.n_vehicles,
            r.pareto_front.len(),
            r.metrics.avg_delay_s,
            r.metrics.path_stability
        );
    })
}

/// Search seed of the `index`-th entry of a gamma sweep.
pub fn sweep_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}

/// Runs the same scenario once per gamma. The channel seed is shared; the
/// search seed is the base seed xor the gamma's index.
pub fn run_sweep(snapshots: &[Snapshot], base: &SolverConfig, gammas: &[f64]) -> Result<Vec<Vec<SecondResult>>> {
    gammas
        .iter()
        .enumerate()
        .map(|(k, &gamma)| {
            info!("gamma {gamma}");
            let config = SolverConfig {
                gamma,
                search_seed: sweep_seed(base.search_seed, k),
                ..base.clone()
            };
            run_scenario(snapshots, &config)
        })
        .collect()
}
