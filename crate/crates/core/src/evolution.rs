//! NSGA-II machinery for a single second: constrained non-dominated sorting,
//! normalized crowding distance, tournament selection, SBX on the continuous
//! genes, topology-adaptive polynomial mutation, and the elitist generation
//! step.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{self, Bounds, GeneBlock, Genome};
use crate::error::{Error, Result};
use crate::objectives::{self, ObjectiveVector, QosThresholds};
use crate::scene::{Geometry, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Random,
    Inherited,
    Offspring,
}

#[derive(Debug, Clone)]
pub struct Individual {
    pub genome: Genome,
    pub objectives: ObjectiveVector,
    pub rank: usize,
    pub crowding: f64,
    pub provenance: Provenance,
}

impl Individual {
    pub fn new(genome: Genome, objectives: ObjectiveVector, provenance: Provenance) -> Self {
        Individual {
            genome,
            objectives,
            rank: 0,
            crowding: 0.0,
            provenance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvoParams {
    pub pop_size: usize,
    pub max_generations: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub eta_c: f64,
    pub eta_m: f64,
    pub tournament_size: usize,
}

impl Default for EvoParams {
    fn default() -> Self {
        EvoParams {
            pop_size: 100,
            max_generations: 20,
            p_crossover: 0.9,
            p_mutation: 0.1,
            eta_c: 15.0,
            eta_m: 20.0,
            tournament_size: 2,
        }
    }
}

impl EvoParams {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 4 || !self.pop_size.is_multiple_of(2) {
            return Err(Error::config(
                "algorithm.population",
                format!("must be even and at least 4, got {}", self.pop_size),
            ));
        }
        for (field, p) in [
            ("algorithm.crossover_rate", self.p_crossover),
            ("algorithm.mutation_rate", self.p_mutation),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(field, format!("must lie in [0, 1], got {p}")));
            }
        }
        for (field, eta) in [("algorithm.eta_c", self.eta_c), ("algorithm.eta_m", self.eta_m)] {
            if !(eta.is_finite() && eta >= 0.0) {
                return Err(Error::config(field, "must be non-negative"));
            }
        }
        if self.tournament_size == 0 {
            return Err(Error::config("algorithm.tournament_size", "must be at least 1"));
        }
        Ok(())
    }
}

/// Standard Pareto dominance for minimization.
pub fn pareto_dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Feasibility-first dominance: feasible beats infeasible, lower violation
/// beats higher, and feasible pairs compare by Pareto dominance.
pub fn constrained_dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    match (a.is_feasible(), b.is_feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => pareto_dominates(&a.values(), &b.values()),
    }
}

/// Partitions indices into fronts under [`constrained_dominates`]; front 0 is
/// the non-dominated set.
pub fn non_dominated_sort(objectives: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut counts = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if constrained_dominates(&objectives[i], &objectives[j]) {
                dominated_by[i].push(j);
                counts[j] += 1;
            } else if constrained_dominates(&objectives[j], &objectives[i]) {
                dominated_by[j].push(i);
                counts[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| counts[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                counts[j] -= 1;
                if counts[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Normalized crowding distance of each point of a front.
///
/// Fronts of one or two points are all boundary (+inf). Otherwise, per
/// objective, the extremes get +inf and interior points accumulate the
/// neighbor gap divided by the objective's range; an objective that is
/// constant over the front contributes nothing.
pub fn crowding_distance<P: AsRef<[f64]>>(front: &[P]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = front[0].as_ref().len();
    let mut dist = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for obj in 0..m {
        let value = |i: usize| front[i].as_ref()[obj];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
        let (lo, hi) = (value(order[0]), value(order[n - 1]));
        let range = hi - lo;
        if !(range > 0.0) {
            continue;
        }
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        for k in 1..n - 1 {
            dist[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / range;
        }
    }
    dist
}

/// Assigns rank and crowding to every individual.
pub fn assign_rank_and_crowding(population: &mut [Individual]) {
    let objs: Vec<ObjectiveVector> = population.iter().map(|i| i.objectives).collect();
    for (rank, front) in non_dominated_sort(&objs).into_iter().enumerate() {
        let points: Vec<[f64; 4]> = front.iter().map(|&i| objs[i].values()).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&points)) {
            population[i].rank = rank;
            population[i].crowding = d;
        }
    }
}

/// Ordering used for selection: lower rank, then larger crowding.
pub fn selection_order(a: &Individual, b: &Individual) -> Ordering {
    a.rank
        .cmp(&b.rank)
        .then_with(|| b.crowding.total_cmp(&a.crowding))
}

/// Ranks the population and sorts it by (rank, crowding desc, prior index).
pub fn sort_population(population: &mut [Individual]) {
    assign_rank_and_crowding(population);
    // stable: equal keys keep their prior order
    population.sort_by(selection_order);
}

/// Draws `k` competitors uniformly (with replacement) and returns the index
/// of the winner; exact ties go to the lower index.
pub fn tournament_select(population: &[Individual], k: usize, rng: &mut impl Rng) -> usize {
    (0..k.max(1))
        .map(|_| rng.random_range(0..population.len()))
        .min_by(|&a, &b| selection_order(&population[a], &population[b]).then(a.cmp(&b)))
        .expect("k >= 1")
}

/// SBX spread factor for the uniform draw `u`.
pub fn sbx_beta(u: f64, eta: f64) -> f64 {
    let e = 1.0 / (eta + 1.0);
    if u <= 0.5 {
        (2.0 * u).powf(e)
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(e)
    }
}

/// SBX children of one gene pair: 0.5[(y1+y2) -/+ beta |y2-y1|].
pub fn sbx_pair(y1: f64, y2: f64, u: f64, eta: f64) -> (f64, f64) {
    let beta = sbx_beta(u, eta);
    let mid = y1 + y2;
    let spread = beta * (y2 - y1).abs();
    (0.5 * (mid - spread), 0.5 * (mid + spread))
}

fn sbx_gene(y1: f64, y2: f64, eta: f64, rng: &mut impl Rng) -> (f64, f64) {
    // gene-level coin first, then a separate draw for the spread
    if rng.random::<f64>() < 0.5 {
        sbx_pair(y1, y2, rng.random::<f64>(), eta)
    } else {
        (y1, y2)
    }
}

/// Simulated binary crossover on the continuous genes (block size, power)
/// and per-slot uniform swap on the relay genes.
pub fn sbx_crossover(
    parent1: &Genome,
    parent2: &Genome,
    bounds: &Bounds,
    eta_c: f64,
    rng: &mut impl Rng,
) -> Result<(Genome, Genome)> {
    if parent1.roster != parent2.roster {
        return Err(Error::RosterMismatch("crossover parents differ in roster".into()));
    }
    let mut c1 = parent1.clone();
    let mut c2 = parent2.clone();
    for (a, b) in c1.blocks.iter_mut().zip(c2.blocks.iter_mut()) {
        let (s1, s2) = sbx_gene(a.s_b, b.s_b, eta_c, rng);
        a.s_b = bounds.clamp_s_b(s1);
        b.s_b = bounds.clamp_s_b(s2);
        let (p1, p2) = sbx_gene(a.p_n, b.p_n, eta_c, rng);
        a.p_n = bounds.clamp_p_n(p1);
        b.p_n = bounds.clamp_p_n(p2);
        for (ra, rb) in a.relays.iter_mut().zip(b.relays.iter_mut()) {
            if rng.random_bool(0.5) {
                std::mem::swap(ra, rb);
            }
        }
    }
    Ok((c1, c2))
}

/// Mutation rate scaled by the relative change in vehicle count.
pub fn effective_mutation_rate(p_m: f64, delta_n: usize, n_t: usize) -> f64 {
    (p_m * (1.0 + delta_n as f64 / n_t.max(1) as f64)).min(1.0)
}

/// Bounded polynomial mutation of one value.
pub fn polynomial_mutation(y: f64, lo: f64, hi: f64, eta: f64, u: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let span = hi - lo;
    let d1 = (y - lo) / span;
    let d2 = (hi - y) / span;
    let pow = 1.0 / (eta + 1.0);
    let dq = if u < 0.5 {
        let val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
        val.powf(pow) - 1.0
    } else {
        let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
        1.0 - val.powf(pow)
    };
    (y + dq * span).clamp(lo, hi)
}

fn mutate_block(
    block: &mut GeneBlock,
    source: usize,
    geometry: &Geometry,
    bounds: &Bounds,
    rate: f64,
    eta_m: f64,
    rng: &mut impl Rng,
) {
    if rng.random::<f64>() < rate {
        let u = rng.random::<f64>();
        block.s_b = bounds.clamp_s_b(polynomial_mutation(block.s_b, bounds.s_b_min, bounds.s_b_max, eta_m, u));
    }
    if rng.random::<f64>() < rate {
        let u = rng.random::<f64>();
        block.p_n = bounds.clamp_p_n(polynomial_mutation(block.p_n, bounds.p_n_min, bounds.p_n_max, eta_m, u));
    }
    let src_id = geometry.id(source);
    let mut cur = source;
    for slot in block.relays.iter_mut() {
        if rng.random::<f64>() < rate {
            *slot = encoding::random_relay(source, cur, geometry, rng);
        }
        match geometry.index_of(*slot) {
            Some(j) if *slot != src_id && j != cur => cur = j,
            _ => {}
        }
    }
}

/// Mutates every gene with probability `p_m (1 + |delta_n| / n_t)`:
/// polynomial mutation for block size and power, a fresh in-range relay for
/// relay slots.
#[allow(clippy::too_many_arguments)]
pub fn adaptive_mutation(
    genome: &Genome,
    geometry: &Geometry,
    bounds: &Bounds,
    p_m: f64,
    delta_n: usize,
    n_t: usize,
    eta_m: f64,
    rng: &mut impl Rng,
) -> Genome {
    let rate = effective_mutation_rate(p_m, delta_n, n_t);
    let mut g = genome.clone();
    if rate <= 0.0 {
        return g;
    }
    for (i, block) in g.blocks.iter_mut().enumerate() {
        mutate_block(block, i, geometry, bounds, rate, eta_m, rng);
    }
    g
}

/// Everything fixed while evolving one second.
pub struct GenerationContext<'a> {
    pub scene: &'a Scene,
    pub bounds: &'a Bounds,
    pub thresholds: &'a QosThresholds,
    pub params: &'a EvoParams,
    /// Anchor for the temporal-stability objective.
    pub previous_best: Option<&'a Genome>,
    /// Vehicle-count change since the previous second.
    pub delta_n: usize,
}

impl GenerationContext<'_> {
    pub fn evaluate(&self, genome: &Genome) -> Result<ObjectiveVector> {
        Ok(objectives::evaluate(genome, self.scene, self.previous_best, self.thresholds)?.objectives)
    }

    /// Evaluates a batch in parallel; output order matches input order.
    pub fn evaluate_all(&self, genomes: Vec<Genome>, provenance: Provenance) -> Result<Vec<Individual>> {
        genomes
            .into_par_iter()
            .map(|g| {
                let o = self.evaluate(&g)?;
                Ok(Individual::new(g, o, provenance))
            })
            .collect()
    }
}

/// Produces `count` offspring genomes by tournament selection, crossover,
/// adaptive mutation and relay repair.
pub fn make_offspring(population: &[Individual], ctx: &GenerationContext<'_>, count: usize, rng: &mut impl Rng) -> Result<Vec<Genome>> {
    let geo = &ctx.scene.geometry;
    let p = ctx.params;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = tournament_select(population, p.tournament_size, rng);
        let b = tournament_select(population, p.tournament_size, rng);
        let (c1, c2) = if rng.random::<f64>() < p.p_crossover {
            sbx_crossover(&population[a].genome, &population[b].genome, ctx.bounds, p.eta_c, rng)?
        } else {
            (population[a].genome.clone(), population[b].genome.clone())
        };
        for child in [c1, c2] {
            if out.len() == count {
                break;
            }
            let m = adaptive_mutation(&child, geo, ctx.bounds, p.p_mutation, ctx.delta_n, geo.len(), p.eta_m, rng);
            out.push(encoding::repair_relays(m, geo, ctx.bounds));
        }
    }
    Ok(out)
}

/// Truncates a ranked union to `size` members: whole fronts in rank order,
/// the last one cut by descending crowding.
pub fn environmental_selection(mut union: Vec<Individual>, size: usize) -> Vec<Individual> {
    if union.len() <= size {
        sort_population(&mut union);
        return union;
    }
    let objs: Vec<ObjectiveVector> = union.iter().map(|i| i.objectives).collect();
    let mut keep = Vec::with_capacity(size);
    for front in non_dominated_sort(&objs) {
        if keep.len() + front.len() <= size {
            keep.extend(front);
            if keep.len() == size {
                break;
            }
            continue;
        }
        let points: Vec<[f64; 4]> = front.iter().map(|&i| objs[i].values()).collect();
        let dist = crowding_distance(&points);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(front[a].cmp(&front[b])));
        keep.extend(order.into_iter().take(size - keep.len()).map(|k| front[k]));
        break;
    }
    keep.sort_unstable();
    let mut slots: Vec<Option<Individual>> = union.into_iter().map(Some).collect();
    let mut next: Vec<Individual> = keep.into_iter().filter_map(|i| slots[i].take()).collect();
    sort_population(&mut next);
    next
}

/// One elitist generation. Offspring identical to an existing member are
/// discarded before the merge, so a population without variation is a fixed
/// point.
pub fn run_generation(population: Vec<Individual>, ctx: &GenerationContext<'_>, rng: &mut impl Rng) -> Result<Vec<Individual>> {
    let size = population.len();
    let offspring = make_offspring(&population, ctx, size, rng)?;
    let mut seen: HashSet<Vec<u64>> = population.iter().map(|i| i.genome.key()).collect();
    let fresh: Vec<Genome> = offspring.into_iter().filter(|g| seen.insert(g.key())).collect();
    let mut union = population;
    union.extend(ctx.evaluate_all(fresh, Provenance::Offspring)?);
    Ok(environmental_selection(union, size))
}
