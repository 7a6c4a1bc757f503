//! Property checks and reference implementations shared by the property
//! suite and the acceptance harness.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use std::collections::BTreeMap;

use vanet_moo::channel::{self, ChannelParams, ShadowField};
use vanet_moo::config::{GammaSetting, RunConfig};
use vanet_moo::encoding::{adapt_dimension, repair_relays, Bounds, GeneBlock, GeneGrid, Genome};
use vanet_moo::evolution::{
    constrained_dominates, crowding_distance, environmental_selection, non_dominated_sort, polynomial_mutation,
    sbx_pair, EvoParams, Individual, Provenance,
};
use vanet_moo::objectives::{eval_stability, evaluate, inverse_sinr_mean, LinkMetric, ObjectiveVector, QosThresholds};
use vanet_moo::oracle::{enumerate_front, hypervolume, TinyInstance};
use vanet_moo::scene::{Geometry, Scene};
use vanet_moo::temporal::{initialize_population, run_second, SolverConfig};
use vanet_moo::trajectory::{
    read_trajectory, synthesize_scenario, write_scenario_csv, Archetype, ScenarioSpec, Snapshot, VehicleId,
    VehicleState,
};

/// Dominance written out from the definition, independent of the library.
pub fn naive_dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    let (fa, fb) = (a.violation <= 0.0, b.violation <= 0.0);
    if fa != fb {
        return fa;
    }
    if !fa {
        return a.violation < b.violation;
    }
    let (x, y) = (a.values(), b.values());
    x.iter().zip(&y).all(|(p, q)| p <= q) && x.iter().zip(&y).any(|(p, q)| p < q)
}

/// Fronts by repeatedly peeling the undominated rest of a full dominance
/// matrix.
pub fn naive_fronts(objs: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let n = objs.len();
    let matrix: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| naive_dominates(&objs[i], &objs[j])).collect())
        .collect();
    let mut left: Vec<usize> = (0..n).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> = left
            .iter()
            .copied()
            .filter(|&j| !left.iter().any(|&i| matrix[i][j]))
            .collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

/// Hypervolume by inclusion-exclusion over all subsets; small inputs only.
pub fn inclusion_exclusion_hv(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    let n = points.len();
    assert!(n <= 12);
    let mut total = 0.0;
    for mask in 1u32..(1 << n) {
        let mut corner = vec![f64::NEG_INFINITY; reference.len()];
        for (i, p) in points.iter().enumerate() {
            if mask & (1 << i) != 0 {
                for (c, v) in corner.iter_mut().zip(p) {
                    *c = c.max(*v);
                }
            }
        }
        let vol: f64 = corner.iter().zip(reference).map(|(c, r)| r - c).product();
        total += if mask.count_ones() % 2 == 1 { vol } else { -vol };
    }
    total
}

pub fn objective_vector() -> impl Strategy<Value = ObjectiveVector> {
    // a coarse lattice half the time so ties and duplicates show up
    let coord = prop_oneof![(0u8..4).prop_map(f64::from), 0.0..1.0f64];
    let violation = prop_oneof![3 => Just(0.0), 1 => (1u8..4).prop_map(f64::from), 1 => 0.0..2.0f64];
    ([coord.clone(), coord.clone(), coord.clone(), coord], violation)
        .prop_map(|(f, v)| ObjectiveVector::new(f, v))
}

/// A snapshot of 1 to 8 vehicles and a genome over it whose relay slots may
/// name absent vehicles, the source itself or vehicles out of range.
pub fn scene_genome() -> impl Strategy<Value = (Snapshot, Genome, usize)> {
    (1usize..=8, 1usize..=3).prop_flat_map(|(n, hops)| {
        let xs = prop::collection::vec((0.0..900.0f64, 0u8..4), n);
        let relays = prop::collection::vec(prop::collection::vec(1u32..=12, hops), n);
        (xs, relays).prop_map(move |(xs, relays)| {
            let vehicles: Vec<VehicleState> = xs
                .iter()
                .enumerate()
                .map(|(i, &(x, lane))| VehicleState::new(i as u32 + 1, x, 3.75 * f64::from(lane), 30.0, 0.0))
                .collect();
            let snapshot = Snapshot::new(1, 0, vehicles).unwrap();
            let genome = Genome {
                roster: snapshot.ids().collect(),
                blocks: relays
                    .into_iter()
                    .map(|r| GeneBlock {
                        s_b: 1e6,
                        p_n: 1e4,
                        relays: r.into_iter().map(VehicleId).collect(),
                    })
                    .collect(),
            };
            (snapshot, genome, hops)
        })
    })
}

pub fn check_f4_reflexive((_, genome, _): (Snapshot, Genome, usize)) -> Result<(), TestCaseError> {
    prop_assert_eq!(eval_stability(&genome, Some(&genome)), 0.0);
    Ok(())
}

pub fn check_repair_idempotent((snapshot, genome, hops): (Snapshot, Genome, usize)) -> Result<(), TestCaseError> {
    let bounds = Bounds { hops, ..Bounds::default() };
    let geo = Geometry::new(&snapshot, bounds.d_max);
    let once = repair_relays(genome, &geo, &bounds);
    prop_assert!(once.check(&geo, &bounds).is_ok());
    for (i, b) in once.blocks.iter().enumerate() {
        let mut cur = i;
        for r in &b.relays {
            let j = geo.index_of(*r).unwrap();
            if j != i {
                prop_assert!(geo.distance(cur, j) <= geo.d_max());
                cur = j;
            }
        }
    }
    let twice = repair_relays(once.clone(), &geo, &bounds);
    prop_assert_eq!(twice, once);
    Ok(())
}

pub fn sbx_inputs() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-1e6..1e6f64, -1e6..1e6f64, 0.0..1.0f64, 0.0..50.0f64)
}

pub fn check_sbx_mean((y1, y2, u, eta): (f64, f64, f64, f64)) -> Result<(), TestCaseError> {
    let (c1, c2) = sbx_pair(y1, y2, u, eta);
    let scale = y1.abs().max(y2.abs()).max(c1.abs()).max(c2.abs()).max(1.0);
    prop_assert!(((c1 + c2) - (y1 + y2)).abs() <= 1e-9 * scale);
    prop_assert!(c1 <= c2);
    Ok(())
}

pub fn mutation_inputs() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
    (0.0..1e3f64, 1e-3..1e3f64, 0.0..=1.0f64, 0.0..1.0f64, 0.0..40.0f64)
        .prop_map(|(lo, w, t, u, eta)| (lo + t * w, lo, lo + w, u, eta))
}

pub fn check_mutation_bounded((y, lo, hi, u, eta): (f64, f64, f64, f64, f64)) -> Result<(), TestCaseError> {
    let m = polynomial_mutation(y, lo, hi, eta, u);
    prop_assert!(m >= lo && m <= hi, "{m} outside [{lo}, {hi}]");
    Ok(())
}

pub fn population() -> impl Strategy<Value = Vec<ObjectiveVector>> {
    prop::collection::vec(objective_vector(), 0..40)
}

pub fn check_front_partition(objs: Vec<ObjectiveVector>) -> Result<(), TestCaseError> {
    let fronts = non_dominated_sort(&objs);
    let mut seen = vec![false; objs.len()];
    for f in &fronts {
        prop_assert!(!f.is_empty());
        for &i in f {
            prop_assert!(!seen[i], "index {} in two fronts", i);
            seen[i] = true;
        }
    }
    prop_assert!(seen.iter().all(|&s| s));
    for (k, f) in fronts.iter().enumerate() {
        for &a in f {
            for &b in f {
                prop_assert!(!naive_dominates(&objs[a], &objs[b]));
            }
            if k > 0 {
                prop_assert!(fronts[k - 1].iter().any(|&p| naive_dominates(&objs[p], &objs[a])));
            }
        }
    }
    let mut got: Vec<Vec<usize>> = fronts;
    let mut want = naive_fronts(&objs);
    got.iter_mut().for_each(|f| f.sort_unstable());
    want.iter_mut().for_each(|f| f.sort_unstable());
    prop_assert_eq!(got, want);
    Ok(())
}

pub fn hv_inputs() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..=4).prop_flat_map(|d| {
        let point = prop::collection::vec(prop_oneof![(0u8..4).prop_map(|v| f64::from(v) / 4.0), 0.0..1.0f64], d);
        (prop::collection::vec(point.clone(), 0..8), point)
    })
}

pub fn check_hv_monotone((points, extra): (Vec<Vec<f64>>, Vec<f64>)) -> Result<(), TestCaseError> {
    let reference = vec![1.0; extra.len()];
    let base = hypervolume(&points, &reference).unwrap();
    let mut more = points.clone();
    more.push(extra);
    let grown = hypervolume(&more, &reference).unwrap();
    prop_assert!(grown >= base - 1e-12, "{} < {}", grown, base);
    let exact = inclusion_exclusion_hv(&more, &reference);
    prop_assert!((grown - exact).abs() <= 1e-9, "{} vs {}", grown, exact);
    Ok(())
}

pub const CASES: u32 = 1000;

fn run<S: Strategy>(strategy: S, check: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, check).map_err(|e| e.to_string())
}

/// The headline invariants with their outcomes, for reporting.
pub fn run_core() -> Vec<(&'static str, Result<(), String>)> {
    vec![
        ("f4 reflexivity", run(scene_genome(), check_f4_reflexive)),
        ("repair idempotence", run(scene_genome(), check_repair_idempotent)),
        ("SBX mean preservation", run(sbx_inputs(), check_sbx_mean)),
        ("mutation stays in bounds", run(mutation_inputs(), check_mutation_bounded)),
        ("front partition", run(population(), check_front_partition)),
        ("hypervolume monotonicity", run(hv_inputs(), check_hv_monotone)),
    ]
}

// ---- trajectory ----

pub fn shuffled_vehicles() -> impl Strategy<Value = Vec<VehicleState>> {
    prop::collection::hash_set(1u32..200, 1..30)
        .prop_map(|ids| ids.into_iter().collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|ids| {
            ids.into_iter()
                .map(|id| VehicleState::new(id, f64::from(id) * 7.0, 0.0, 25.0, 0.0))
                .collect()
        })
}

pub fn check_snapshot_lookup(vehicles: Vec<VehicleState>) -> Result<(), TestCaseError> {
    let snap = Snapshot::new(1, 13, vehicles).unwrap();
    let ids: Vec<VehicleId> = snap.ids().collect();
    prop_assert!(ids.windows(2).all(|w| w[0] < w[1]));
    for probe in 0u32..205 {
        let id = VehicleId(probe);
        let linear = ids.iter().position(|&x| x == id);
        prop_assert_eq!(snap.index_of(id), linear);
    }
    Ok(())
}

pub fn small_spec() -> impl Strategy<Value = ScenarioSpec> {
    (0usize..3, 2u32..5, 1u32..7, any::<u64>(), 1u32..12).prop_map(|(a, duration, fps, seed, n)| ScenarioSpec {
        initial_vehicles: n,
        frame_rate: fps,
        ..ScenarioSpec::for_archetype(ARCHETYPES[a], duration, seed)
    })
}

pub const ARCHETYPES: [Archetype; 3] = [Archetype::Increasing, Archetype::Fluctuating, Archetype::Decreasing];

pub fn check_csv_round_trip(spec: ScenarioSpec) -> Result<(), TestCaseError> {
    let direct = synthesize_scenario(&spec).unwrap();
    let mut buf = Vec::new();
    write_scenario_csv(&spec, &mut buf).unwrap();
    let loaded = read_trajectory(buf.as_slice(), spec.frame_rate).unwrap();
    prop_assert_eq!(loaded, direct);
    Ok(())
}

pub fn check_fluctuating_not_monotone(seed: u64) -> Result<(), TestCaseError> {
    let spec = ScenarioSpec::for_archetype(Archetype::Fluctuating, 40, seed);
    let counts: Vec<usize> = synthesize_scenario(&spec).unwrap().iter().map(Snapshot::len).collect();
    prop_assert!(counts.windows(2).any(|w| w[1] > w[0]), "never rises: {:?}", counts);
    prop_assert!(counts.windows(2).any(|w| w[1] < w[0]), "never falls: {:?}", counts);
    Ok(())
}

// ---- channel ----

pub fn check_power_decreasing((d, factor, p_t): (f64, f64, f64)) -> Result<(), TestCaseError> {
    let p = ChannelParams::default();
    let near = channel::received_power(p_t, d, 0.0, 0.0, &p).unwrap();
    let far = channel::received_power(p_t, d * factor, 0.0, 0.0, &p).unwrap();
    prop_assert!(far < near, "{} m: {}, {} m: {}", d, near, d * factor, far);
    Ok(())
}

pub fn power_inputs() -> impl Strategy<Value = (f64, f64, f64)> {
    (1.0001..2000.0f64, 1.000001..5.0f64, 1e-3..1e3f64)
}

pub fn check_sinr_decreasing((xs, base, factor, sigma): (Vec<f64>, f64, f64, f64)) -> Result<(), TestCaseError> {
    let p = ChannelParams::default();
    let vehicles: Vec<VehicleState> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| VehicleState::new(i as u32 + 1, x, 0.0, 20.0 + i as f64, 0.0))
        .collect();
    let snap = Snapshot::new(1, 13, vehicles).unwrap();
    let shadow = ShadowField::new(5, 1, sigma);
    let mut powers: BTreeMap<VehicleId, f64> = snap.ids().map(|id| (id, base)).collect();
    let (tx, rx, k) = (VehicleId(1), VehicleId(2), VehicleId(3));
    let before = channel::sinr(tx, rx, &snap, &powers, &p, &shadow).unwrap();
    *powers.get_mut(&k).unwrap() *= factor;
    let after = channel::sinr(tx, rx, &snap, &powers, &p, &shadow).unwrap();
    prop_assert!(after < before, "{} -> {}", before, after);
    Ok(())
}

pub fn sinr_inputs() -> impl Strategy<Value = (Vec<f64>, f64, f64, f64)> {
    (
        prop::collection::vec(0.0..600.0f64, 3..6),
        1e-2..1e2f64,
        1.01..100.0f64,
        0.0..8.0f64,
    )
}

pub fn check_db_threshold((sinr, threshold_db): (f64, f64)) -> Result<(), TestCaseError> {
    let linear = channel::from_db(threshold_db);
    if ((sinr - linear) / linear).abs() > 1e-9 {
        prop_assert_eq!(channel::to_db(sinr) >= threshold_db, sinr >= linear);
    }
    Ok(())
}

pub fn db_inputs() -> impl Strategy<Value = (f64, f64)> {
    (-40.0..60.0f64).prop_flat_map(|t| {
        let near = channel::from_db(t);
        (prop_oneof![1e-5..1e7f64, (near * 0.999)..(near * 1.001)], Just(t))
    })
}

// ---- encoding ----

pub fn check_adapt_valid(
    ((old_snap, old, hops), (xs, keep, seed)): ((Snapshot, Genome, usize), (Vec<f64>, Vec<bool>, u64)),
) -> Result<(), TestCaseError> {
    let bounds = Bounds { hops, ..Bounds::default() };
    let old_geo = Geometry::new(&old_snap, bounds.d_max);
    let old = repair_relays(old, &old_geo, &bounds);
    // survivors keep their ids; newcomers take ids above the old roster
    let mut vehicles: Vec<VehicleState> = old_snap
        .vehicles()
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(v, _)| *v)
        .collect();
    vehicles.extend(xs.iter().enumerate().map(|(i, &x)| VehicleState::new(100 + i as u32, x, 3.75, -25.0, 0.0)));
    prop_assume!(!vehicles.is_empty());
    let snap = Snapshot::new(2, 38, vehicles).unwrap();
    let geo = Geometry::new(&snap, bounds.d_max);
    let mut rng = vanet_moo::rng::stream(seed, vanet_moo::rng::Role::Inherit, &[2]);
    let adapted = adapt_dimension(&old, &geo, &bounds, &mut rng);
    prop_assert!(adapted.check(&geo, &bounds).is_ok());
    prop_assert_eq!(adapted.dimension(), (2 + hops) * snap.len());
    for (id, block) in adapted.roster.iter().zip(&adapted.blocks) {
        if let Some(prev) = old.block(*id) {
            prop_assert_eq!(block.s_b, prev.s_b);
            prop_assert_eq!(block.p_n, prev.p_n);
        }
    }
    Ok(())
}

pub fn adapt_inputs() -> impl Strategy<Value = ((Snapshot, Genome, usize), (Vec<f64>, Vec<bool>, u64))> {
    (
        scene_genome(),
        (
            prop::collection::vec(0.0..900.0f64, 0..5),
            prop::collection::vec(any::<bool>(), 8),
            any::<u64>(),
        ),
    )
}

// ---- objectives ----

pub fn genome_pair() -> impl Strategy<Value = (Genome, Genome)> {
    (scene_genome(), scene_genome(), any::<bool>()).prop_map(|((_, a, _), (_, b, _), same)| {
        if same {
            // same roster and hops, independent relays
            let mut b2 = a.clone();
            for (blk, other) in b2.blocks.iter_mut().zip(b.blocks.iter().cycle()) {
                for (r, o) in blk.relays.iter_mut().zip(other.relays.iter().cycle()) {
                    *r = *o;
                }
            }
            (a, b2)
        } else {
            (a, b)
        }
    })
}

pub fn check_f4_range_and_symmetry((a, b): (Genome, Genome)) -> Result<(), TestCaseError> {
    let ab = eval_stability(&a, Some(&b));
    let ba = eval_stability(&b, Some(&a));
    prop_assert!((0.0..=1.0).contains(&ab), "f4 = {}", ab);
    prop_assert!((0.0..=1.0).contains(&ba), "f4 = {}", ba);
    prop_assert_eq!(eval_stability(&a, None), 0.0);
    if a.roster == b.roster && a.hops() == b.hops() {
        prop_assert_eq!(ab, ba);
    }
    Ok(())
}

/// A repaired genome with random continuous genes, on a shadowed scene, with
/// thresholds loose enough that feasible genomes occur.
pub fn evaluated_case() -> impl Strategy<Value = (Scene, Genome, QosThresholds)> {
    (
        scene_genome(),
        prop::collection::vec((1e5..1e7f64, 1e3..1e5f64), 8),
        any::<u64>(),
        (-140.0..-60.0f64, -30.0..20.0f64, 1e-3..0.2f64),
    )
        .prop_map(|((snap, mut g, hops), genes, seed, (p_dbm, s_db, delay))| {
            let bounds = Bounds { hops, ..Bounds::default() };
            let scene = Scene::new(snap, &ChannelParams::default(), bounds.d_max, seed).unwrap();
            for (b, (s, p)) in g.blocks.iter_mut().zip(genes) {
                b.s_b = s;
                b.p_n = p;
            }
            let g = repair_relays(g, &scene.geometry, &bounds);
            let thr = QosThresholds {
                min_rx_power_w: channel::from_db(p_dbm - 30.0),
                min_sinr: channel::from_db(s_db),
                max_delay_s: delay,
            };
            (scene, g, thr)
        })
}

pub fn check_objective_laws((scene, g, thr): (Scene, Genome, QosThresholds)) -> Result<(), TestCaseError> {
    let e = evaluate(&g, &scene, None, &thr).unwrap();
    let o = e.objectives;
    prop_assert!(o.values().iter().all(|v| v.is_finite() && *v >= 0.0));
    prop_assert!(o.violation >= 0.0);

    // violation is zero exactly when every constraint holds
    let v = scene.snapshot.vehicles();
    let d_max = scene.geometry.d_max();
    let links_ok = e.links.iter().all(|l| {
        l.rx_power_w >= thr.min_rx_power_w && l.sinr >= thr.min_sinr && l.distance_m <= d_max
    });
    let delays_ok = e.delays.iter().all(|&d| d <= thr.max_delay_s);
    let served_ok = (0..v.len()).all(|i| {
        let reachable = (0..v.len()).any(|j| j != i && vanet_moo::trajectory::distance(&v[i], &v[j]) <= d_max);
        !reachable || e.links.iter().any(|l| l.source == v[i].id)
    });
    prop_assert_eq!(o.violation == 0.0, links_ok && delays_ok && served_ok);

    // f2 vanishes exactly when every vehicle relays the same number of hops
    let mut counts = vec![0usize; v.len()];
    for l in &e.links {
        counts[scene.geometry.index_of(l.rx).unwrap()] += 1;
    }
    let equal = counts.windows(2).all(|w| w[0] == w[1]);
    prop_assert_eq!(o.f2 <= 1e-20, equal, "f2 = {}, counts {:?}", o.f2, counts);

    // scaling every SINR by k scales f3 by 1/k
    for k in [0.5, 3.0, 1e4] {
        let scaled: Vec<_> = e.links.iter().map(|l| LinkMetric { sinr: l.sinr * k, ..*l }).collect();
        let f3k = inverse_sinr_mean(&g, &scaled);
        prop_assert!((f3k - o.f3 / k).abs() <= 1e-12 * (o.f3 / k).max(f64::MIN_POSITIVE));
    }
    Ok(())
}

// ---- evolution ----

pub fn check_crowding_bounds(points: Vec<Vec<f64>>) -> Result<(), TestCaseError> {
    let m = points.first().map_or(0, Vec::len);
    let total = crowding_distance(&points);
    if points.len() <= 2 {
        prop_assert!(total.iter().all(|d| d.is_infinite()));
        return Ok(());
    }
    for (i, d) in total.iter().enumerate() {
        prop_assert!(*d >= 0.0);
        if d.is_finite() {
            prop_assert!(*d <= m as f64 + 1e-12, "point {} has {}", i, d);
        }
    }
    for obj in 0..m {
        let column: Vec<[f64; 1]> = points.iter().map(|p| [p[obj]]).collect();
        for c in crowding_distance(&column) {
            prop_assert!(c.is_infinite() || (0.0..=1.0 + 1e-12).contains(&c), "contribution {}", c);
        }
    }
    Ok(())
}

pub fn crowding_inputs() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=4).prop_flat_map(|m| {
        prop::collection::vec(prop::collection::vec(prop_oneof![(0u8..3).prop_map(f64::from), -5.0..5.0f64], m), 0..25)
    })
}

pub fn check_selection_keeps_front0((objs, size): (Vec<ObjectiveVector>, usize)) -> Result<(), TestCaseError> {
    let front0 = non_dominated_sort(&objs).into_iter().next().unwrap_or_default();
    prop_assume!(front0.len() <= size);
    let union: Vec<Individual> = objs
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let g = Genome {
                roster: vec![VehicleId(i as u32 + 1)],
                blocks: vec![],
            };
            Individual::new(g, *o, Provenance::Random)
        })
        .collect();
    let kept = environmental_selection(union, size);
    prop_assert_eq!(kept.len(), size.min(objs.len()));
    for i in front0 {
        let id = VehicleId(i as u32 + 1);
        prop_assert!(kept.iter().any(|k| k.genome.roster[0] == id), "front-0 member {} dropped", i);
    }
    Ok(())
}

pub fn selection_inputs() -> impl Strategy<Value = (Vec<ObjectiveVector>, usize)> {
    (prop::collection::vec(objective_vector(), 0..40), 1usize..40)
}

// ---- temporal ----

pub fn check_inheritance((first, second, gamma, pop, seed): (Snapshot, Snapshot, f64, usize, u64)) -> Result<(), TestCaseError> {
    let config = SolverConfig {
        gamma,
        evo: EvoParams {
            pop_size: pop,
            max_generations: 1,
            ..EvoParams::default()
        },
        bounds: Bounds { hops: 2, ..Bounds::default() },
        channel_seed: seed,
        search_seed: seed,
        ..SolverConfig::default()
    };
    let prev = run_second(first, None, &config).unwrap();
    let rep = prev.representative().objectives;
    prop_assert!(prev.population.iter().all(|i| !constrained_dominates(&i.objectives, &rep)));
    let scene = config.scene(second).unwrap();
    let init = initialize_population(&scene, Some(&prev), &config).unwrap();
    let inherited = init.iter().filter(|i| i.provenance == Provenance::Inherited).count();
    let expected = (gamma * pop as f64 + 0.5).floor() as usize;
    prop_assert_eq!(inherited, expected);
    prop_assert_eq!(init.len(), pop);
    for i in &init {
        prop_assert!(i.genome.check(&scene.geometry, &config.bounds).is_ok());
    }
    Ok(())
}

pub fn inheritance_inputs() -> impl Strategy<Value = (Snapshot, Snapshot, f64, usize, u64)> {
    let snap = |second: u32| {
        prop::collection::btree_map(1u32..12, (0.0..700.0f64, 0u8..3), 1..7).prop_map(move |m| {
            let v = m
                .into_iter()
                .map(|(id, (x, lane))| VehicleState::new(id, x, 3.75 * f64::from(lane), 28.0, 0.0))
                .collect();
            Snapshot::new(second, 0, v).unwrap()
        })
    };
    (snap(1), snap(2), 0.0..=1.0f64, (2usize..12).prop_map(|h| 2 * h), any::<u64>())
}

// ---- oracle ----

pub fn check_oracle_certificate((instance, picks): (TinyInstance, Vec<usize>)) -> Result<(), TestCaseError> {
    let front = enumerate_front(&instance).unwrap();
    let oracle: Vec<ObjectiveVector> = front.iter().map(|p| p.objectives).collect();
    prop_assert!(!oracle.is_empty());
    for a in &oracle {
        for b in &oracle {
            prop_assert!(!naive_dominates(a, b));
        }
    }
    // any grid genome is matched or beaten by the oracle set
    let scene = instance.scene().unwrap();
    let grid = instance.bounds.grid.clone().unwrap();
    let n = scene.len();
    let ids = scene.geometry.ids().to_vec();
    let blocks = ids
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let k = picks[i];
            GeneBlock {
                s_b: grid.s_b[k % grid.s_b.len()],
                p_n: grid.p_n[(k / 3) % grid.p_n.len()],
                relays: vec![ids[(k / 9) % n]],
            }
        })
        .collect();
    let g = repair_relays(Genome { roster: ids, blocks }, &scene.geometry, &instance.bounds);
    let o = evaluate(&g, &scene, instance.previous.as_ref(), &instance.thresholds).unwrap().objectives;
    prop_assert!(oracle.iter().all(|p| !naive_dominates(&o, p)), "grid genome beats the oracle");
    prop_assert!(oracle.iter().any(|p| *p == o || naive_dominates(p, &o)));
    Ok(())
}

pub fn oracle_inputs() -> impl Strategy<Value = (TinyInstance, Vec<usize>)> {
    (
        prop::collection::vec((0.0..350.0f64, 0u8..3, any::<bool>()), 1..4),
        any::<u64>(),
        any::<bool>(),
        prop::collection::vec(0usize..1000, 3),
    )
        .prop_map(|(vs, seed, with_prev, picks)| {
            let vehicles: Vec<VehicleState> = vs
                .iter()
                .enumerate()
                .map(|(i, &(x, lane, fwd))| {
                    VehicleState::new(i as u32 + 1, x, 3.75 * f64::from(lane), if fwd { 30.0 } else { -28.0 }, 0.0)
                })
                .collect();
            let n = vehicles.len() as u32;
            let snapshot = Snapshot::new(1, 13, vehicles).unwrap();
            let previous = with_prev.then(|| Genome {
                roster: snapshot.ids().collect(),
                blocks: (1..=n)
                    .map(|i| GeneBlock {
                        s_b: 1e5,
                        p_n: 1e3,
                        relays: vec![VehicleId(i % n + 1)],
                    })
                    .collect(),
            });
            let instance = TinyInstance {
                snapshot,
                channel: ChannelParams::default(),
                bounds: Bounds {
                    hops: 1,
                    grid: Some(GeneGrid {
                        s_b: vec![1e5, 1e6],
                        p_n: vec![1e3, 1e5],
                    }),
                    ..Bounds::default()
                },
                thresholds: QosThresholds::default(),
                channel_seed: seed,
                previous,
            };
            (instance, picks)
        })
}

// ---- config ----

pub fn run_config() -> impl Strategy<Value = RunConfig> {
    (
        any::<u64>(),
        (2usize..100).prop_map(|h| 2 * h),
        1usize..300,
        0.0..=1.0f64,
        prop::collection::vec(0.0..=1.0f64, 1..5),
        (-120.0..-40.0f64, -10.0..30.0f64, 1.0..500.0f64),
        (0.0..10.0f64, 1.5..5.0f64),
        (0usize..3, 2u32..100, 1u32..60),
        1usize..4,
    )
        .prop_map(|(seed, pop, gens, pc, gammas, (p_dbm, s_db, delay_ms), (sigma, exp), (a, dur, fps), hops)| {
            let mut cfg = RunConfig::from_toml(&format!("seed = {seed}\n")).unwrap();
            cfg.algorithm.population = pop;
            cfg.algorithm.generations = gens;
            cfg.algorithm.crossover_rate = pc;
            cfg.algorithm.gamma = if gammas.len() == 1 {
                GammaSetting::One(gammas[0])
            } else {
                GammaSetting::Sweep(gammas)
            };
            cfg.qos.min_rx_power_dbm = p_dbm;
            cfg.qos.min_sinr_db = s_db;
            cfg.qos.max_delay_ms = delay_ms;
            cfg.channel.shadow_sigma_db = sigma;
            cfg.channel.path_loss_exponent = exp;
            cfg.scenario.archetype = Some(ARCHETYPES[a]);
            cfg.scenario.duration_s = Some(dur);
            cfg.scenario.frame_rate = Some(fps);
            cfg.bounds.hops = hops;
            cfg
        })
}

pub fn check_config_round_trip(cfg: RunConfig) -> Result<(), TestCaseError> {
    let toml = cfg.to_toml().unwrap();
    prop_assert_eq!(RunConfig::from_toml(&toml).unwrap(), cfg.clone());
    let json = cfg.to_json().unwrap();
    prop_assert_eq!(RunConfig::from_json(&json).unwrap(), cfg);
    Ok(())
}

/// Every module invariant with its outcome, for reporting.
pub fn run_module_invariants() -> Vec<(&'static str, Result<(), String>)> {
    vec![
        ("snapshot lookup", run(shuffled_vehicles(), check_snapshot_lookup)),
        ("trajectory CSV round trip", run(small_spec(), check_csv_round_trip)),
        ("fluctuating roster not monotone", run(any::<u64>(), check_fluctuating_not_monotone)),
        ("received power decreasing", run(power_inputs(), check_power_decreasing)),
        ("SINR decreasing in interference", run(sinr_inputs(), check_sinr_decreasing)),
        ("dB and linear checks agree", run(db_inputs(), check_db_threshold)),
        ("adapted genomes valid", run(adapt_inputs(), check_adapt_valid)),
        ("f4 range and symmetry", run(genome_pair(), check_f4_range_and_symmetry)),
        ("violation, f2 and f3 laws", run(evaluated_case(), check_objective_laws)),
        ("crowding bounds", run(crowding_inputs(), check_crowding_bounds)),
        ("selection keeps front 0", run(selection_inputs(), check_selection_keeps_front0)),
        ("inheritance count and validity", run(inheritance_inputs(), check_inheritance)),
        ("oracle certificate", run(oracle_inputs(), check_oracle_certificate)),
        ("config round trip", run(run_config(), check_config_round_trip)),
    ]
}
