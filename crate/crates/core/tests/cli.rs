use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn vanet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vanet-moo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.toml");
    let text = format!(
        "seed = 11\noutput_dir = \"{}\"\n\n[scenario]\narchetype = \"fluctuating\"\nduration_s = 4\n\n[algorithm]\npopulation = 20\ngenerations = 4\n{extra}",
        dir.join("out").display()
    );
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_metrics_fronts_and_summary() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), "gamma = 0.5\n");
    let out = vanet(&["run", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out");
    let metrics = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert_eq!(
        lines.next(),
        Some("second,n_vehicles,avg_delay_s,load_variance,avg_sinr,path_stability")
    );
    assert_eq!(lines.count(), 4);
    for k in 1..=4 {
        let front = fs::read_to_string(dir.join(format!("pareto_t{k}.csv"))).unwrap();
        assert!(front.starts_with("f1,f2,f3,f4,violation\n"));
        assert!(front.lines().count() >= 2);
    }
    for f in ["fronts.svg", "metrics.svg", "summary.json"] {
        assert!(dir.join(f).is_file(), "{f} missing");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 11);
    assert_eq!(summary["runs"][0]["gamma"], 0.5);
    assert_eq!(summary["runs"][0]["seconds"], 4);
}

#[test]
fn gamma_flag_sweeps_into_subdirectories() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), "");
    let out_dir = tmp.path().join("sweep");
    let out = vanet(&[
        "run",
        "--config",
        &cfg,
        "--gamma",
        "0,0.3,0.5,0.8",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for g in ["gamma_0", "gamma_0.3", "gamma_0.5", "gamma_0.8"] {
        assert!(out_dir.join(g).join("metrics.csv").is_file(), "{g} missing");
    }
    assert!(out_dir.join("summary.json").is_file());
    assert!(out_dir.join("metrics_comparison.svg").is_file());
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn seed_flag_overrides_the_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), "");
    let read = |seed: &str, name: &str| {
        let dir = tmp.path().join(name);
        let out = vanet(&["run", "--config", &cfg, "--seed", seed, "--out", dir.to_str().unwrap()]);
        assert!(out.status.success());
        fs::read(dir.join("metrics.csv")).unwrap()
    };
    let a = read("11", "a");
    let b = read("11", "b");
    let c = read("12", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn invalid_config_exits_2_naming_the_field() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), "crossover_rate = 1.5\n");
    let out = vanet(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("algorithm.crossover_rate"));

    let missing = tmp.path().join("absent.toml");
    let out = vanet(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = vanet(&["run"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_refuses_large_instances_and_bad_grids() {
    let tmp = TempDir::new().unwrap();
    let vehicles: Vec<String> = (1..=5)
        .map(|i| format!("{{ id = {i}, x = {}.0, y = 0.0, vx = 30.0, vy = 0.0 }}", 40 * i))
        .collect();
    let big = tmp.path().join("big.toml");
    fs::write(
        &big,
        format!(
            "seed = 1\n[oracle]\nhops = 2\ns_b_grid_bits = [1e5, 4e5, 8e5]\np_n_grid_mw = [1e3, 1e4, 1e5]\nvehicles = [{}]\n",
            vehicles.join(", ")
        ),
    )
    .unwrap();
    let out = vanet(&["oracle", "--config", big.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too large"));

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "seed = 1\n[oracle]\ns_b_grid_bits = \"wide\"\n").unwrap();
    let out = vanet(&["oracle", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("oracle.s_b_grid_bits"));
}

#[test]
fn oracle_on_a_single_vehicle_matches_exactly() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("one.toml");
    fs::write(
        &cfg,
        "seed = 3\n[oracle]\nhops = 1\ns_b_grid_bits = [1e5, 1e6]\np_n_grid_mw = [1e3, 1e5]\npopulation = 8\ngenerations = 5\nseeds = [0]\nvehicles = [{ id = 1, x = 0.0, y = 0.0, vx = 30.0, vy = 0.0 }]\n",
    )
    .unwrap();
    let out_dir = tmp.path().join("o");
    let out = vanet(&["oracle", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("oracle_report.json")).unwrap()).unwrap();
    assert!(report["oracle_points"].as_u64().unwrap() >= 1);
    assert_eq!(report["max_dominated"], 0);
    assert_eq!(report["min_ratio"], 1.0);
    assert!(out_dir.join("oracle_front.csv").is_file());
}

fn per_second_counts(csv_text: &str, fps: usize) -> Vec<usize> {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let mut counts = std::collections::BTreeMap::<i64, usize>::new();
    for row in rdr.records() {
        let frame: i64 = row.unwrap()[0].parse().unwrap();
        *counts.entry(frame).or_default() += 1;
    }
    // one sample per second: its middle frame
    counts
        .iter()
        .filter(|(f, _)| (**f - 1) as usize % fps == fps / 2)
        .map(|(_, c)| *c)
        .collect()
}

#[test]
fn gen_scenario_follows_the_archetype_curve() {
    let tmp = TempDir::new().unwrap();
    for (name, grows) in [("increasing", true), ("decreasing", false)] {
        let path = tmp.path().join(format!("{name}.csv"));
        let out = vanet(&["gen-scenario", "--archetype", name, "--duration", "40", "--out", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("frame,id,x,y,xVelocity,yVelocity\n"));
        let counts = per_second_counts(&text, 25);
        assert_eq!(counts.len(), 40);
        let (first, last) = (counts[0], counts[39]);
        assert_eq!(last > first, grows, "{name}: {first} -> {last}");
        assert_eq!(last < first, !grows, "{name}: {first} -> {last}");
    }
}

#[test]
fn gen_scenario_rejects_unknown_archetype_and_zero_duration() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("x.csv");
    let out = vanet(&["gen-scenario", "--archetype", "zigzag", "--duration", "40", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["increasing", "fluctuating", "decreasing"] {
        assert!(err.contains(name), "{err}");
    }
    let out = vanet(&["gen-scenario", "--archetype", "increasing", "--duration", "0", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!path.exists());
}

#[test]
fn generated_csv_runs_as_a_trajectory() {
    let tmp = TempDir::new().unwrap();
    let csv_path = tmp.path().join("traj.csv");
    let out = vanet(&["gen-scenario", "--archetype", "decreasing", "--duration", "3", "--out", csv_path.to_str().unwrap(), "--seed", "5"]);
    assert!(out.status.success());
    let cfg = tmp.path().join("traj.toml");
    fs::write(
        &cfg,
        "seed = 5\noutput_dir = \"res\"\n[scenario]\ntrajectory = \"traj.csv\"\n[algorithm]\npopulation = 12\ngenerations = 2\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_vanet-moo"))
        .current_dir(tmp.path())
        .args(["run", "--config", "traj.toml"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = fs::read_to_string(tmp.path().join("res/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 4);
}
