use std::path::Path;
use std::process::{Command, Output};

use d2d_relay::cli::manifest_path;
use d2d_relay::config::Config;
use d2d_relay::env::load_map;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_d2d-relay"));
    c.env_remove("RAYON_NUM_THREADS");
    c
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_SWEEP: &str = r#"
[d2d]
density_per_km2 = 200

[sweep]
axis = "ue_density"
grid = [0, 100, 200, 300, 400]
strategies = ["spr", "iar", "br"]
trials = 6
"#;

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["sweep", "--config", "s.toml", "--seed", "x1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--seed"));
    let o = run(&["sweep", "--frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["sweep", "--config", "missing.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn invalid_config_exits_two_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[d2d]\npair_distance = 1.5\n").unwrap();
    let o = run(&["simulate", "--config", "c.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("d2d") && stderr(&o).contains("pair_distance"), "{}", stderr(&o));

    std::fs::write(dir.path().join("c.toml"), "[bs]\nisd = 500\n").unwrap();
    let o = run(&["simulate", "--config", "c.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("isd"), "{}", stderr(&o));
}

#[test]
fn runtime_failure_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    // A 100 m map cannot hold a 350 m source-destination pair.
    let map = r#"{"bounds": {"width_m": 100, "height_m": 100}, "default_wall_loss_db": 5, "buildings": []}"#;
    std::fs::write(dir.path().join("m.json"), map).unwrap();
    std::fs::write(dir.path().join("c.toml"), "[map]\nfile = \"m.json\"\n").unwrap();
    let o = run(&["sweep", "--config", "c.toml", "--out", "r.csv", "--trials", "2"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!dir.path().join("r.csv").exists());
    assert!(!dir.path().join("r.csv.manifest.toml").exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn generate_map_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[map]\nseed = 4\n").unwrap();
    let o = run(&["generate-map", "--config", "c.toml", "--out", "m.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let map = load_map(&std::fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert!(!map.buildings().is_empty());

    // A config pointing at the written map simulates on it.
    std::fs::write(dir.path().join("d.toml"), "[map]\nfile = \"m.json\"\n").unwrap();
    let o = run(&["simulate", "--config", "d.toml", "--trials", "3", "--out", "routes.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let routes = std::fs::read_to_string(dir.path().join("routes.csv")).unwrap();
    let mut lines = routes.lines();
    assert_eq!(
        lines.next().unwrap(),
        "trial,strategy,band,outcome,hop_count,total_length_m,per_hop_success,cc_outage"
    );
    assert_eq!(lines.count(), 3);
}

#[test]
fn sweep_is_reproducible_from_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("s.toml"), SMALL_SWEEP).unwrap();
    let o = run(&["sweep", "--config", "s.toml", "--out", "a.csv", "--seed", "42", "--workers", "1"], p);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["sweep", "--config", "s.toml", "--out", "b.csv", "--seed", "42", "--workers", "4"], p);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = std::fs::read(p.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(p.join("b.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 1 + 5 * 3);

    let manifest = manifest_path(&p.join("a.csv"));
    let text = std::fs::read_to_string(&manifest).unwrap();
    assert!(text.contains(env!("CARGO_PKG_VERSION")));
    let config = Config::load(&manifest).unwrap();
    assert_eq!(config.seed.master, 42);
    let o = run(&["sweep", "--config", manifest.to_str().unwrap(), "--out", "c.csv"], p);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(a, std::fs::read(p.join("c.csv")).unwrap());

    let o = run(&["sweep", "--config", "s.toml", "--out", "d.csv", "--seed", "43"], p);
    assert!(o.status.success());
    assert_ne!(a, std::fs::read(p.join("d.csv")).unwrap());
}

#[test]
fn environment_overrides_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("s.toml"), SMALL_SWEEP).unwrap();
    let o = bin()
        .args(["sweep", "--config", "s.toml", "--out", "r.csv"])
        .env("D2D_RELAY__SWEEP__GRID", "[0]")
        .env("D2D_RELAY__SWEEP__STRATEGIES", "[\"spr\"]")
        .current_dir(p)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(p.join("r.csv")).unwrap().lines().count(), 2);
}

#[test]
fn validate_and_analyze_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["validate", "--out", "v.csv"], dir.path());
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{out}{}", stderr(&o));
    for name in ["a_function", "cc_coverage_ppp", "route_outage", "broadcast_bfs"] {
        assert!(out.lines().any(|l| l.starts_with(name) && l.ends_with("PASS")), "{out}");
    }
    assert!(dir.path().join("v.csv.manifest.toml").exists());

    let o = run(&["analyze", "--trials", "2000"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.starts_with("table,threshold_db,bs_per_km2,distance_m,analytic,numerical,abs_gap"));
    assert_eq!(table.lines().count(), 1 + 7 + 9);
}
