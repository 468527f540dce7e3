use std::path::Path;
use std::process::{Command, Output};

use mapf_neural::{load_params, save_params, ModelConfig, ModelParams};

fn mapf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mapf")).args(args).current_dir(dir).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn fixture() -> String {
    format!("{}/../mapgen/fixtures/crossroads.osm", env!("CARGO_MANIFEST_DIR"))
}

fn count_maps(dir: &Path) -> usize {
    std::fs::read_dir(dir).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "map")).count()
}

#[test]
fn mapgen_outputs_and_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = mapf(d, &["mapgen", "--random", "21", "21", "--density", "0.3", "--seed", "7", "--out", "r"]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert_eq!(count_maps(&d.join("r")), 1);
    assert!(d.join("r/manifest.csv").exists());
    assert!(d.join("r/provenance.json").exists());

    let o = mapf(d, &["mapgen", "--osm", &fixture(), "--res", "1.0", "--tile", "64", "--out", "o"]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(count_maps(&d.join("o")) >= 1);

    assert_eq!(code(&mapf(d, &["mapgen", "--out", "none"])), 2);
    assert_eq!(code(&mapf(d, &["mapgen", "--osm", "missing.osm"])), 2);
    assert_eq!(code(&mapf(d, &["mapgen", "--maze", "8", "9"])), 2);
    assert_eq!(code(&mapf(d, &["mapgen", "--random", "9", "9", "--frobnicate"])), 2);
    assert_eq!(code(&mapf(d, &["--help"])), 0);
}

#[test]
fn expert_counts_and_floor() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let a = mapf(d, &["expert", "--empty", "8", "8", "--instances", "100", "--seed", "3", "--out", "a.mwds"]);
    assert_eq!(code(&a), 0, "{a:?}");
    let b = mapf(d, &["expert", "--empty", "8", "8", "--instances", "100", "--seed", "3", "--out", "b.mwds"]);
    let samples = |o: &Output| stdout(o).lines().find_map(|l| l.strip_prefix("samples ").map(|s| s.parse::<usize>().unwrap()));
    assert!(samples(&a).unwrap() > 0);
    assert_eq!(samples(&a), samples(&b));
    assert_eq!(std::fs::read(d.join("a.mwds")).unwrap(), std::fs::read(d.join("b.mwds")).unwrap());
    assert!(d.join("a.mwds.provenance.json").exists());

    // Agents in a one-lane corridor mostly cannot pass each other.
    std::fs::create_dir(d.join("corridor")).unwrap();
    std::fs::write(d.join("corridor/c.map"), "type octile\nheight 1\nwidth 6\nmap\n......\n").unwrap();
    let o = mapf(d, &["expert", "--maps", "corridor", "--instances", "20", "--min-agents", "3", "--max-agents", "3", "--out", "c.mwds"]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
}

#[test]
fn train_flags_and_resume() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(code(&mapf(d, &["expert", "--empty", "6", "6", "--instances", "10", "--out", "d.mwds"])), 0);
    let o = mapf(d, &["train", "--data", "d.mwds", "--preset", "tiny", "--steps", "3", "--sre", "off", "--out", "p.mwld"]);
    assert_eq!(code(&o), 0, "{o:?}");
    let p = load_params(d.join("p.mwld")).unwrap();
    assert!(!p.config.use_sre);
    assert_eq!(p.trained_steps, 3);
    let log = std::fs::read_to_string(d.join("p.mwld.log.csv")).unwrap();
    assert!(log.starts_with("step,fast_loss,slow_loss,total_loss,wall_ms"));
    assert_eq!(log.lines().count(), 4);

    let o = mapf(d, &["train", "--data", "d.mwds", "--steps", "2", "--resume", "p.mwld", "--out", "q.mwld"]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert_eq!(load_params(d.join("q.mwld")).unwrap().trained_steps, 5);
    assert_eq!(code(&mapf(d, &["train", "--data", "d.mwds", "--resume", "p.mwld", "--sre", "on"])), 2);
    assert_eq!(code(&mapf(d, &["train", "--data", "nothing.mwds"])), 2);
}

const SUITE: &str = r#"
family = "random"
width = 7
height = 7
maps = 2
agent_counts = [1, 2]
step_limit = 128
modes = [{ mode = "fast" }]
"#;

#[test]
fn eval_modes_and_preconditions() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    save_params(&ModelParams::init(&ModelConfig::tiny()).unwrap(), d.join("p.mwld")).unwrap();
    std::fs::write(d.join("suite.toml"), SUITE).unwrap();
    for mode in ["fast", "slow", "thinking"] {
        let out = format!("e_{mode}");
        let o = mapf(d, &["eval", "--params", "p.mwld", "--suite", "suite.toml", "--mode", mode, "--H", "2", "--out", &out, "--jobs", "2"]);
        assert_eq!(code(&o), 0, "{o:?}");
        assert!(stdout(&o).contains("SR"));
        let csv = std::fs::read_to_string(d.join(&out).join("results.csv")).unwrap();
        assert_eq!(csv.lines().count(), 5);
        let svg = std::fs::read_to_string(d.join(&out).join("results.svg")).unwrap();
        roxmltree::Document::parse(&svg).unwrap();
        assert!(d.join(&out).join("provenance.json").exists());
    }
    let o = mapf(d, &["eval", "--params", "p.mwld", "--suite", "suite.toml", "--mode", "thinking", "--H", "1"]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&mapf(d, &["eval", "--params", "missing.mwld", "--suite", "suite.toml"])), 1);
}

#[test]
fn play_prints_bounded_plain_frames() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    save_params(&ModelParams::init(&ModelConfig::tiny()).unwrap(), d.join("p.mwld")).unwrap();
    let o = mapf(d, &["play", "--params", "p.mwld", "--agents", "2", "--step-limit", "7"]);
    assert_eq!(code(&o), 0, "{o:?}");
    let text = stdout(&o);
    assert!(!text.contains('\x1b'));
    let frames = text.lines().filter(|l| l.starts_with("t=")).count();
    assert!((1..=8).contains(&frames));
    let last = text.lines().last().unwrap();
    assert!(last == "SUCCESS" || last == "FAILURE");
    assert!(d.join("play.provenance.json").exists());

    let colored = mapf(d, &["play", "--params", "p.mwld", "--agents", "2", "--step-limit", "7", "--color"]);
    assert!(stdout(&colored).contains('\x1b'));
    assert_eq!(code(&mapf(d, &["play", "--params", "missing.mwld"])), 1);
}
