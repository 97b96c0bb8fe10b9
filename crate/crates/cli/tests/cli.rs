use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dsvrp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsvrp")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&dsvrp(&[], tmp.path())), 1);
    assert_eq!(code(&dsvrp(&["frobnicate"], tmp.path())), 1);
    assert_eq!(code(&dsvrp(&["run", "missing.txt"], tmp.path())), 1);
    assert_eq!(code(&dsvrp(&["generate", "--class", "5"], tmp.path())), 1);
    assert_eq!(code(&dsvrp(&["--help"], tmp.path())), 0);
}

#[test]
fn generate_then_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dsvrp(&["generate", "--class", "4", "--seed", "3", "--customers", "10", "--horizon", "60", "-o", "i.txt"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let bad = dsvrp(&["run", "i.txt", "--algorithm", "GLS-wf"], tmp.path());
    assert_eq!(code(&bad), 1);
    let o = dsvrp(&["run", "i.txt", "-a", "GSA-dfr", "--epoch-budget", "20", "--log", "log.json"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["algorithm_id"], "GSA-dfr");
    let total = report["rejections"].as_u64().unwrap() + report["accepted"].as_u64().unwrap();
    assert_eq!(total, report["revealed"].as_u64().unwrap());
    assert!(tmp.path().join("log.json").exists());
    let o = dsvrp(&["run", "i.txt", "--epoch-budget", "0"], tmp.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn fig1_prints_the_example() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dsvrp(&["fig1"], tmp.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["exact_to_c"], 1.0);
    assert_eq!(v["multistage_choice"], "c");
    assert_eq!(v["two_stage_choice"], "b");
}

const MANIFEST: &str = r#"
[[instances]]
id = "small-1"
[instances.generate]
class = 6
seed = 1
customers = 8
horizon = 45

[[runs]]
algorithm = "GLS-df"
seeds = [0, 1]

[[runs]]
algorithm = "GSA-df"
seeds = [0]
[runs.overrides]
epoch_budget = 10
"#;

#[test]
fn campaign_and_profile() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("m.toml"), MANIFEST).unwrap();
    let o = dsvrp(&["campaign", "m.toml", "--out", "out", "-j", "2"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = String::from_utf8(o.stdout).unwrap().trim().to_string();
    assert!(dir.contains("campaign-"));
    let reports = fs::read_dir(tmp.path().join(&dir).join("reports")).unwrap().count();
    assert_eq!(reports, 3);
    let o = dsvrp(&["profile", &dir], tmp.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("algorithm,ratio,fraction"));
    let o = dsvrp(&["profile", &dir, "--table", "--rounded"], tmp.path());
    assert!(String::from_utf8(o.stdout).unwrap().contains("AVG"));
}

#[test]
fn unwritable_output_is_a_run_failure() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("m.toml"), MANIFEST).unwrap();
    fs::write(tmp.path().join("blocker"), "").unwrap();
    let o = dsvrp(&["campaign", "m.toml", "--out", "blocker"], tmp.path());
    assert_eq!(code(&o), 2);
    fs::write(tmp.path().join("bad.toml"), "runs = 3").unwrap();
    assert_eq!(code(&dsvrp(&["campaign", "bad.toml"], tmp.path())), 1);
}
