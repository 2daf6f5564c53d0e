use std::path::Path;
use std::process::{Command, Output};

fn vslice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vslice")).args(args).output().expect("spawn vslice")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_defaults(dir: &Path, edit: impl Fn(String) -> String) -> String {
    let o = vslice(&["defaults"]);
    assert!(o.status.success());
    let path = dir.join("config.toml");
    std::fs::write(&path, edit(stdout(&o))).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn defaults_validate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_defaults(dir.path(), |s| s);
    let o = vslice(&["validate", &cfg]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "valid");
}

#[test]
fn every_violation_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_defaults(dir.path(), |s| s.replace("epsilon = 0.1", "epsilon = 1.5").replace("num_rbs_sl = 25", "num_rbs_sl = 0"));
    let o = vslice(&["validate", &cfg]);
    assert!(!o.status.success());
    let out = stdout(&o);
    assert!(out.contains("epsilon"), "{out}");
    assert!(out.contains("num_rbs_sl"), "{out}");
}

#[test]
fn short_run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = vslice(&["run", "--duration", "1", "--scheduler", "baseline1", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["scheduler"], "baseline1");
    assert_eq!(summary["slots"], 1000);
    for f in ["config.toml", "summary.json", "playback_cdf.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn plan_runs_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plan");
    let plan = dir.path().join("plan.toml");
    std::fs::write(
        &plan,
        format!(
            "replications = 2\nschedulers = [\"baseline1\", \"baseline2\"]\noutput = {:?}\n[base.run]\nduration = 0.2\n",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = vslice(&["plan", plan.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["cells"].as_array().unwrap().len(), 4);
}

#[test]
fn oracle_subcommand() {
    let o = vslice(&["oracle", "--instances", "10"]);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["instances"], 10);
}
