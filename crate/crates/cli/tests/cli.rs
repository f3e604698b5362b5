use std::path::{Path, PathBuf};
use std::process::Command;

use mch_cli::{Summary, Verdict};

fn mch() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mch"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mch-cli-test-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn summary(dir: &Path) -> Summary {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn small_data_classical_run_passes() {
    let dir = scratch("classical");
    let cfg = write_config(
        &dir,
        "scenario = \"classical\"\nmomentum = \"bump(c=0.1)\"\nt_end = 1.0\nnodes = 65\nsnapshot_every = 50\n",
    );
    let out = dir.join("out");
    let status = mch().arg("run").arg(&cfg).arg("--out").arg(&out).arg("--svg").status().unwrap();
    assert_eq!(status.code(), Some(0));
    let s = summary(&out);
    assert!(s.passed);
    let done = s.checks.iter().find(|c| c.name == "completed_without_blowup").unwrap();
    assert!(done.passed);
    assert!(out.join("trajectory.csv").exists());
    let svg = std::fs::read_to_string(out.join("snapshot_0000.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
    let csv = std::fs::read_to_string(out.join("snapshot_0000.csv")).unwrap();
    assert!(csv.starts_with("# t=") && csv.lines().nth(1) == Some("x,u,ux,m"));
}

#[test]
fn malformed_scenario_exits_two_and_writes_nothing() {
    let dir = scratch("malformed");
    let cfg = write_config(&dir, "scenario = \"explode\"\nmomentum = \"bump(1)\"\n");
    let out = dir.join("out");
    let status = mch().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn invalid_parameter_exits_two() {
    let dir = scratch("invalid");
    let cfg = write_config(&dir, "scenario = \"blowup\"\nmomentum = \"bump(4)\"\ndelta_stop = -1.0\n");
    let out = dir.join("out");
    let status = mch().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn no_blowup_is_an_invariant_failure() {
    let dir = scratch("noblowup");
    let cfg = write_config(
        &dir,
        "scenario = \"blowup\"\nmomentum = \"bump(c=0.1)\"\nt_end = 0.5\nnodes = 33\n",
    );
    let out = dir.join("out");
    let status = mch().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(1));
    let s = summary(&out);
    assert!(!s.passed);
    assert!(s.error.is_some());
}

#[test]
fn lifespan_scan_rows_within_bounds() {
    let dir = scratch("scan");
    let cfg = write_config(
        &dir,
        "scenario = \"lifespan-scan\"\nmomentum = \"bump(c=10, w=0.1)\"\neps_list = [1.0, 2.0, 4.0]\nnodes = 129\n",
    );
    let out = dir.join("out");
    let status = mch().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(summary(&out).checks.len(), 6);
}

#[test]
fn identical_configs_give_identical_files() {
    let dir = scratch("determinism");
    let cfg = write_config(
        &dir,
        "scenario = \"blowup\"\nmomentum = \"bump(4)\"\nnodes = 257\nsvg = true\n",
    );
    let a = dir.join("a");
    let b = dir.join("b");
    for out in [&a, &b] {
        let status = mch()
            .env("MCH_THREADS", "2")
            .arg("run")
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.iter().any(|n| n == "t_max.svg"));
    for name in names {
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap());
    }
}

#[test]
fn verify_accepts_genuine_and_rejects_tampered_summaries() {
    let dir = scratch("verify");
    let cfg = write_config(
        &dir,
        "scenario = \"classical\"\nmomentum = \"bump(c=0.1)\"\nt_end = 0.2\nnodes = 33\n",
    );
    let out = dir.join("out");
    assert_eq!(mch().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap().code(), Some(0));
    let report = out.join("summary.json");
    assert_eq!(mch().arg("verify").arg(&report).status().unwrap().code(), Some(0));

    let mut s = summary(&out);
    assert_eq!(mch_cli::verify(&s), Verdict::Pass);
    s.checks[0].value = -1.0;
    let forged = dir.join("forged.json");
    std::fs::write(&forged, serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(mch().arg("verify").arg(&forged).status().unwrap().code(), Some(1));

    std::fs::write(&forged, "{not json").unwrap();
    assert_eq!(mch().arg("verify").arg(&forged).status().unwrap().code(), Some(2));
}

#[test]
fn shipped_configs_parse_and_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = mch_cli::ScenarioConfig::load(&path).unwrap();
            cfg.validate(path.parent()).unwrap();
            assert_eq!(mch_cli::ScenarioConfig::parse(&cfg.to_toml()).unwrap(), cfg);
            seen += 1;
        }
    }
    assert_eq!(seen, 7);
}
