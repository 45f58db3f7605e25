use std::path::Path;
use std::process::{Command, Output};

use vecmd_bench::SystemDocument;

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench")).args(args).output().unwrap()
}

fn config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{"n_sites": 200, "cutoff": 3.5, "skin": 0.5, "repeats": 3, "warmup": 0, "kernels": ["lj", "halgren", "image"]}"#;

#[test]
fn run_emits_csv() {
    let d = tempfile::tempdir().unwrap();
    let c = config(d.path(), SMALL);
    let o = bench(&["run", "--config", &c, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kernel,n_sites,t_scalar_s,t_vec_s,boost,max_energy_rel,max_force_rel,status");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("lj,200,") && lines[1].ends_with(",ok"));
}

#[test]
fn overrides_and_output_file() {
    let d = tempfile::tempdir().unwrap();
    let c = config(d.path(), SMALL);
    let out = d.path().join("r.json");
    let o = bench(&[
        "run", "--config", &c, "--kernels", "ewald_real", "--n", "150", "--seed", "9", "--repeats", "4",
        "--format", "json", "--out", out.to_str().unwrap(), "--lanes", "4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["n_sites"], 150);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["repeats"], 4);
    assert_eq!(v["real_lane"], 4);
    assert_eq!(v["rows"][0]["kernel"], "ewald_real");
}

#[test]
fn scalar_only_leaves_boost_empty() {
    let d = tempfile::tempdir().unwrap();
    let c = config(d.path(), SMALL);
    let o = bench(&["run", "--config", &c, "--format", "csv", "--scalar-only"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert!(!cells[2].is_empty());
        assert!(cells[3..7].iter().all(|c| c.is_empty()), "{line}");
    }
}

#[test]
fn verify_skips_timing() {
    let d = tempfile::tempdir().unwrap();
    let c = config(d.path(), SMALL);
    let o = bench(&["verify", "--config", &c, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let cells: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert!(cells[2].is_empty() && cells[3].is_empty() && !cells[6].is_empty());
}

#[test]
fn forced_mismatch_exits_with_2() {
    let d = tempfile::tempdir().unwrap();
    let c = config(d.path(), SMALL);
    for k in ["lj", "image"] {
        let o = bench(&["verify", "--config", &c, "--inject-mismatch", k]);
        assert_eq!(o.status.code(), Some(2), "{k}");
        assert!(String::from_utf8_lossy(&o.stdout).contains("FAILED"));
    }
}

#[test]
fn usage_and_precondition_errors_exit_with_1() {
    let d = tempfile::tempdir().unwrap();
    let c = config(d.path(), SMALL);
    let cases: Vec<Vec<&str>> = vec![
        vec!["run"],
        vec!["run", "--config", &c, "--format", "xml"],
        vec!["run", "--config", &c, "--bogus"],
        vec!["run", "--config", &c, "--repeats", "2"],
        vec!["run", "--config", &c, "--kernels", "lj,nope"],
        vec!["run", "--config", &c, "--lanes", "3"],
        vec!["run", "--config", "/nonexistent/config.json"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let o = bench(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let dense = config(d.path(), r#"{"n_sites": 5000, "box_lengths": [12.0, 12.0, 12.0], "cutoff": 4.0, "skin": 0.5}"#);
    assert_eq!(bench(&["verify", "--config", &dense]).status.code(), Some(1));
    assert_eq!(bench(&["--help"]).status.code(), Some(0));
}

#[test]
fn gen_writes_a_versioned_document() {
    let d = tempfile::tempdir().unwrap();
    let c = config(d.path(), SMALL);
    let out = d.path().join("sys.json");
    let o = bench(&["gen", "--config", &c, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let doc: SystemDocument = serde_json::from_str(&text).unwrap();
    assert_eq!(doc.format, "vecmd-system");
    assert_eq!(doc.version, 1);
    assert_eq!(doc.positions.len(), 200);
    let sys = doc.to_system().unwrap();
    assert!(sys.charges().iter().sum::<f64>().abs() < 1e-12);
    // Same config, same bytes.
    let out2 = d.path().join("sys2.json");
    bench(&["gen", "--config", &c, "--out", out2.to_str().unwrap()]);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&out2).unwrap());
}
