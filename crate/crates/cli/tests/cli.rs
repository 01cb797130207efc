use std::path::Path;
use std::process::{Command, Output};

fn privlp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_privlp")).args(args).env_remove("PRIVLP_SEED").output().expect("binary runs")
}

fn path(dir: &Path, f: &str) -> String {
    dir.join(f).to_str().unwrap().to_string()
}

fn gen_hom(dir: &Path, rho: &str) -> String {
    let out = path(dir, "hom.lp");
    let o = privlp(&[
        "gen",
        "--kind",
        "positive-margin",
        "--d",
        "3",
        "--n",
        "500",
        "--rho",
        rho,
        "--seed",
        "7",
        "--out",
        &out,
    ]);
    assert!(o.status.success());
    out
}

#[test]
fn gen_writes_the_text_format() {
    let o = privlp(&["gen", "--kind", "positive-margin", "--d", "3", "--n", "500", "--rho", "0.1", "--seed", "7"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("# kind positive-margin\n# seed 7\n"));
    assert!(text.contains("\n500 3 1000\n"));
    assert_eq!(
        privlp(&["gen", "--kind", "positive-margin", "--d", "3", "--n", "500", "--rho", "0.1", "--seed", "7"]).stdout,
        text.as_bytes()
    );
}

#[test]
fn seed_comes_from_the_environment() {
    let args = ["gen", "--kind", "tight-subspace", "--d", "2", "--n", "12", "--U", "3"];
    let a = Command::new(env!("CARGO_BIN_EXE_privlp")).args(args).env("PRIVLP_SEED", "5").output().unwrap();
    let b = privlp(&[&args[..], &["--seed", "5"]].concat());
    let c = privlp(&[&args[..], &["--seed", "6"]].concat());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(b.stdout, c.stdout);
}

#[test]
fn neighbor_pair_differs_by_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let (v, w) = (path(dir.path(), "v.lp"), path(dir.path(), "w.lp"));
    let o = privlp(&["gen", "--kind", "neighbor-pair", "--d", "2", "--n", "10", "--out", &v, "--neighbor-out", &w]);
    assert!(o.status.success());
    let v = privlp::lp::parse_lp(&std::fs::read_to_string(&v).unwrap()).unwrap();
    let w = privlp::lp::parse_lp(&std::fs::read_to_string(&w).unwrap()).unwrap();
    assert_eq!(w.n(), v.n() + 1);
    assert_eq!(&w.a()[..v.n()], v.a());
}

#[test]
fn private_runs_on_a_wide_margin_corpus_stay_within_bound() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_hom(dir.path(), "0.2");
    let (csv, json) = (path(dir.path(), "out.csv"), path(dir.path(), "summary.json"));
    let o = privlp(&[
        "solve-homogeneous",
        "--input",
        &input,
        "--eps",
        "1",
        "--delta",
        "1e-6",
        "--beta",
        "0.1",
        "--trials",
        "50",
        "--out",
        &csv,
        "--summary",
        &json,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("#schema_version=1"));
    assert_eq!(
        lines.next(),
        Some("trial,instance,seed,d,n,U,rho0,epsilon,delta,beta,status,violated_strict,violated_slack,epochs,eps_total,delta_total,wall_ms,bound")
    );
    assert_eq!(lines.count(), 50);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(summary["trials"], 50);
    assert!(summary["within_bound"].as_u64().unwrap() >= 45);
    assert_eq!(summary["wall_ms"]["max"], 0.0);
}

#[test]
fn general_solver_reports_points() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(dir.path(), "tight.lp");
    let o = privlp(&[
        "gen",
        "--kind",
        "tight-subspace",
        "--d",
        "2",
        "--n",
        "20",
        "--U",
        "3",
        "--k",
        "1",
        "--multiplicity",
        "2",
        "--out",
        &input,
    ]);
    assert!(o.status.success());
    let o = privlp(&["solve-general", "--input", &input, "--trials", "3", "--noise-off"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        let cols: Vec<&str> = r.split(',').collect();
        assert_eq!(cols[10], "Point");
        assert_eq!(cols[11], "0");
    }
}

#[test]
fn timing_is_recorded_only_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_hom(dir.path(), "0.2");
    let o = privlp(&["solve-homogeneous", "--input", &input, "--trials", "2", "--record-timing"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_hom(dir.path(), "0.2");
    assert_eq!(privlp(&["solve-homogeneous", "--input", &input, "--trials", "0"]).status.code(), Some(1));
    assert_eq!(privlp(&["solve-homogeneous", "--input", "/nonexistent.lp"]).status.code(), Some(1));
    assert_eq!(privlp(&["solve-homogeneous", "--input", &input, "--eps=-1"]).status.code(), Some(1));
    let bad = path(dir.path(), "bad.lp");
    std::fs::write(&bad, "1 2 3\n1 2\n").unwrap();
    assert_eq!(privlp(&["solve-general", "--input", &bad]).status.code(), Some(1));
    assert_eq!(privlp(&["verify", "--suite", "sensitivity", "--quick"]).status.code(), Some(0));
    // criteria that do not hold make verify exit with 2
    assert_eq!(privlp(&["verify", "--suite", "elimination", "--quick"]).status.code(), Some(2));
}

#[test]
fn verify_prints_one_line_per_suite() {
    let o = privlp(&["verify", "--suite", "accounting"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("PASS [9] accounting") || text.starts_with("FAIL [9] accounting"));
}

#[test]
fn directories_expand_to_their_instances() {
    let dir = tempfile::tempdir().unwrap();
    for seed in ["1", "2"] {
        let out = path(dir.path(), &format!("i{seed}.lp"));
        assert!(privlp(&[
            "gen",
            "--kind",
            "positive-margin",
            "--d",
            "2",
            "--n",
            "50",
            "--rho",
            "0.2",
            "--seed",
            seed,
            "--out",
            &out
        ])
        .status
        .success());
    }
    let o = privlp(&["solve-homogeneous", "--input", dir.path().to_str().unwrap(), "--trials", "2"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 2 + 4);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(privlp(&["solve-homogeneous", "--bogus"]).status.code(), Some(1));
    assert_eq!(privlp(&["--help"]).status.code(), Some(0));
}
