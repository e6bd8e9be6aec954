//! End-to-end CLI checks: exit codes, diagnostics, file outputs, and
//! byte-stability of reports across reruns and thread counts.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparseweak"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn young_cphi_power_two() {
    let out = run(&["young", "--kind", "power", "--p", "2", "--cphi"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("c_phi"), "{text}");
    assert!(text.contains("4.082107"), "{text}");
}

#[test]
fn young_linear_cphi_refuses_with_exit_2() {
    let out = run(&["young", "--kind", "linear", "--cphi"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("diverges"), "{}", stdout(&out));
}

#[test]
fn young_invalid_power_is_validation_error() {
    let out = run(&["young", "--kind", "power", "--p", "1", "--cphi"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("p > 1"), "{}", stderr(&out));
}

#[test]
fn weaktype_missing_config_exits_1() {
    let out = run(&["weaktype", "--config", "definitely-missing.cfg"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("definitely-missing.cfg"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn weaktype_run_emits_stable_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg_path,
        "# tiny deterministic experiment\n\
         d = 1\n\
         l = 8\n\
         alpha = 0.5\n\
         nu = 1\n\
         lambda1 = 4\n\
         trials = 4\n\
         seed = 11\n\
         young = {\"kind\":\"loglog\",\"delta\":1.0}\n\
         sparse = {\"lambda0\":0.03125,\"n\":2,\"level_gap\":6,\"target_size\":3}\n",
    )
    .unwrap();
    let json1 = dir.path().join("r1.json");
    let csv1 = dir.path().join("r1.csv");
    let out = run(&[
        "weaktype",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out-json",
        json1.to_str().unwrap(),
        "--out-csv",
        csv1.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(json1.exists() && csv1.exists());

    // rerun with a different thread cap: byte-identical outputs
    let json2 = dir.path().join("r2.json");
    let csv2 = dir.path().join("r2.csv");
    let out = bin()
        .env("SPARSEWEAK_THREADS", "1")
        .args([
            "weaktype",
            "--config",
            cfg_path.to_str().unwrap(),
            "--out-json",
            json2.to_str().unwrap(),
            "--out-csv",
            csv2.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read(&json1).unwrap(),
        std::fs::read(&json2).unwrap(),
        "json differs across runs/thread counts"
    );
    assert_eq!(std::fs::read(&csv1).unwrap(), std::fs::read(&csv2).unwrap());

    let json = std::fs::read_to_string(&json1).unwrap();
    assert!(json.contains("\"per_trial\""));
    assert!(json.contains("\"lemma_ledger\""));
    assert!(json.contains("\"aggregate\""));
    let csv = std::fs::read_to_string(&csv1).unwrap();
    assert!(csv.starts_with("trial,seed,lhs,rhs,ratio\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn weaktype_divergent_young_refuses_with_exit_2() {
    let out = run(&[
        "weaktype",
        "--l",
        "6",
        "--trials",
        "1",
        "--young",
        "{\"kind\":\"linear\"}",
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
}

#[test]
fn build_sparse_writes_loadable_family() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fam.txt");
    let out = run(&[
        "build-sparse",
        "--d",
        "1",
        "--l",
        "12",
        "--seed",
        "5",
        "--lambda0",
        "0.125",
        "--n",
        "2",
        "--level-gap",
        "4",
        "--target-size",
        "12",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("pass"));
    let text = std::fs::read_to_string(&path).unwrap();
    let fam = sparseweak::sparse::SparseFamily::from_text(&text).unwrap();
    assert!(!fam.is_empty());

    // apply the sparse operator through the CLI against the written family
    let out_fn = dir.path().join("af.txt");
    let sparse_json = format!("{{\"file\":\"{}\"}}", path.display());
    let out = run(&[
        "apply",
        "--d",
        "1",
        "--l",
        "12",
        "--f",
        "{\"generator\":\"constant\",\"value\":1.0}",
        "--sparse",
        &sparse_json,
        "--alpha",
        "0",
        "--nu",
        "1",
        "--out",
        out_fn.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let g = sparseweak::grid::GridFunction::from_text(
        &std::fs::read_to_string(&out_fn).unwrap(),
    )
    .unwrap();
    // constant f: the operator value at a cell counts the stacked averages
    assert!(g.values().iter().all(|&v| v >= 1.0));
}

#[test]
fn maximal_and_decompose_smoke() {
    let out = run(&[
        "maximal",
        "--d",
        "1",
        "--l",
        "6",
        "--op",
        "iterated",
        "--f",
        "{\"generator\":\"random-uniform\",\"seed\":3}",
        "--young",
        "{\"kind\":\"loglog\",\"delta\":1.0}",
        "--alpha",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("iterated"));

    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("dec.json");
    let out = run(&[
        "decompose",
        "--d",
        "1",
        "--l",
        "12",
        "--f",
        "{\"generator\":\"random-uniform\",\"seed\":9,\"hi\":0.4}",
        "--sparse",
        "{\"seed\":5,\"lambda0\":0.125,\"n\":2,\"level_gap\":4,\"target_size\":12}",
        "--alpha",
        "0",
        "--lambda1",
        "4",
        "--out-json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("k="));
    assert!(json.exists());

    let out = run(&["maximal", "--op", "orlicz", "--l", "4"]);
    assert_eq!(out.status.code(), Some(1)); // orlicz requires --young
}

#[test]
fn sanity_smoke_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let j1 = dir.path().join("s1.json");
    let j2 = dir.path().join("s2.json");
    for (j, threads) in [(&j1, "2"), (&j2, "4")] {
        let out = bin()
            .env("SPARSEWEAK_THREADS", threads)
            .args([
                "sanity",
                "--trials",
                "5",
                "--seed",
                "3",
                "--climb-steps",
                "6",
                "--out-json",
                j.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    }
    assert_eq!(std::fs::read(&j1).unwrap(), std::fs::read(&j2).unwrap());
}

#[test]
fn no_partial_outputs_on_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("never.json");
    // alpha out of range fails validation before any computation or write
    let out = run(&[
        "weaktype",
        "--l",
        "6",
        "--trials",
        "1",
        "--alpha",
        "1.5",
        "--out-json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    assert!(!Path::new(&json).exists(), "partial output was written");
}
