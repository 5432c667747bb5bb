use std::fs;
use std::path::Path;
use std::process::Command;

use optcur::generate::{low_rank_plus_noise, sparse_low_rank_plus_noise};
use optcur::mtx::{self, MtxMatrix};
use optcur::RunReport;

fn optcur(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_optcur")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn decompose(input: &Path, out: &Path, variant: &str, seed: &str) -> std::process::Output {
    let eps = if variant == "deterministic" { "1.0" } else { "0.5" };
    optcur(&[
        "decompose", "--input", p(input), "--rank", "2", "--epsilon", eps, "--variant", variant,
        "--fidelity", "heuristic", "--seed", seed, "--out-dir", p(out),
    ])
}

const ARTIFACTS: [&str; 5] = ["C.mtx", "U.mtx", "R.mtx", "col_indices.mtx", "row_indices.mtx"];

#[test]
fn decompose_then_verify_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("a.mtx");
    mtx::write_dense(&input, &low_rank_plus_noise(60, 50, 3, 0.01, 7)).unwrap();
    let out = dir.path().join("dec");
    let run = decompose(&input, &out, "linear", "11");
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report = RunReport::from_json(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.input.rows, 60);
    assert_eq!(report.evaluation.k, 2);
    assert!(report.evaluation.rank_u <= 2);

    let ver = optcur(&["verify", "--input", p(&input), "--decomposition", p(&out)]);
    assert!(ver.status.success(), "{}", String::from_utf8_lossy(&ver.stderr));
    let v: serde_json::Value = serde_json::from_slice(&ver.stdout).unwrap();
    assert_eq!(v["ratio_matches"], true);
    assert_eq!(v["structure_ok"], true);
    let got = v["evaluation"]["ratio"].as_f64().unwrap();
    let want = report.evaluation.ratio.unwrap();
    assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
}

#[test]
fn verify_rejects_tampered_u() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("a.mtx");
    mtx::write_dense(&input, &low_rank_plus_noise(40, 30, 3, 0.01, 3)).unwrap();
    let out = dir.path().join("dec");
    assert!(decompose(&input, &out, "linear", "1").status.success());
    let u = mtx::read_matrix(out.join("U.mtx")).unwrap().into_dense();
    mtx::write_dense(out.join("U.mtx"), &u.scale(1.5)).unwrap();
    let ver = optcur(&["verify", "--input", p(&input), "--decomposition", p(&out)]);
    assert_eq!(ver.status.code(), Some(3));
}

#[test]
fn artifacts_are_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let dense = dir.path().join("a.mtx");
    mtx::write_dense(&dense, &low_rank_plus_noise(50, 40, 3, 0.05, 5)).unwrap();
    let sparse = dir.path().join("s.mtx");
    mtx::write_sparse(&sparse, &sparse_low_rank_plus_noise(80, 60, 3, 0.05, 5)).unwrap();
    for (variant, input) in [("linear", &dense), ("sparse", &sparse), ("deterministic", &dense)] {
        let (a, b) = (dir.path().join(format!("{variant}-a")), dir.path().join(format!("{variant}-b")));
        assert!(decompose(input, &a, variant, "42").status.success());
        assert!(decompose(input, &b, variant, "42").status.success());
        for f in ARTIFACTS {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{variant}/{f}");
        }
    }
}

#[test]
fn missing_rank_is_a_usage_error() {
    let out = optcur(&["decompose", "--input", "a.mtx"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--rank"));
}

#[test]
fn bad_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("a.mtx");
    fs::write(&input, "%%MatrixMarket matrix array real general\n2 2\n1\n2\nx\n4\n").unwrap();
    let out = optcur(&["decompose", "--input", p(&input), "--rank", "1", "--out-dir", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":5"), "{}", String::from_utf8_lossy(&out.stderr));

    mtx::write_dense(&input, &low_rank_plus_noise(10, 8, 2, 0.1, 1)).unwrap();
    let out = optcur(&["decompose", "--input", p(&input), "--rank", "9", "--out-dir", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    // Proven constants need far more columns than a 10 x 8 input has.
    let out = optcur(&["decompose", "--input", p(&input), "--rank", "2", "--out-dir", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_adversarial_writes_the_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("adv.mtx");
    let run = optcur(&["gen-adversarial", "--n", "4", "--k", "2", "--alpha", "0.5", "--out", p(&out)]);
    assert!(run.status.success());
    let meta: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(meta["t"], 18);
    match mtx::read_matrix(&out).unwrap() {
        MtxMatrix::Sparse(a) => assert_eq!(a.nnz(), 32),
        MtxMatrix::Dense(_) => panic!("expected coordinate storage"),
    }
}

#[test]
fn bench_runs_every_entry() {
    let dir = tempfile::tempdir().unwrap();
    mtx::write_dense(dir.path().join("a.mtx"), &low_rank_plus_noise(40, 30, 2, 0.01, 2)).unwrap();
    let suite = dir.path().join("suite.json");
    fs::write(
        &suite,
        r#"{"entries": [
            {"name": "lin", "input": "a.mtx", "rank": 2, "fidelity": "heuristic", "trials": 2},
            {"name": "det", "input": "a.mtx", "rank": 2, "epsilon": 1.0, "variant": "deterministic"}
        ]}"#,
    )
    .unwrap();
    let run = optcur(&["bench", "--suite", p(&suite)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let lines: Vec<serde_json::Value> =
        String::from_utf8_lossy(&run.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["report"]["trial_ratios"].as_array().unwrap().len(), 2);
    assert_eq!(lines[1]["report"]["variant"], "deterministic");
}

#[test]
fn report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("a.mtx");
    mtx::write_dense(&input, &low_rank_plus_noise(30, 30, 2, 0.01, 4)).unwrap();
    assert!(decompose(&input, dir.path(), "linear", "0").status.success());
    let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let report = RunReport::from_json(&text).unwrap();
    assert_eq!(RunReport::from_json(&report.to_json().unwrap()).unwrap(), report);
}

#[test]
fn out_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("a.mtx");
    mtx::write_dense(&input, &low_rank_plus_noise(30, 30, 2, 0.01, 4)).unwrap();
    let out = dir.path().join("env-out");
    let run = Command::new(env!("CARGO_BIN_EXE_optcur"))
        .args(["decompose", "--input", p(&input), "--rank", "2", "--fidelity", "heuristic"])
        .env("OPTCUR_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out.join("C.mtx").exists());
}
