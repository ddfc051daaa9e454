use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sbshape(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbshape"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .unwrap()
}

fn json(output: &Output) -> Value {
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    serde_json::from_slice(&output.stdout).unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn optimize_writes_results_curve_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbshape(dir.path(), &["optimize", "--m", "2", "--P", "1", "--snr", "5", "10", "--seed", "3"]);
    let results = json(&out);
    assert_eq!(results.as_array().unwrap().len(), 2);
    let curve = std::fs::read_to_string(dir.path().join("mi_curve.csv")).unwrap();
    assert!(curve.starts_with("snr_db,mi_bpcu\n5,"));

    let m = manifest(dir.path());
    assert_eq!(m["command"], "optimize");
    assert_eq!(m["seed"], 3);
    assert_eq!(m["parameters"]["command"]["optimize"]["m"], 2);
    for path in m["outputs"].as_array().unwrap() {
        assert!(Path::new(path.as_str().unwrap()).exists());
    }
}

#[test]
fn optimize_from_noise_levels() {
    let dir = tempfile::tempdir().unwrap();
    let results = json(&sbshape(dir.path(), &["optimize", "--m", "3", "--P", "2", "--sigma", "1.0", "0.5"]));
    let snrs: Vec<f64> = results.as_array().unwrap().iter().map(|r| r["snr_db"].as_f64().unwrap()).collect();
    // uniform 8-ASK has energy 21
    assert!((snrs[0] - 10.0 * 21f64.log10()).abs() < 1e-9);
    assert!(snrs[1] > snrs[0]);
}

#[test]
fn indivisible_source_count_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbshape(dir.path(), &["optimize", "--m", "5", "--P", "3", "--snr", "17"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("must divide"));
    let out = sbshape(dir.path(), &["optimize", "--m", "5", "--P", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dm_roundtrip_exhaustive_and_sampled() {
    let dir = tempfile::tempdir().unwrap();
    let r = json(&sbshape(dir.path(), &["dm", "roundtrip", "--n", "12", "--exhaustive"]));
    assert_eq!(r["pass"], true);
    assert_eq!(r["checked"], 4096);
    let r = json(&sbshape(dir.path(), &["dm", "roundtrip", "--n", "64", "--w", "8", "--trials", "500"]));
    assert_eq!(r["pass"], true);
    assert_eq!(r["checked"], 500);
    let out = sbshape(dir.path(), &["dm", "roundtrip", "--n", "64"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dm_bench_and_degenerate_weight() {
    let dir = tempfile::tempdir().unwrap();
    let r = json(&sbshape(dir.path(), &["dm", "bench", "--n", "1024", "--p", "0"]));
    assert_eq!(r["bound_per_bit"], 0.0);
    assert_eq!(r["max_steps"], 0);
    assert_eq!(r["max_comparisons"], 0);
    let r = json(&sbshape(dir.path(), &["dm", "bench", "--n", "1024", "--p", "0.04", "--trials", "100"]));
    assert_eq!(r["max_steps"], 41);
    assert!(r["max_comparisons_per_bit"].as_f64().unwrap() <= r["bound_per_bit"].as_f64().unwrap());
    let out = sbshape(dir.path(), &["dm", "rate-loss", "--n", "100", "--p", "0.001"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shape_encode_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let summary = json(&sbshape(
        d,
        &["shape", "encode", "--m", "5", "--probs", "0.04", "0.24", "--n", "512", "--blocks", "3", "--seed", "9"],
    ));
    assert_eq!(summary["blocks"], 3);
    for b in 0..3 {
        let block = d.join(format!("block-{b:04}.json"));
        let info = d.join(format!("info-{b:04}.txt"));
        let r = json(&sbshape(
            d,
            &["shape", "decode", "--block", block.to_str().unwrap(), "--expect", info.to_str().unwrap()],
        ));
        assert_eq!(r["matches_expected"], true);
        assert_eq!(
            std::fs::read_to_string(d.join("decoded.txt")).unwrap(),
            std::fs::read_to_string(&info).unwrap()
        );
    }
}

#[test]
fn encoding_is_deterministic_in_the_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["shape", "encode", "--m", "3", "--probs", "0.1,0.4", "--n", "64", "--seed", "4"];
    json(&sbshape(a.path(), &args));
    json(&sbshape(b.path(), &args));
    let read = |d: &Path| std::fs::read_to_string(d.join("block-0000.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn corrupted_block_is_an_integrity_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    json(&sbshape(d, &["shape", "encode", "--m", "5", "--probs", "0.04", "0.24", "--n", "256", "--seed", "2"]));
    let path = d.join("block-0000.json");
    let mut block: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();

    // flip the sign bit of one 32-ASK label: same prefix, other half
    let x = block["symbols"][10].as_i64().unwrap();
    block["symbols"][10] = Value::from(if x < 0 { x + 32 } else { x - 32 });
    let bad = d.join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&block).unwrap()).unwrap();
    let out = sbshape(d, &["shape", "decode", "--block", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    std::fs::write(&bad, "{\"header\": 1}").unwrap();
    let out = sbshape(d, &["shape", "decode", "--block", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    block["symbols"][10] = Value::from(2);
    std::fs::write(&bad, serde_json::to_string(&block).unwrap()).unwrap();
    let out = sbshape(d, &["shape", "decode", "--block", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn equal_sources_have_no_switch_loss() {
    let dir = tempfile::tempdir().unwrap();
    let rows = json(&sbshape(dir.path(), &["shape", "analyze-switch", "--p1", "0.2", "--p2", "0.2"]));
    for row in rows.as_array().unwrap() {
        assert_eq!(row["delta_db"], 0.0);
    }
    let csv = std::fs::read_to_string(dir.path().join("switch_analysis.csv")).unwrap();
    assert!(csv.starts_with("m,n,p1,p2,epsilon,p1_eff,p2_eff,delta_db\n"));
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn budget_limits_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let b = json(&sbshape(dir.path(), &["budget", "--p1", "0.04", "--p2", "0.24", "--snr", "17", "--asymptotic"]));
    assert_eq!(b["dm_db"], 0.0);
    assert_eq!(b["switch_db"], 0.0);
    assert_eq!(b["total_db"], b["quantization_db"]);

    let out = sbshape(dir.path(), &["--csv", "budget", "--p1", "0.04", "--p2", "0.24", "--snr", "17", "--n", "2048"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("component,db\nquantization,"));

    let out = sbshape(dir.path(), &["budget", "--P", "4", "--p1", "0.04", "--p2", "0.24", "--snr", "17", "--n", "2048"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_report_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let r = json(&sbshape(d, &["simulate", "--m", "3", "--probs", "0.1", "0.4", "--n", "256", "--blocks", "20", "--sigma", "0.5"]));
    assert_eq!(r["symbols"], 5120);
    assert!(r["symbol_error_rate"].as_f64().unwrap() > 0.0);

    let out = sbshape(
        d,
        &["--csv", "simulate", "--m", "3", "--probs", "0.1", "0.4", "--n", "256", "--blocks", "20", "--snr", "5", "15"],
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("snr_db,ser,mi_estimate\n"));
    assert_eq!(text.lines().count(), 3);
    assert!(d.join("sweep.csv").exists());
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"command": ["shape", "analyze-switch"], "p1": 0.04, "p2": 0.3, "n": [2048], "m": [5], "seed": 12}"#,
    )
    .unwrap();
    let out = sbshape(dir.path(), &["--config", cfg.to_str().unwrap(), "--p2", "0.24"]);
    let rows = json(&out);
    assert_eq!(rows.as_array().unwrap().len(), 1);
    let delta = rows[0]["delta_db"].as_f64().unwrap();
    assert!((delta - 0.0149).abs() < 1e-3);
    assert_eq!(manifest(dir.path())["seed"], 12);

    let missing = sbshape(dir.path(), &["--config", "/nonexistent/run.json"]);
    assert_eq!(missing.status.code(), Some(1));
}
