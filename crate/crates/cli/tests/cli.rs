use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_salient"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    run(dir, args).status.code().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn simulate(dir: &Path, selection: &str, seed: &str) {
    let out = run(
        dir,
        &["simulate", "--d", "3", "--n", "8", "--m", "500", "--selection", selection, "--seed", seed, "--out-dir", "sim"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let full = r#"{"kind":"full"}"#;
    assert_eq!(code(d, &["simulate", "--d", "0", "--n", "5", "--m", "10", "--selection", full, "--out-dir", "x"]), 2);
    assert_eq!(code(d, &["simulate", "--d", "2", "--n", "5", "--m", "10", "--selection", "{}", "--out-dir", "x"]), 2);
    assert_eq!(
        code(d, &["simulate", "--d", "2", "--n", "5", "--m", "10", "--selection", r#"{"kind":"top_t","t":3}"#, "--out-dir", "x"]),
        2
    );
    assert_eq!(code(d, &["simulate", "--d", "2", "--n", "1", "--m", "10", "--selection", full, "--out-dir", "x"]), 2);
    assert_eq!(code(d, &["frobnicate"]), 2);
    assert_eq!(code(d, &["fit", "--features", "f.csv"]), 2);
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(d, &["fit", "--features", "missing.csv", "--comparisons", "c.csv", "--selection", r#"{"kind":"full"}"#, "--out", "o.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    simulate(d, r#"{"kind":"full"}"#, "1");
    std::fs::write(d.join("w.json"), "[1.0, 2.0]").unwrap();
    assert_eq!(code(d, &["rank", "--features", "sim/features.csv", "--weights", "w.json", "--out", "r.csv"]), 1);
}

#[test]
fn simulate_writes_four_files_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, r#"{"kind":"top_t","t":1}"#, "7");
    let first: Vec<Vec<u8>> = ["features.csv", "comparisons.csv", "truth.json"]
        .iter()
        .map(|f| std::fs::read(d.join("sim").join(f)).unwrap())
        .collect();
    assert!(d.join("sim/manifest.json").exists());
    simulate(d, r#"{"kind":"top_t","t":1}"#, "7");
    for (f, bytes) in ["features.csv", "comparisons.csv", "truth.json"].iter().zip(first) {
        assert_eq!(std::fs::read(d.join("sim").join(f)).unwrap(), bytes, "{f}");
    }
    let manifest = json(&d.join("sim/manifest.json"));
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["flags"]["d"], 3);
}

#[test]
fn manifest_records_input_digests() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, r#"{"kind":"full"}"#, "3");
    let out = run(
        d,
        &["fit", "--features", "sim/features.csv", "--comparisons", "sim/comparisons.csv", "--selection", r#"{"kind":"full"}"#, "--out", "fit.json"],
    );
    assert!(out.status.success());
    let m = json(&d.join("fit.json.manifest.json"));
    let inputs = m["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 2);
    assert!(inputs.iter().all(|i| i["sha256"].as_str().unwrap().len() == 64));
}

#[test]
fn theory_includes_applicable_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, r#"{"kind":"full"}"#, "2");
    let f = ["--features", "sim/features.csv"];
    assert_eq!(code(d, &["theory", f[0], f[1], "--selection", r#"{"kind":"full"}"#, "--out", "full.json"]), 0);
    let full = json(&d.join("full.json"));
    assert!(full["corollary1"].is_object());
    assert!(full["corollary2"].is_null());
    assert!(full["corollary3"].is_null());

    assert_eq!(
        code(d, &["theory", f[0], f[1], "--selection", r#"{"kind":"top_t","t":1}"#, "--weights", "sim/truth.json", "--out", "one.json"]),
        0
    );
    let one = json(&d.join("one.json"));
    assert!(one["corollary1"].is_null());
    assert!(one["corollary2"].is_object());
    assert!(one["corollary3"].is_object());
    assert!(one["theorem1"]["b_star"].is_number());
}

#[test]
fn diagnose_without_features_uses_comparison_ids() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("c.csv"),
        "winner_id,loser_id,count\nseattle,tacoma,3\ntacoma,spokane,2\nspokane,tacoma,1\nseattle,spokane,1\nspokane,seattle,1\n",
    )
    .unwrap();
    assert_eq!(code(d, &["diagnose", "--comparisons", "c.csv", "--out", "diag.json"]), 0);
    let v = json(&d.join("diag.json"));
    assert_eq!(v["item_ids"], serde_json::json!(["seattle", "tacoma", "spokane"]));
    let t = &v["empirical"]["transitivity"];
    assert_eq!(t["triples_checked"], 1);
    assert_eq!(t["strong_violations"], 1);
    assert_eq!(t["moderate_violations"], 1);
    assert_eq!(t["weak_violations"], 0);
}

#[test]
fn sweep_output_does_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("spec.json"),
        r#"{"d":3,"n":10,"selections":[{"kind":"full"},{"kind":"top_t","t":1}],"m":[200,800],"seeds":[0,1,2]}"#,
    )
    .unwrap();
    assert_eq!(code(d, &["sweep", "--spec", "spec.json", "--out-dir", "one", "--threads", "1"]), 0);
    assert_eq!(code(d, &["sweep", "--spec", "spec.json", "--out-dir", "four", "--threads", "4"]), 0);
    let a = std::fs::read_to_string(d.join("one/sweep.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(d.join("four/sweep.csv")).unwrap());
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("selection,m,seed,metric,value"));
    // 2 selections x 2 sizes x 3 seeds x 8 metrics.
    assert_eq!(lines.count(), 2 * 2 * 3 * 8);

    std::fs::write(d.join("bad.json"), r#"{"d":3,"n":10,"selections":[],"m":[10],"seeds":[0]}"#).unwrap();
    assert_eq!(code(d, &["sweep", "--spec", "bad.json", "--out-dir", "x"]), 2);
}
