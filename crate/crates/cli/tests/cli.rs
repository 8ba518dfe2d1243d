use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bspf::model_io;

fn bspf() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bspf"));
    c.env_remove("BSPF_THREADS");
    c
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn friedman(dir: &Path, rows: usize, seed: u64) -> PathBuf {
    let path = dir.join(format!("friedman_{rows}_{seed}.csv"));
    ok(bspf()
        .args(["friedman", "-n", &rows.to_string(), "-d", "6", "--seed", &seed.to_string(), "-o"])
        .arg(&path)
        .output()
        .unwrap());
    path
}

fn train(data: &Path, out: &Path, extra: &[&str]) -> Output {
    ok(bspf()
        .arg("train")
        .arg(data)
        .arg("-o")
        .arg(out)
        .args(["-m", "5", "--iters", "30", "--seed", "11"])
        .args(extra)
        .output()
        .unwrap())
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn friedman_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = std::fs::read(friedman(dir.path(), 50, 1)).unwrap();
    let b_path = dir.path().join("again.csv");
    ok(bspf().args(["friedman", "-n", "50", "-d", "6", "--seed", "1", "-o"]).arg(&b_path).output().unwrap());
    assert_eq!(a, std::fs::read(b_path).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x1,x2,x3,x4,x5,x6,y");
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn train_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let data = friedman(dir.path(), 80, 2);
    let out = dir.path().join("run");
    train(&data, &out, &[]);
    for f in ["model.bspf", "samples.bspf", "trace.csv", "diagnostics.json", "manifest.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "iteration,sigma2,mean_cuts,train_rmae");
    assert_eq!(trace.lines().count(), 31);
    let diag = read_json(&out.join("diagnostics.json"));
    assert_eq!(diag["sweeps"], 150);
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["config"]["trees"], 5);
    assert_eq!(manifest["data"][0]["blob_sha256"].as_str().unwrap().len(), 64);
    let model = model_io::load(&out.join("model.bspf")).unwrap();
    assert_eq!(model.m(), 5);
    assert_eq!(model.schema.unwrap().feature_names.len(), 6);
}

#[test]
fn reload_in_fresh_process_predicts_identically() {
    let dir = tempfile::tempdir().unwrap();
    let data = friedman(dir.path(), 100, 3);
    let probes = friedman(dir.path(), 100, 4);
    let out = dir.path().join("run");
    train(&data, &out, &[]);

    // expected values computed in this process from the saved model
    let model = model_io::load(&out.join("model.bspf")).unwrap();
    let (x, _) = bspf::bench::ingest_with_schema(&probes, model.schema.as_ref().unwrap()).unwrap();
    let expect: Vec<f64> = (0..x.n()).map(|i| model.predict(x.row(i)).mean).collect();

    // JSON copy of the same model
    let json_model = dir.path().join("model.json");
    model_io::save(&model, &json_model).unwrap();

    for m in [out.join("model.bspf"), json_model] {
        let pred = ok(bspf().arg("predict").arg(&probes).arg("--model").arg(&m).output().unwrap());
        let text = String::from_utf8(pred.stdout).unwrap();
        let got: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert_eq!(got.len(), 100);
        assert_eq!(got, expect);
        assert!(String::from_utf8_lossy(&pred.stderr).contains("RMAE"));
    }
}

#[test]
fn predictions_with_samples_have_ordered_bands() {
    let dir = tempfile::tempdir().unwrap();
    let data = friedman(dir.path(), 80, 5);
    let out = dir.path().join("run");
    train(&data, &out, &["--json"]);
    let pred_path = dir.path().join("pred.csv");
    ok(bspf()
        .arg("predict")
        .arg(&data)
        .arg("--model")
        .arg(out.join("model.json"))
        .arg("--samples")
        .arg(out.join("samples.json"))
        .arg("-o")
        .arg(&pred_path)
        .output()
        .unwrap());
    let text = std::fs::read_to_string(pred_path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "row,prediction,lo,hi");
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(v[2] <= v[3]);
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let data = friedman(dir.path(), 60, 6);
    let mut models = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("run{threads}"));
        ok(bspf()
            .env("BSPF_THREADS", threads)
            .arg("train")
            .arg(&data)
            .arg("-o")
            .arg(&out)
            .args(["-m", "4", "--iters", "15", "--seed", "9"])
            .output()
            .unwrap());
        models.push(std::fs::read(out.join("model.bspf")).unwrap());
    }
    assert_eq!(models[0], models[1]);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = friedman(dir.path(), 60, 7);
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "trees = 3\nbudget = 0.5\nmode = \"axis_aligned\"\n").unwrap();
    let out = dir.path().join("run");
    ok(bspf()
        .arg("train")
        .arg(&data)
        .arg("-o")
        .arg(&out)
        .arg("--config")
        .arg(&cfg)
        .args(["--trees", "4", "--iters", "5"])
        .output()
        .unwrap());
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["config"]["trees"], 4);
    assert_eq!(manifest["config"]["budget"], 0.5);
    assert_eq!(manifest["config"]["mode"], "axis_aligned");
    let model = model_io::load(&out.join("model.bspf")).unwrap();
    assert_eq!(model.m(), 4);
}

#[test]
fn eval_sweep_and_diagnostics_commands() {
    let dir = tempfile::tempdir().unwrap();
    let data = friedman(dir.path(), 60, 8);
    let fast = ["-m", "3", "--iters", "8", "--runs", "2"];

    let eval_out = dir.path().join("eval");
    let out = ok(bspf().arg("eval").arg(&data).arg("-o").arg(&eval_out).args(fast).output().unwrap());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("RMAE"));
    let metrics = read_json(&eval_out.join("metrics.json"));
    assert_eq!(metrics["per_run"].as_array().unwrap().len(), 2);
    assert_eq!(metrics["variant"], "sqrt-mae");

    let sweep_out = dir.path().join("sweep");
    ok(bspf()
        .arg("sweep")
        .arg(&data)
        .arg("-o")
        .arg(&sweep_out)
        .args(["--budgets", "0.4,0.8"])
        .args(fast)
        .output()
        .unwrap());
    let csv = std::fs::read_to_string(sweep_out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2);
    assert!(csv.contains(",axis,") && csv.contains(",bsp,"));

    let run = dir.path().join("run");
    train(&data, &run, &[]);
    let usage = ok(bspf().arg("dimuse").arg("--samples").arg(run.join("samples.bspf")).output().unwrap());
    let text = String::from_utf8(usage.stdout).unwrap();
    let total: f64 = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);

    let pdp = dir.path().join("pdp.csv");
    ok(bspf()
        .arg("pdp")
        .arg(&data)
        .arg("--samples")
        .arg(run.join("samples.bspf"))
        .args(["--dims", "0,3", "--grid", "7", "-o"])
        .arg(&pdp)
        .output()
        .unwrap());
    assert_eq!(std::fs::read_to_string(pdp).unwrap().lines().count(), 1 + 2 * 7);
}

#[test]
fn errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let missing = bspf().args(["train", "/nonexistent/data.csv"]).output().unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("no such file"));

    let data = friedman(dir.path(), 30, 9);
    let bad_threads = bspf().env("BSPF_THREADS", "0").arg("train").arg(&data).output().unwrap();
    assert!(!bad_threads.status.success());
    assert!(String::from_utf8_lossy(&bad_threads.stderr).contains("BSPF_THREADS"));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "tress = 3\n").unwrap();
    let bad_cfg = bspf().arg("train").arg(&data).arg("--config").arg(&cfg).output().unwrap();
    assert!(!bad_cfg.status.success());
    assert!(String::from_utf8_lossy(&bad_cfg.stderr).contains("unknown keys: tress"));

    let bad_mode = bspf().arg("train").arg(&data).args(["--mode", "hex"]).output().unwrap();
    assert!(!bad_mode.status.success());
}
