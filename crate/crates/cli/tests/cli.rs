use std::path::Path;
use std::process::{Command, Output};

use ktu::io::write_feature_csv;
use ktu::sampling::rng_from_seed;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

fn ktu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ktu"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_states(path: &Path, rows: usize, n: usize, errors: usize, seed: u64) {
    let mut rng = rng_from_seed(seed);
    let mut m = DMatrix::from_fn(rows, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let flags: Vec<bool> = (0..rows).map(|r| r >= rows - errors).collect();
    for r in rows - errors..rows {
        m[(r, 0)] += 5.0;
    }
    let file = std::fs::File::create(path).unwrap();
    write_feature_csv(file, &m, Some(("is_error", &flags))).unwrap();
}

#[test]
fn ball_bound_json() {
    let out = stdout(&ktu(&["bounds", "ball", "--n", "2000", "--M", "100000", "--k", "3", "--grid", "64"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["p_lower"].as_f64().unwrap() > 0.99);
    assert!(v["delta"].is_number());
    // reals are written with 17 significant digits
    assert!(out.contains("e-") || out.contains("e0"));
}

#[test]
fn corr_bound_has_no_delta() {
    let out = stdout(&ktu(&[
        "bounds", "corr", "--n", "2000", "--M", "100000", "--k", "5", "--m", "5", "--beta1", "0.5", "--beta2", "0.05",
        "--grid", "64",
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v.get("delta").is_none());
    assert!(v["p_lower"].as_f64().unwrap() > 0.0);
}

#[test]
fn quotient_both_directions() {
    let out = stdout(&ktu(&["bounds", "quotient", "--n", "400", "--k", "5", "--sigma0", "0.5", "--theta", "0.2"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["max_m"].as_u64().unwrap() > 1000);
    let out = stdout(&ktu(&["bounds", "quotient", "--n", "400", "--k", "5", "--sigma0", "0.5", "--M", "10"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["theta_min"].as_f64().unwrap() < 1e-3);
}

#[test]
fn curve_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    stdout(&ktu(&[
        "bounds", "curve", "--kind", "ball", "--n", "200", "--M", "1000", "--k-range", "1:4", "--grid", "16", "--out",
        path.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,p_lower,eps,delta");
    assert_eq!(lines.len(), 5);
    let out = stdout(&ktu(&[
        "bounds", "curve", "--kind", "corr", "--n", "200", "--M", "1000", "--k-range", "1:2", "--grid", "16", "--beta2",
        "0,0.05",
    ]));
    assert!(out.starts_with("beta1,beta2,k,p_lower,eps\n"));
    assert_eq!(out.lines().count(), 5);
}

#[test]
fn mc_run_formats() {
    let out = stdout(&ktu(&[
        "mc", "run", "--dist", "ball", "--n", "30", "--M", "50", "--k", "2", "--trials", "10", "--separator", "mean",
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["trials"].as_u64(), Some(10));
    for key in ["successes", "p_hat", "ci_low", "ci_high", "excluded"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let csv = stdout(&ktu(&[
        "mc", "run", "--dist", "cube", "--n", "30", "--M", "50", "--k", "2", "--trials", "5", "--separator", "quotient",
        "--out", "csv",
    ]));
    assert!(csv.starts_with("trials,successes,p_hat,ci_low,ci_high,excluded\n5,"));
}

#[test]
fn mc_compare_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cmp.cfg");
    std::fs::write(&cfg, "n = 20\nM = 40\nk = 1,2\ntrials = 5\nseed = 3\nseparator = lp\ngrid = 16\n").unwrap();
    let out = stdout(&ktu(&["mc", "compare", "--config", cfg.to_str().unwrap()]));
    assert!(out.starts_with("n,M,k,p_hat,ci_low,ci_high,bound\n"));
    assert_eq!(out.lines().count(), 3);
}

#[test]
fn fit_apply_unlearn() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("states.csv");
    write_states(&data, 400, 8, 3, 1);
    let corrector = dir.path().join("c.json");
    stdout(&ktu(&[
        "transfer", "fit", "--data", data.to_str().unwrap(), "--errors", "is_error", "--algo", "cascade", "--p", "2",
        "--out", corrector.to_str().unwrap(),
    ]));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&corrector).unwrap()).unwrap();
    assert_eq!(json["version"], "ktu-1");
    assert_eq!(json["units"].as_array().unwrap().len(), 2);
    for key in ["n", "m", "mean", "H", "W", "action", "provenance"] {
        assert!(json.get(key).is_some(), "{key}");
    }

    let triggers = stdout(&ktu(&["transfer", "apply", "--corrector", corrector.to_str().unwrap(), "--data", data.to_str().unwrap()]));
    let fired: Vec<&str> = triggers.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(fired.len(), 400);
    assert!(fired[397..].iter().all(|&f| f == "1"));

    let stripped = dir.path().join("none.json");
    stdout(&ktu(&[
        "transfer", "unlearn", "--corrector", corrector.to_str().unwrap(), "--units", "0,1", "--out",
        stripped.to_str().unwrap(),
    ]));
    let after = stdout(&ktu(&["transfer", "apply", "--corrector", stripped.to_str().unwrap(), "--data", data.to_str().unwrap()]));
    assert!(after.lines().skip(1).all(|l| l.ends_with(",0,")));

    let bad = ktu(&[
        "transfer", "unlearn", "--corrector", corrector.to_str().unwrap(), "--units", "5", "--out",
        stripped.to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn errors_from_separate_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("states.csv");
    write_states(&data, 200, 5, 2, 2);
    let flags = dir.path().join("flags.csv");
    let mut text = String::from("is_error\n");
    for r in 0..200 {
        text.push_str(if r >= 198 { "true\n" } else { "false\n" });
    }
    std::fs::write(&flags, text).unwrap();
    let out = dir.path().join("c.json");
    stdout(&ktu(&[
        "transfer", "fit", "--data", data.to_str().unwrap(), "--errors", flags.to_str().unwrap(), "--p", "1", "--out",
        out.to_str().unwrap(),
    ]));
    assert!(out.exists());
}

#[test]
fn degenerate_data_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("zeros.csv");
    std::fs::write(&data, "f0,f1,is_error\n0,0,1\n0,0,0\n0,0,0\n").unwrap();
    let out = dir.path().join("c.json");
    let o = ktu(&["transfer", "fit", "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn experiment_run_and_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg,
        "seed = 5\nscenario.n = 10\nscenario.positives = 200\nscenario.negatives = 200\ncorrector.p = 2\n\
         sweep.thresholds = -1,0,1\nbounds.k_max = 3\nbounds.grid = 16\n\
         report.n = 20\nreport.M = 40\nreport.k = 1\nreport.trials = 3\nreport.grid = 16\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let o = ktu(&["exp", "run", "--config", cfg.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["sweep.csv", "bounds.csv", "report.csv", "corrector.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let sweep = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert!(sweep.starts_with("threshold,tp_base,fp_base,tp_corrected,fp_corrected\n"));

    std::fs::write(&cfg, "seed = 5\nscenario.bogus = 1\n").unwrap();
    let o = ktu(&["exp", "run", "--config", cfg.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let missing = dir.path().join("missing.cfg");
    let o = ktu(&["exp", "run", "--config", missing.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
