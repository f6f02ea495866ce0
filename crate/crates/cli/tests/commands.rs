use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simplex-conf")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn bounds_for_three_categories() {
    let v = json(&run(&["bounds", "--counts", "20,30,50", "--values", "1,2,3"]));
    let lower = v["lambda_lower"].as_f64().unwrap();
    let upper = v["lambda_upper"].as_f64().unwrap();
    assert!(lower < -1.02 && -1.02 < upper);
    assert!(lower < -1.029_653_1 && -1.029_653_1 < upper);
    assert_eq!(v["diagnostics"]["method"], "gaussian_superset");
    assert_eq!(v["argmin"].as_array().unwrap().len(), 3);
}

#[test]
fn bounds_json_keys_keep_field_order() {
    let text = stdout(&run(&["bounds", "--counts", "20,30,50"]));
    let positions: Vec<usize> = ["\"lambda_lower\"", "\"lambda_upper\"", "\"argmin\"", "\"argmax\"", "\"alpha\"", "\"diagnostics\""]
        .iter()
        .map(|k| text.find(k).unwrap())
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{text}");
}

#[test]
fn bounds_for_two_categories_use_the_binomial_interval() {
    let v = json(&run(&["bounds", "--counts", "50,50"]));
    let interval = v["diagnostics"]["binomial_interval"].as_array().unwrap();
    assert!((interval[0].as_f64().unwrap() - 0.39832).abs() < 1e-5);
    assert!((interval[1].as_f64().unwrap() - 0.60168).abs() < 1e-5);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["bounds", "--counts", "a,b"]).status.code(), Some(2));
    assert_eq!(run(&["bounds", "--counts", "0,30,70"]).status.code(), Some(3));
    assert_eq!(run(&["bounds", "--counts", "0,30,70", "--smooth", "half"]).status.code(), Some(0));
    assert_eq!(run(&["bounds", "--counts", "1,2", "--objective", "cubic"]).status.code(), Some(2));
    assert_eq!(run(&["chi2", "quantile", "--d", "2", "--q", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let missing_dir = run(&["bounds", "--counts", "20,30,50", "--out", "/nonexistent/dir/out.json"]);
    assert_eq!(missing_dir.status.code(), Some(6));
    let failing = run(&["verify", "tv", "--n", "16", "--d", "5"]);
    assert_ne!(failing.status.code(), Some(0));
}

#[test]
fn chi2_values() {
    assert_eq!(stdout(&run(&["chi2", "cdf", "--d", "2", "--ell", "2"])), "0.632120558828558\n");
    assert_eq!(stdout(&run(&["chi2", "quantile", "--d", "2", "--q", "0.95"])), "5.99146454710798\n");
    assert_eq!(stdout(&run(&["chi2", "cdf", "--d", "3", "--ell", "0"])), "0\n");
}

#[test]
fn verify_suites() {
    let moments = run(&["verify", "moments"]);
    assert!(moments.status.success());
    assert!(stdout(&moments).lines().all(|l| l.starts_with("PASS")));
    let expansion = run(&["verify", "expansion", "--n", "256", "--tau", "3"]);
    assert!(expansion.status.success());
    assert!(stdout(&expansion).contains("max slack used"));
    let tv = run(&["verify", "tv", "--n", "16", "--d", "1"]);
    assert!(tv.status.success());
    assert!(stdout(&tv).contains("bound vacuous (>1)"));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("fig");
    let args = |out: &str| {
        vec![
            "simulate".to_string(),
            "--trials".into(),
            "1".into(),
            "--seed".into(),
            "42".into(),
            "--n-grid".into(),
            "100,200".into(),
            "--out".into(),
            dir.path().join(out).display().to_string(),
            "--svg".into(),
            prefix.display().to_string(),
        ]
    };
    let first = Command::new(env!("CARGO_BIN_EXE_simplex-conf")).args(args("a.csv")).output().unwrap();
    assert!(first.status.success());
    let bounds_svg = fs::read(dir.path().join("fig_bounds.svg")).unwrap();
    let second = Command::new(env!("CARGO_BIN_EXE_simplex-conf")).args(args("b.csv")).output().unwrap();
    assert!(second.status.success());
    let a = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b.csv")).unwrap());
    assert_eq!(bounds_svg, fs::read(dir.path().join("fig_bounds.svg")).unwrap());
    assert!(dir.path().join("fig_level.svg").exists());
    assert!(a.starts_with("n,lambda0,mean_lower,mean_upper,empirical_level,trials,resampled\n"));
    assert_eq!(a.lines().count(), 3);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    fs::write(&config, r#"{"counts": [20, 30, 50], "alpha": 0.2}"#).unwrap();
    let from_file = json(&run(&["--config", config.to_str().unwrap(), "bounds"]));
    assert_eq!(from_file["alpha"], 0.2);
    let overridden = json(&run(&["--config", config.to_str().unwrap(), "bounds", "--alpha", "0.01"]));
    assert_eq!(overridden["alpha"], 0.01);
    assert!(
        overridden["lambda_upper"].as_f64().unwrap() > from_file["lambda_upper"].as_f64().unwrap()
    );
}

#[test]
fn counts_file_and_quadratic_objective() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("counts.csv");
    fs::write(&counts, "category,value,count\na,1,20\nb,2,30\nc,3,15\nd,4,35\n").unwrap();
    let v = json(&run(&[
        "bounds",
        "--counts-file",
        counts.to_str().unwrap(),
        "--objective",
        "quadratic:fig2",
    ]));
    assert_eq!(v["values"], serde_json::json!([1.0, 2.0, 3.0, 4.0]));
    assert!(v["lambda_lower"].as_f64().unwrap() < 0.5825);
    assert!(v["lambda_upper"].as_f64().unwrap() > 0.5825);
}
