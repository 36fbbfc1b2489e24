use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hybrid_evt::simulation::rng_for;
use hybrid_evt::DistributionSpec;
use tempfile::TempDir;

fn hevt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hevt"))
        .args(args)
        .env_remove("EVT_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_sample(dir: &Path, name: &str, spec: DistributionSpec, n: usize, seed: u64) -> PathBuf {
    let values = spec.sample(&mut rng_for(seed, 0, 0), n).unwrap();
    let text: String = values.iter().map(|v| format!("{v}\n")).collect();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SMALL_CONFIG: &str = r#"{
    "spec": {"family": "pareto", "gamma": 0.25},
    "n": 2000,
    "m_grid": [1, 10, 20],
    "k0_rule": {"fraction": 0.25},
    "estimators": ["h2", "gev-mle"],
    "replicates": 6,
    "master_seed": 11
}"#;

#[test]
fn estimate_h2_on_unit_blocks_is_hill() {
    let dir = TempDir::new().unwrap();
    let data = write_sample(
        dir.path(),
        "d.txt",
        DistributionSpec::pareto(0.25).unwrap(),
        1000,
        3,
    );
    let data = data.to_str().unwrap();
    let a = hevt(&[
        "estimate",
        "--input",
        data,
        "--block-size",
        "1",
        "--k0",
        "50",
        "--estimator",
        "h2",
    ]);
    let b = hevt(&[
        "estimate",
        "--input",
        data,
        "--k0",
        "50",
        "--estimator",
        "hill",
    ]);
    assert!(a.status.success() && b.status.success());
    let fa: Vec<String> = stdout(&a).trim().split(',').map(String::from).collect();
    let fb: Vec<String> = stdout(&b).trim().split(',').map(String::from).collect();
    assert_eq!(fa[0], "h2");
    assert_eq!(fb[0], "hill");
    assert_eq!(fa[1..], fb[1..]);
    assert_eq!(stdout(&a).lines().count(), 1);
}

#[test]
fn estimate_rejects_zero_k0() {
    let dir = TempDir::new().unwrap();
    let data = write_sample(
        dir.path(),
        "d.txt",
        DistributionSpec::pareto(0.25).unwrap(),
        100,
        3,
    );
    let out = hevt(&["estimate", "--input", data.to_str().unwrap(), "--k0", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn estimate_amse_rule_picks_forty() {
    let dir = TempDir::new().unwrap();
    let data = write_sample(
        dir.path(),
        "d.txt",
        DistributionSpec::frechet(0.25).unwrap(),
        5000,
        4,
    );
    let out = hevt(&[
        "estimate",
        "--input",
        data.to_str().unwrap(),
        "--block-size",
        "20",
        "--k0-rule",
        "amse",
        "--beta",
        "1.0",
        "--family",
        "frechet",
        "--with-header",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("estimator,gamma_hat,k0,m,k,correction"));
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&fields[2..5], &["40", "20", "250"]);
}

#[test]
fn estimate_reduced_bias_and_gev() {
    let dir = TempDir::new().unwrap();
    let data = write_sample(
        dir.path(),
        "d.txt",
        DistributionSpec::frechet(0.25).unwrap(),
        5000,
        5,
    );
    let data = data.to_str().unwrap();
    let rb = hevt(&[
        "estimate",
        "--input",
        data,
        "--block-size",
        "20",
        "--k0",
        "100",
        "--estimator",
        "rbh2r",
    ]);
    assert!(rb.status.success());
    let fields: Vec<String> = stdout(&rb).trim().split(',').map(String::from).collect();
    assert_eq!(fields[0], "rbh2r");
    assert!(fields[5].parse::<f64>().unwrap() > 0.0);
    let gev = hevt(&[
        "estimate",
        "--input",
        data,
        "--block-size",
        "20",
        "--estimator",
        "gev-mle",
    ]);
    assert!(gev.status.success());
    let fields: Vec<String> = stdout(&gev).trim().split(',').map(String::from).collect();
    assert_eq!(fields.len(), 6);
    assert_eq!(fields[0], "gev-mle");
    let g: f64 = fields[3].parse().unwrap();
    assert!(g > 0.0 && g < 0.6, "{g}");
}

#[test]
fn estimate_bad_data_exits_three() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.txt", "1.0\nabc\n");
    let out = hevt(&["estimate", "--input", bad.to_str().unwrap(), "--k0", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
    let missing = dir.path().join("nope.txt");
    let out = hevt(&[
        "estimate",
        "--input",
        missing.to_str().unwrap(),
        "--k0",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_estimator_is_usage_error() {
    let out = hevt(&["estimate", "--input", "x", "--estimator", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic_and_shaped() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL_CONFIG);
    let cfg = cfg.to_str().unwrap();
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    let run = |out: &Path, workers: &str| {
        let o = hevt(&[
            "simulate",
            "--config",
            cfg,
            "--output",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let a = run(&out1, "1");
    let b = run(&out2, "4");
    assert_eq!(a, b);
    let again = run(&out1, "1");
    assert_eq!(a, again);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("family,gamma_true,n,m,k,k0,estimator,replicates,mean_estimate,bias,variance,mse,master_seed")
    );
    // |m_grid| x |estimators| rows.
    assert_eq!(lines.count(), 6);
}

#[test]
fn env_seed_overrides_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL_CONFIG);
    let o = Command::new(env!("CARGO_BIN_EXE_hevt"))
        .args([
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--workers",
            "1",
        ])
        .env("EVT_SEED", "99")
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",99")));
}

#[test]
fn simulate_rejects_bad_configs() {
    let dir = TempDir::new().unwrap();
    let broken = write(dir.path(), "broken.json", "{ not json");
    let o = hevt(&["simulate", "--config", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let unknown = write(
        dir.path(),
        "unknown.json",
        &SMALL_CONFIG.replace("\"n\"", "\"extra\": 1, \"n\""),
    );
    let o = hevt(&["simulate", "--config", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("extra"));
    let invalid = write(
        dir.path(),
        "invalid.json",
        &SMALL_CONFIG.replace("\"replicates\": 6", "\"replicates\": 0"),
    );
    let o = hevt(&["simulate", "--config", invalid.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweeps_apply_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL_CONFIG);
    let cfg = cfg.to_str().unwrap();
    let o = hevt(&[
        "sweep-m",
        "--config",
        cfg,
        "--m-grid",
        "5,50",
        "--workers",
        "1",
    ]);
    assert!(o.status.success());
    let ms: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().to_string())
        .collect();
    assert_eq!(ms, ["5", "5", "50", "50"]);

    let o = hevt(&[
        "sweep-k0",
        "--config",
        cfg,
        "--m",
        "20",
        "--k0-grid",
        "10,50,99",
        "--workers",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let k0s: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(5).unwrap().to_string())
        .collect();
    // gev-mle row records k0 = k = 100.
    assert_eq!(k0s, ["100", "10", "50", "99"]);

    let o = hevt(&["sweep-k0", "--config", cfg, "--workers", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_theory_pareto() {
    let o = hevt(&[
        "check-theory",
        "--family",
        "pareto",
        "--gamma",
        "0.25",
        "--m",
        "10",
        "--x",
        "2",
        "--t",
        "1e6",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("check,x,value,limit,rel_error"));
    let row = lines.find(|l| l.starts_with("condition_b_ratio,")).unwrap();
    let rel: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!(rel < 1e-3, "{row}");
    let o = hevt(&["check-theory", "--family", "nope", "--gamma", "0.25"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plot_structure() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL_CONFIG);
    let csv = dir.path().join("s.csv");
    let o = hevt(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        csv.to_str().unwrap(),
        "--workers",
        "1",
    ]);
    assert!(o.status.success());
    let svg = dir.path().join("p.svg");
    let o = hevt(&[
        "plot",
        "--input",
        csv.to_str().unwrap(),
        "--x-column",
        "m",
        "--y-column",
        "mean_estimate",
        "--reference-line",
        "0.25",
        "--output",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<?xml"));
    assert!(text.trim_end().ends_with("</svg>"));
    assert_eq!(text.matches("<polyline").count(), 2);
    assert!(text.contains("data-series=\"h2\"") && text.contains("data-series=\"gev-mle\""));
    assert_eq!(text.matches("class=\"reference\"").count(), 1);
    assert!(text.matches("class=\"legend\"").count() == 2);
    assert!(!text.contains("href"));

    let empty = write(dir.path(), "empty.csv", "");
    let o = hevt(&[
        "plot",
        "--input",
        empty.to_str().unwrap(),
        "--output",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = hevt(&[
        "plot",
        "--input",
        csv.to_str().unwrap(),
        "--x-column",
        "k0",
        "--y-column",
        "mse",
        "--output",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success());
}
