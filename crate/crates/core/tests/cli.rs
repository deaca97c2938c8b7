//! Command-line behaviour: outputs, exit codes and config diagnostics.

use std::path::Path;
use std::process::{Command, Output};

use sparsecoll::indexset::{IndexPlan, Parity, Regime};
use sparsecoll::oracle::box_scan_plan;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsecoll")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"
[model]
psi = { kind = "power-sine", scale = 1.0, decay = 3.0 }
dims = 2

[weights]
rho1 = { kind = "power", c = 2.0, kappa = 1.5 }
rho2 = { kind = "power", c = 2.0, kappa = 0.75 }
q1 = 0.75
q2 = 1.5
eta = 2

[study]
mode = "interpolation"
budgets = [4, 8, 16]
max_level = 8
reference_level = 10
mc_samples = 8
"#;

#[test]
fn nodes_contains_hermite_roots() {
    let out = run(&["nodes", "--family", "gauss-hermite", "--m", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let points: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let r3 = 3f64.sqrt();
    for (p, e) in points.iter().zip([-r3, 0.0, r3]) {
        assert!((p - e).abs() < 1e-14, "{text}");
    }
}

#[test]
fn exactness_exits_cleanly() {
    let out = run(&["exactness"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",true,")), "{text}");
}

#[test]
fn indexset_matches_box_scan() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.toml", SMALL);
    let out = run(&["indexset", "--config", &config, "--xi", "100"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let plan = IndexPlan::from_json(&value["plan"].to_string()).unwrap();
    assert_eq!((plan.regime, plan.parity), (Regime::Interpolation, Parity::All));

    let parsed = sparsecoll::cli::ExperimentConfig::from_toml(SMALL).unwrap();
    let w = parsed.weights().unwrap();
    let (q1, q2, alpha) = (w.spec1.q, w.spec2.q, 1.0);
    assert!(alpha > 1.0 / q2 - 0.5);
    let theta = 1.0 / q1 + (1.0 / q1 - 1.0 / q2) / (2.0 * alpha);
    // The weights grow in every coordinate, so a box a few steps past the
    // plan's extent holds every admissible index.
    let extent = |d: usize| plan.entries.iter().map(|e| e.s.get(d)).max().unwrap() + 3;
    let k_max = plan.entries.iter().map(|e| e.k).max().unwrap() + 3;
    let scan = box_scan_plan(k_max, &[extent(0), extent(1)], |k, s| {
        w.spec1.weight_value(s).powf(q1) <= 100.0
            && 2f64.powf((alpha + 0.5) * k as f64) * w.spec2.weight_value(s) <= 100f64.powf(theta)
    })
    .unwrap();
    let missing: Vec<_> = scan.iter().filter(|e| !plan.entries.contains(e)).take(5).collect();
    let extra: Vec<_> = plan.entries.iter().filter(|e| !scan.contains(e)).take(5).collect();
    assert_eq!(plan.entries, scan, "missing {missing:?} extra {extra:?}");
    assert_eq!(value["stats"]["cardinality"], plan.len());
}

#[test]
fn study_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.toml", SMALL);
    let out_dir = dir.path().join("out");
    let out = run(&["study", "--config", &config, "--out", out_dir.to_str().unwrap(), "--seed", "3", "--jobs", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("study.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("n,xi,cardinality,dyadic_dim,grid_points,max_level,error,relative_error,std_error"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 3);
    assert!(out_dir.join("timings.csv").exists());
}

#[test]
fn verify_profile_records_exactness() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.toml", SMALL);
    let out_dir = dir.path().join("out");
    let out = run(&["study", "--config", &config, "--out", out_dir.to_str().unwrap(), "--profile", "verify"]);
    assert!(out.status.success());
    assert!(out_dir.join("exactness.csv").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", &SMALL.replace("budgets = [4, 8, 16]", "budgets = [8, 4]"));
    let out = run(&["study", "--config", &bad, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("study.budgets"));

    let typo = write(dir.path(), "typo.toml", &SMALL.replace("dims = 2", "dims = two"));
    let out = run(&["study", "--config", &typo, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    let out = run(&["nodes", "--family", "chebyshev", "--m", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_errors_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("budgets = [4, 8, 16]", "budgets = [4096]").replace("max_level = 8", "max_level = 2");
    let config = write(dir.path(), "c.toml", &text);
    let out = run(&["study", "--config", &config, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bundled_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            sparsecoll::cli::ExperimentConfig::load(&path).unwrap();
            count += 1;
        }
    }
    assert!(count >= 5);
}
