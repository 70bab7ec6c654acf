use std::path::Path;
use std::process::{Command, Output};

use pressure_lab_cli::report::{CURVE_COLUMNS, TEC_COLUMNS};
use pressure_lab_cli::{exit_code, run_command, EXIT_NUMERIC, EXIT_OK, EXIT_PARSE, EXIT_VALIDATION};
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pressure-lab")).args(args).output().unwrap()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

#[test]
fn tec_exhaustive_matches_golden() {
    let out = bin(&["tec-fuzz", "--max-size", "4", "--exhaustive"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden("tec_exhaustive_4.csv"));
}

#[test]
fn tent_curve_matches_golden() {
    let args = [
        "pressure-curve",
        "--map",
        "tent",
        "--t",
        "-2:-0.5:4",
        "--base",
        "0.3",
        "--collocation-size",
        "128",
        "--depth",
        "8",
    ];
    let out = bin(&args);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden("tent_curve.csv"));
}

#[test]
fn csv_headers_are_fixed() {
    let curve = golden("tent_curve.csv");
    assert_eq!(curve.lines().next().unwrap(), CURVE_COLUMNS.join(","));
    let tec = golden("tec_exhaustive_4.csv");
    assert_eq!(tec.lines().next().unwrap(), TEC_COLUMNS.join(","));
}

#[test]
fn curve_outputs_are_byte_identical_and_record_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("curve{run}.csv"));
        let svg = dir.path().join(format!("curve{run}.svg"));
        let code = run_command([
            "pressure-lab",
            "pressure-curve",
            "--map",
            "chebyshev2",
            "--t",
            "-3:-0.05:24",
            "--seed",
            "17",
            "--collocation-size",
            "256",
            "--depth",
            "10",
            "--out",
            out.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        bodies.push(std::fs::read(&out).unwrap());
        let svg_text = std::fs::read_to_string(&svg).unwrap();
        assert!(svg_text.starts_with("<svg") && svg_text.contains("stroke-dasharray"));
        let manifest: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("curve{run}.csv.manifest.json"))).unwrap())
                .unwrap();
        assert_eq!(manifest["config"]["engine"]["seed"], 17);
        assert_eq!(manifest["command"], "pressure-curve");
    }
    assert_eq!(bodies[0], bodies[1]);
    let text = String::from_utf8(bodies.remove(0)).unwrap();
    assert_eq!(text.lines().count(), 25);
}

#[test]
fn cohomology_json_for_chebyshev() {
    let a = bin(&["cohomology", "--map", "chebyshev2"]);
    let b = bin(&["cohomology", "--map", "chebyshev2"]);
    assert_eq!(a.status.code(), Some(EXIT_OK));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    for key in ["sigma_max", "alpha", "b", "lambda_G", "exceptional", "warnings"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["sigma_max"], serde_json::json!([-1.0, 1.0]));
    assert_eq!(v["alpha"]["1"], -0.5);
    assert_eq!(v["alpha"]["-1"], -0.5);
    assert_eq!(v["b"], serde_json::json!({"0": 0.0}));
    assert!((v["g_constant"].as_f64().unwrap() - std::f64::consts::LN_2).abs() < 1e-9);
    assert_eq!(v["manifest"]["config"]["engine"]["seed"], 0);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"map": {"type": "named", "name": "tent"}, "engine": {"seed": 5, "collocation_size": 128, "depth": 8}}"#,
    )
    .unwrap();
    let out = bin(&["cohomology", "--config", cfg.to_str().unwrap(), "--map", "ulam", "--seed", "6"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["manifest"]["config"]["map"]["name"], "ulam");
    assert_eq!(v["manifest"]["config"]["engine"]["seed"], 6);
    assert_eq!(v["manifest"]["config"]["engine"]["depth"], 8);
    assert_eq!(v["exceptional"], true);

    std::fs::write(&cfg, "{not json").unwrap();
    assert_eq!(bin(&["cohomology", "--config", cfg.to_str().unwrap()]).status.code(), Some(EXIT_PARSE));
}

#[test]
fn exit_codes() {
    assert_eq!(run_command(["pressure-lab", "cohomology", "--map", "chebyshev2", "--potential", "1+)"]), EXIT_PARSE);
    assert_eq!(run_command(["pressure-lab", "pressure-curve", "--map", "tent", "--t", "-1:1:3"]), EXIT_VALIDATION);
    assert_eq!(run_command(["pressure-lab", "cohomology", "--map", "nosuchmap"]), EXIT_VALIDATION);
    assert_eq!(run_command(["pressure-lab", "frobnicate"]), EXIT_VALIDATION);
    assert_eq!(run_command(["pressure-lab", "cohomology"]), EXIT_VALIDATION);
    assert_eq!(
        run_command(["pressure-lab", "transition", "--map", "chebyshev2", "--t", "-3:-0.05:10"]),
        EXIT_VALIDATION
    );
    let numeric = anyhow::Error::from(pressure_lab_core::Error::NoGap { ratio: 1.0 }).context("keller");
    assert_eq!(exit_code(&numeric), EXIT_NUMERIC);
    let parse = anyhow::Error::from(serde_json::from_str::<Value>("{").unwrap_err());
    assert_eq!(exit_code(&parse), EXIT_PARSE);
}

#[test]
fn tec_fuzz_random_mode() {
    let a = bin(&["tec-fuzz", "--max-size", "6", "--samples", "500", "--seed", "3"]);
    let b = bin(&["tec-fuzz", "--max-size", "6", "--samples", "500", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(EXIT_OK));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",500,0")));
}

#[test]
fn transition_and_keller_reports() {
    let out = bin(&["transition", "--map", "chebyshev2", "--collocation-size", "256", "--depth", "10"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["criterion"], true);
    assert!((v["t_c"].as_f64().unwrap() + 1.0).abs() < 0.05);
    assert!(v["verdict"].as_str().unwrap().starts_with("exceptional"));

    let out = bin(&["keller", "--map", "chebyshev2", "--potential", "constant:0.6931471805599453", "--t", "-1", "--n", "256"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["pressure"].as_f64().unwrap() - 2.0 * std::f64::consts::LN_2).abs() < 1e-9);
    let norm = &v["keller_norm"];
    assert!((norm["total"].as_f64().unwrap() - norm["l1_part"].as_f64().unwrap() - norm["var_part"].as_f64().unwrap()).abs() < 1e-12);

    let out = bin(&["analyze", "--map", "chebyshev2", "--collocation-size", "256", "--depth", "10"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["estimates"].as_array().unwrap().len(), 2);
    assert_eq!(v["theta"]["symbolic"], true);
}
