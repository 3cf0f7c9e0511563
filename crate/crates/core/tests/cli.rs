use std::path::Path;

use fracinv_core::cli;
use serde_json::Value;

fn run(args: &[&str], out: &Path) -> i32 {
    let mut argv: Vec<String> = std::iter::once("fracinv")
        .chain(args.iter().copied())
        .map(String::from)
        .collect();
    argv.push("-o".into());
    argv.push(out.display().to_string());
    cli::main(argv)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_values(path: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn zero_case_writes_zero_source() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(
            &["invert", "--case", "MMS-0", "--nt", "17", "--nx", "17"],
            dir.path()
        ),
        0
    );
    let h = csv_values(&dir.path().join("h.csv"));
    assert_eq!(h.len(), 17 * 17);
    assert!(h.iter().all(|&v| v == 0.0));
    let text = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("t,x,h"));
}

#[test]
fn invert_reports_contraction() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(
            &["invert", "--case", "MMS-1", "--nt", "129", "--nx", "129"],
            dir.path()
        ),
        0
    );
    let report = json(&dir.path().join("convergence.json"));
    assert_eq!(report["converged"], Value::Bool(true));
    let ratios: Vec<f64> = report["ratios"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(ratios.iter().skip(1).all(|&r| r <= 0.6));
    let estimates = json(&dir.path().join("estimates.json"));
    assert!(estimates["bound_checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|b| b["holds"] == Value::Bool(true)));

    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["exit_code"], 0);
    let files = manifest["files"].as_array().unwrap();
    let names: Vec<&str> = files.iter().map(|f| f["path"].as_str().unwrap()).collect();
    assert_eq!(names, ["h.csv", "convergence.json", "estimates.json"]);
    assert!(files
        .iter()
        .all(|f| f["sha256"].as_str().unwrap().len() == 64));
}

#[test]
fn large_horizon_is_reported_not_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(
            &[
                "check-conditions",
                "--case",
                "MMS-1",
                "--T",
                "2.0",
                "--nt",
                "17",
                "--nx",
                "17"
            ],
            dir.path()
        ),
        0
    );
    let estimates = json(&dir.path().join("estimates.json"));
    assert!(estimates["condition4"].as_f64().unwrap() > 1.0);
}

#[test]
fn non_convergence_exits_two_with_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(
        &[
            "invert",
            "--case",
            "MMS-1",
            "--nt",
            "17",
            "--nx",
            "17",
            "--max-iter",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(code, 2);
    assert!(dir.path().join("h.csv").exists());
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["status"], "not-converged");
    assert_eq!(manifest["exit_code"], 2);
}

#[test]
fn misuse_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["invert", "--alpha", "1.5"], dir.path()), 1);
    assert_eq!(run(&["invert", "--l0", "0"], dir.path()), 1);
    assert_eq!(run(&["invert", "--case", "MMS-7"], dir.path()), 1);
    assert_eq!(run(&["invert", "--bogus"], dir.path()), 1);

    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"case": "MMS-1", "alpah": 0.5}"#).unwrap();
    assert_eq!(
        run(
            &["invert", "--config", config.to_str().unwrap()],
            dir.path()
        ),
        1
    );
    assert_eq!(cli::main(["fracinv", "--help"]), 0);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        r#"{"case": "MMS-1", "alpha": 0.7, "nt": 9, "nx": 9, "K": 8}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    assert_eq!(
        run(
            &[
                "check-conditions",
                "--config",
                config.to_str().unwrap(),
                "--nt",
                "13"
            ],
            &out
        ),
        0
    );
    let manifest = json(&out.join("manifest.json"));
    let params = &manifest["config"]["params"];
    assert_eq!(params["alpha"], 0.7);
    assert_eq!(params["nt"], 13);
    assert_eq!(params["nx"], 9);
    assert_eq!(params["modes"], 8);
    assert_eq!(params["ny"], 65);
}

#[test]
fn synthesized_trace_feeds_inversion() {
    let dir = tempfile::tempdir().unwrap();
    let grid = ["--case", "MMS-2", "--nt", "33", "--nx", "33", "--K", "8"];
    let synth = dir.path().join("synth");
    let args: Vec<&str> = ["synthesize"].iter().chain(grid.iter()).copied().collect();
    assert_eq!(run(&args, &synth), 0);
    let psi = synth.join("psi.csv");
    let inv = dir.path().join("inv");
    let args: Vec<&str> = ["invert", "--psi-file", psi.to_str().unwrap()]
        .iter()
        .chain(grid.iter())
        .copied()
        .collect();
    assert_eq!(run(&args, &inv), 0);
    let report = json(&inv.join("convergence.json"));
    assert_eq!(report["converged"], Value::Bool(true));
}

#[test]
fn verify_writes_study() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(
            &[
                "verify",
                "--case",
                "MMS-1",
                "--ladder",
                "9x9,17x17,33x33",
                "--K",
                "4"
            ],
            dir.path()
        ),
        0
    );
    let study = json(&dir.path().join("study.json"));
    assert_eq!(study["levels"].as_array().unwrap().len(), 3);
    assert!(study["observed_order"].as_f64().unwrap() > 1.5);
}

#[test]
fn forward_dumps_modes_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(
        &[
            "forward",
            "--case",
            "MMS-1",
            "--nt",
            "9",
            "--nx",
            "9",
            "--K",
            "2",
            "--dump-modes",
            "--dump-full",
        ],
        dir.path(),
    );
    assert_eq!(code, 0);
    for name in ["psi.csv", "mode_1.csv", "mode_2.csv", "full.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let full = std::fs::read_to_string(dir.path().join("full.csv")).unwrap();
    assert_eq!(full.lines().count(), 1 + 9 * 9 * 17);
}
