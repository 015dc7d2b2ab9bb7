//! End-to-end checks of the `twinchan` binary: the exit-code contract,
//! machine-readable errors, deterministic reruns, and the scenario
//! build/inspect/sound pipeline on a small fixture.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twinchan"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary must run")
}

fn write_fixture_inputs(dir: &Path) -> (PathBuf, PathBuf) {
    let rays = dir.join("rays.csv");
    let mut csv = String::from("t_s,tx,rx,toa_s,gain_db,phase_rad\n");
    for (tx, rx) in [(1, 2), (2, 1)] {
        csv.push_str(&format!("0.0,{tx},{rx},0.0,-3.0,0.0\n"));
        csv.push_str(&format!("0.0,{tx},{rx},2.0e-6,-15.0,0.5\n"));
    }
    std::fs::write(&rays, csv).unwrap();

    let nodes = dir.join("nodes.json");
    let spec = serde_json::json!({
        "name": "cli-fixture",
        "sampling_interval_s": 0.01,
        "nodes": [
            { "id": 1, "kind": "static", "position": [0.0, 0.0, 1.0], "speed_mps": 0.0 },
            { "id": 2, "kind": "static", "position": [4.0, 0.0, 1.0], "speed_mps": 0.0 }
        ]
    });
    std::fs::write(&nodes, serde_json::to_vec_pretty(&spec).unwrap()).unwrap();
    (rays, nodes)
}

#[test]
fn scenario_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let (rays, nodes) = write_fixture_inputs(dir.path());
    let bundle = dir.path().join("fixture.twsc");

    let out = run(&[
        "scenario",
        "build",
        "--paths",
        rays.to_str().unwrap(),
        "--nodes",
        nodes.to_str().unwrap(),
        "-o",
        bundle.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(bundle.exists());
    assert!(dir.path().join("fixture.twsc.manifest.json").exists());

    let out = run(&["scenario", "inspect", bundle.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("cli-fixture"));
    assert!(text.contains("512 slots"));

    let heatmap = dir.path().join("heatmap.csv");
    let out = run(&[
        "scenario",
        "heatmap",
        bundle.to_str().unwrap(),
        "--frame",
        "0",
        "-o",
        heatmap.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let body = std::fs::read_to_string(&heatmap).unwrap();
    // two -3/-15 dB power taps: loss = -10 log10(10^-0.3 + 10^-1.5)
    let expect = -10.0 * (10f64.powf(-0.3) + 10f64.powf(-1.5)).log10();
    let cell: f64 = body
        .lines()
        .nth(1)
        .and_then(|l| l.split(',').nth(2))
        .and_then(|v| v.parse().ok())
        .unwrap();
    assert!((cell - expect).abs() < 1e-3, "heatmap cell {cell} vs {expect}");

    // sound the built scenario and check the measured loss
    let result = dir.path().join("sounding.json");
    let out = run(&[
        "sound",
        "run",
        "--scenario",
        bundle.to_str().unwrap(),
        "--tx",
        "1",
        "--rx",
        "2",
        "--rate",
        "1e6",
        "--duration",
        "0.01",
        "--seed",
        "3",
        "-o",
        result.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let parsed: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&result).unwrap()).unwrap();
    let loss = parsed["path_loss_db"].as_f64().unwrap();
    // strongest path -3 dB plus the default 57.55 dB base loss
    assert!((loss - 60.55).abs() < 0.1, "measured loss {loss}");
}

#[test]
fn seq_gen_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run_idx in 0..2 {
        let text = dir.path().join(format!("chips{run_idx}.txt"));
        let bin_path = dir.path().join(format!("chips{run_idx}.i8"));
        let out = run(&[
            "seq",
            "gen",
            "--family",
            "glfsr",
            "--degree",
            "8",
            "--mask",
            "0",
            "--seed",
            "1",
            "-o",
            text.to_str().unwrap(),
            "--bin",
            bin_path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        outputs.push((std::fs::read(&text).unwrap(), std::fs::read(&bin_path).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1], "reruns must be byte-identical");
    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert_eq!(text.lines().count(), 255);
    assert!(text.lines().all(|l| l == "1" || l == "-1"));
    assert_eq!(outputs[0].1.len(), 255);
    assert!(outputs[0].1.iter().all(|&b| b == 1 || b == 0xFF));
}

#[test]
fn jam_trace_is_deterministic_and_confined() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for idx in 0..2 {
        let csv = dir.path().join(format!("sinr{idx}.csv"));
        let svg = dir.path().join(format!("sinr{idx}.svg"));
        let out = run(&[
            "jam",
            "--kind",
            "wideband",
            "--on",
            "2",
            "--off",
            "4",
            "--total",
            "8",
            "--seed",
            "5",
            "-o",
            csv.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
        bodies.push(std::fs::read(&csv).unwrap());
    }
    assert_eq!(bodies[0], bodies[1], "fixed seed must give identical traces");
    let text = String::from_utf8(bodies[0].clone()).unwrap();
    let values: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 8);
    for (t, v) in values.iter().enumerate() {
        if (2..4).contains(&t) {
            assert!(*v < values[0] - 1.0, "expected drop at t={t}");
        } else {
            assert!((v - values[0]).abs() < 1.0, "no drop expected at t={t}");
        }
    }
}

#[test]
fn compare_identical_files_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let mut body = String::from("t_s,value\n");
    for t in 0..30 {
        body.push_str(&format!("{t},{}\n", 5.0 + f64::from(t % 3)));
    }
    std::fs::write(&a, &body).unwrap();
    let b = dir.path().join("b.csv");
    std::fs::write(&b, &body).unwrap();
    let out = run(&[
        "compare",
        "--real",
        a.to_str().unwrap(),
        "--twin",
        b.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((parsed["score"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(parsed["best_lag"].as_i64().unwrap(), 0);
}

#[test]
fn validation_errors_exit_2_with_json() {
    let dir = tempfile::tempdir().unwrap();
    // malformed ray CSV names the row
    let rays = dir.path().join("bad.csv");
    std::fs::write(&rays, "t_s,tx,rx,toa_s,gain_db,phase_rad\n0.0,1,2,zzz,-3.0,0.0\n").unwrap();
    let (_, nodes) = write_fixture_inputs(dir.path());
    let out = run(&[
        "scenario",
        "build",
        "--paths",
        rays.to_str().unwrap(),
        "--nodes",
        nodes.to_str().unwrap(),
        "-o",
        dir.path().join("x.twsc").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "validation");
    assert!(err["error"]["message"].as_str().unwrap().contains("line 2"));

    // unknown reproduce id
    let out = run(&["reproduce", "does-not-exist"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("unknown experiment"));
}

#[test]
fn config_file_fills_unset_flags() {
    // precedence: CLI flags > config file > defaults
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        serde_json::to_vec(&serde_json::json!({
            "jam": { "kind": "narrowband", "total": 6.0, "on": 2.0, "off": 4.0, "seed": 9 }
        }))
        .unwrap(),
    )
    .unwrap();
    let out_csv = dir.path().join("sinr.csv");
    // --total on the command line overrides the config's 6.0
    let out = run(&[
        "jam",
        "--config",
        cfg.to_str().unwrap(),
        "--total",
        "5",
        "--off",
        "4",
        "-o",
        out_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let body = std::fs::read_to_string(&out_csv).unwrap();
    assert_eq!(body.lines().count(), 6, "5 seconds of trace plus header");
    let manifest: serde_json::Value = serde_json::from_slice(
        &std::fs::read(dir.path().join("sinr.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["config"]["kind"], "narrowband"); // from the file
    assert_eq!(manifest["config"]["total"], 5.0); // flag wins
    assert_eq!(manifest["seeds"]["demo"], 9); // from the file
}

#[test]
fn seq_merit_reports_json() {
    let out = run(&["seq", "merit", "--code", "glfsr:8:0:1"]);
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed["peak"].as_i64().unwrap(), 255);
    assert_eq!(parsed["max_off_peak_abs"].as_i64().unwrap(), 1);
}
