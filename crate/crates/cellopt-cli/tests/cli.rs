//! End-to-end tests of the `cellopt` binary: exit codes, JSON output, and
//! byte-level reproducibility of experiment runs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cellopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cellopt"))
        .args(args)
        .output()
        .expect("binary must spawn")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout must be JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).expect("config must write");
    path
}

#[test]
fn solve_sc_defaults_reproduce_known_optimum() {
    let out = cellopt(&["solve-sc"]);
    assert_eq!(out.status.code(), Some(0), "default instance is feasible");
    let v = stdout_json(&out);
    assert_eq!(v["status"], "feasible");
    assert_eq!(v["mbar"], 4, "budget floor must lift the count to 4");
    assert_eq!(v["m"], 4);
    assert_eq!(v["p"], serde_json::json!([1.0]));
    assert_eq!(v["cost"], 9.0, "U = 2*4 + 1");
}

#[test]
fn solve_sc_unreachable_targets_exit_one() {
    let out = cellopt(&["solve-sc", "--alpha", "50", "--m-max", "8"]);
    assert_eq!(out.status.code(), Some(1), "infeasible is exit 1");
    let v = stdout_json(&out);
    assert_eq!(v["status"], "infeasible_sinr");
    assert!(v["cost"].is_null(), "no cost for an infeasible instance");
}

#[test]
fn solve_sc_rejects_mismatched_target_arity() {
    let out = cellopt(&["solve-sc", "--beta", "1,2,3", "--gamma", "0.5,1,1.5", "--alpha", "1,2"]);
    assert_eq!(out.status.code(), Some(2), "bad arity is a usage error");
}

#[test]
fn experiment_requires_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mode = \"p1_sweep\"\nL_grid = 1\n");
    let out = cellopt(&["experiment", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "missing --out is a usage error");
}

#[test]
fn experiment_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mode = \"p1_sweep\"\nL_grid = 1\nbogus_key = 3\n");
    let out_dir = dir.path().join("out");
    let out = cellopt(&[
        "experiment",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "typos must not be ignored");
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("bogus_key"), "error names the offending key: {msg}");
}

#[test]
fn experiment_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mode = \"p3_sweep\"\ntrials = 4\nseed = 7\nL_grid = 4\nusers_per_cell = 3\n\
         sweep_values = [30, 60]\n",
    );
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = cellopt(&[
            "experiment",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "run failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for name in ["records.csv", "summary.csv", "manifest.txt"] {
        let a = fs::read(out_a.join(name)).expect(name);
        let b = fs::read(out_b.join(name)).expect(name);
        assert_eq!(a, b, "{name} must be byte-identical across reruns");
    }
    assert!(out_a.join("timings.csv").exists(), "wall time is kept separately");
}

#[test]
fn oracle_subcommand_refuses_oversized_searches() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "L_grid = 4\nusers_per_cell = 4\nm_max = 100\n",
    );
    let out = cellopt(&["oracle", cfg.to_str().unwrap(), "--limit", "1000"]);
    assert_eq!(out.status.code(), Some(2), "guard must refuse, not run");
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(
        msg.contains("limit") || msg.contains("exceeds"),
        "refusal explains itself: {msg}"
    );
}

#[test]
fn solve_p3_reports_powers_for_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "L_grid = 4\nusers_per_cell = 2\nseed = 3\n");
    let out = cellopt(&["solve-p3", cfg.to_str().unwrap(), "--m", "40"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    assert_eq!(v["status"], "feasible");
    assert_eq!(v["m"].as_array().unwrap().len(), 4, "one count per cell");
    assert_eq!(v["p"].as_array().unwrap().len(), 8, "one power per user");
    assert!(v["total_power"].as_f64().unwrap() > 0.0);
}

#[test]
fn maxmin_reports_level_and_asymptote() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "L_grid = 4\nusers_per_cell = 2\nseed = 3\n");
    let out = cellopt(&["maxmin", cfg.to_str().unwrap(), "--m", "60"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let level = v["maxmin_sinr"].as_f64().unwrap();
    let limit = v["asymptotic_limit"].as_f64().unwrap();
    assert!(level > 0.0, "finite antennas support a positive level");
    assert!(
        level <= limit * (1.0 + 1e-9),
        "finite-antenna level {level} cannot beat the asymptote {limit}"
    );
}

#[test]
fn gp_check_round_trips_a_dump() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.gp");
    fs::write(&path, "var x\nobjective\n1.0 x:1.0\nconstraint\n2.0 x:-1.0\n").unwrap();
    let out = cellopt(&["gp-check", path.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    let cost = v["cost"].as_f64().unwrap();
    assert!(
        (cost - 2.0).abs() <= 1e-6 * 2.0,
        "min x s.t. 2/x <= 1 is 2, got {cost}"
    );
}

#[test]
fn gp_check_rejects_malformed_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.gp");
    fs::write(&path, "var x\nobjective\n1.0 y:1.0\n").unwrap();
    let out = cellopt(&["gp-check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "unknown variable is a usage error");
}

#[test]
fn experiment_rejects_rounding_gap_beyond_oracle_scale() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mode = \"rounding_gap\"\ntrials = 2\nL_grid = 4\nusers_per_cell = 4\nm_max = 100\n",
    );
    let out_dir = dir.path().join("out");
    let out = cellopt(&[
        "experiment",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "exhaustive baseline must stay small");
}
