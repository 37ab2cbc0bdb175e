use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ismtrack::export::read_csv;
use serde_json::Value;
use tempfile::TempDir;

fn ismtrack(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ismtrack"))
        .args(args)
        .env("ISMTRACK_OUT_DIR", out)
        .output()
        .expect("spawn ismtrack")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

const LINE_PATH: &str = r#"
[[segment]]
kind = "line"
start = [0.0, 0.0]
end = [5.0, 0.0]
"#;

const TIGHT_PATH: &str = r#"
[[segment]]
kind = "arc"
center = [0.0, 0.0]
radius = 1.0
start_angle_deg = -90.0
end_angle_deg = 90.0
orientation = "ccw"
"#;

#[test]
fn params_benchmark_bounds() {
    let dir = TempDir::new().unwrap();
    let o = ismtrack(&["params", "--d1", "0.1", "--d2", "0.1", "--json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json_of(&o);
    assert_eq!(v["feasible"], true);
    let min_p = 1.0 - 0.9 / 1.1;
    assert!((v["min_p"].as_f64().unwrap() - min_p).abs() < 1e-12);
    assert!((v["q_window"][0].as_f64().unwrap() - min_p).abs() < 1e-12);
    assert!((v["q_window"][1].as_f64().unwrap() - 0.9 / 1.1).abs() < 1e-12);
    // 2R/(1-p) - R with R = 0.8
    let r_lower = 1.6 / (0.9 / 1.1) - 0.8;
    assert!((v["r_lower"].as_f64().unwrap() - r_lower).abs() < 1e-12);
    assert!((r_lower - 1.1556).abs() < 1e-4);
}

#[test]
fn params_text_report() {
    let dir = TempDir::new().unwrap();
    let o = ismtrack(&["params", "--d1", "0.1", "--d2", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("0.181818"), "{s}");
    assert!(s.contains("[0.181818, 0.818182]"), "{s}");
    assert!(s.contains("1.155556"), "{s}");
}

#[test]
fn params_without_disturbance() {
    let dir = TempDir::new().unwrap();
    let o = ismtrack(&["params", "--d1", "0", "--d2", "0", "--json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = json_of(&o);
    assert_eq!(v["min_p"].as_f64(), Some(0.0));
    assert_eq!(v["q_window"][0].as_f64(), Some(0.0));
    assert_eq!(v["q_window"][1].as_f64(), Some(1.0));
    assert!((v["r_lower"].as_f64().unwrap() - 0.8).abs() < 1e-15);
}

#[test]
fn params_infeasible_bounds() {
    let dir = TempDir::new().unwrap();
    let o = ismtrack(&["params", "--d1", "0.2", "--d2", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("infeasible"), "{}", stderr(&o));
}

#[test]
fn bad_usage_exits_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(ismtrack(&["params", "--d1", "abc"], dir.path()).status.code(), Some(1));
    assert_eq!(ismtrack(&["frobnicate"], dir.path()).status.code(), Some(1));
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[controller]\nradiuss = 1.0\n").unwrap();
    let o = ismtrack(&["params", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[controller]\nradius = 1.0\nq = 0.3\n[disturbance]\nd1_bar = 0.1\nd2_bar = 0.1\n").unwrap();
    let o = ismtrack(
        &["params", "--config", cfg.to_str().unwrap(), "--q", "0.4", "--json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json_of(&o);
    assert_eq!(v["params"]["r"].as_f64(), Some(1.0));
    assert_eq!(v["params"]["q"].as_f64(), Some(0.4));
}

#[test]
fn simulate_benchmark_all_starts() {
    let dir = TempDir::new().unwrap();
    let o = ismtrack(&["simulate", "--benchmark", "--all-starts"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for i in 1..=4 {
        assert!(dir.path().join(format!("run_{i}.csv")).is_file());
    }
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let runs = summary["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 4);
    for r in runs {
        assert_eq!(r["converged"], true, "{r}");
        assert_eq!(r["metrics"]["invariance_violations"].as_u64(), Some(0));
    }
    assert_eq!(summary["certificates"]["passed"], true);
}

#[test]
fn simulate_straight_line_from_rest() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("line.toml");
    fs::write(&path, LINE_PATH).unwrap();
    let o = ismtrack(
        &["simulate", "--path", path.to_str().unwrap(), "--start", "0,0", "--disturbance", "zero"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let recs = read_csv(fs::File::open(dir.path().join("run_1.csv")).unwrap()).unwrap();
    assert!(recs.len() > 1000);
    for r in &recs {
        assert_eq!((r.y_err, r.theta_err, r.sigma, r.omega), (0.0, 0.0, 0.0, 0.0));
        assert!(r.in_s);
    }
    assert!(recs.last().unwrap().s_hat > 0.999);
}

#[test]
fn simulate_rejects_tight_path_before_output() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("tight.toml");
    fs::write(&path, TIGHT_PATH).unwrap();
    let out = dir.path().join("out");
    let o = ismtrack(&["simulate", "--path", path.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("radius"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn simulate_rejects_out_of_window_override() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = ismtrack(&["simulate", "--benchmark", "--q", "0.9"], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn simulate_csv_round_trips_against_summary() {
    let dir = TempDir::new().unwrap();
    let o = ismtrack(
        &["simulate", "--benchmark", "--start", "-0.5,30", "--law", "saturated", "--seed", "11"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("run_1.csv")).unwrap();
    assert!(text.starts_with("t,x,y,theta,s_hat,y_err,theta_err,sigma,omega,d1,d2,in_S\n"));
    let recs = read_csv(text.as_bytes()).unwrap();
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let m = &summary["runs"][0]["metrics"];
    assert_eq!(m["steps"].as_u64(), Some(recs.len() as u64));
    assert_eq!(m["final_t"].as_f64(), Some(recs.last().unwrap().t));
    let mut out = Vec::new();
    ismtrack::export::write_csv(&recs, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), text);
}

#[test]
fn certify_benchmark_parameters_pass() {
    let dir = TempDir::new().unwrap();
    let o = ismtrack(&["certify", "--p", "0.182", "--q", "0.59"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("certificate.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["audit"]["passed"], true);
}

#[test]
fn certify_large_q_fails_region1() {
    let dir = TempDir::new().unwrap();
    let o = ismtrack(&["certify", "--q", "0.9"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("region1"), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("certificate.json")).unwrap()).unwrap();
    assert_eq!(v["attractiveness"]["passed"], false);
    assert_eq!(v["invariance"]["passed"], true);
}

#[test]
fn certify_small_p_fails_gamma_boundary() {
    let dir = TempDir::new().unwrap();
    let o = ismtrack(&["certify", "--p", "0.05", "--d1", "0.1", "--d2", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("Gamma"), "{}", stderr(&o));
}

#[test]
fn validate_path_commands() {
    let dir = TempDir::new().unwrap();
    let o = ismtrack(&["validate-path", "benchmark", "--json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json_of(&o)["curvature"]["passed"], true);

    let tight = dir.path().join("tight.toml");
    fs::write(&tight, TIGHT_PATH).unwrap();
    let o = ismtrack(&["validate-path", tight.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = ismtrack(&["validate-path", tight.to_str().unwrap(), "--r-lower", "0.9"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = ismtrack(&["validate-path", "no-such-file.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
