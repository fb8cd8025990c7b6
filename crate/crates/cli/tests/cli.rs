use std::path::Path;
use std::process::{Command, Output};

fn quadwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadwalk")).args(args).output().expect("binary runs")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn simulate_csv_and_norm() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim.csv");
    let o = quadwalk(&["simulate", "--k", "2", "--coin", "hadamard", "--steps", "100", "--mode", "unitarized", "--format", "csv", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,copy,x,y,probability"));
    let total: f64 = text
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("100,"))
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-10, "{total}");
}

#[test]
fn simulate_json_report() {
    let o = quadwalk(&["simulate", "--steps", "6", "--every", "3", "--model", "plane"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let times: Vec<u64> = v["snapshots"].as_array().unwrap().iter().map(|s| s["time"].as_u64().unwrap()).collect();
    assert_eq!(times, vec![0, 3, 6]);
    assert!(v["max_norm_deviation"].as_f64().unwrap() < 1e-10);
}

#[test]
fn reduce_check_reports_lemma2() {
    let o = quadwalk(&["reduce-check", "--k", "3", "--steps", "20", "--mode", "literal"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let summary: Vec<&str> = v["summary"].as_array().unwrap().iter().map(|s| s.as_str().unwrap()).collect();
    assert!(summary.contains(&"lemma2 max deviation < 1e-10"));
}

#[test]
fn genfunc_check_reports_exact_transfer() {
    let o = quadwalk(&["genfunc-check", "--order", "32", "--tmax", "14"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["summary"][0], "transfer vs simulator exact");
    assert!(!v["report"]["closed_form_b"].as_array().unwrap().is_empty());
}

#[test]
fn exit_codes() {
    assert_eq!(quadwalk(&["simulate", "--k", "0"]).status.code(), Some(2));
    assert_eq!(quadwalk(&["simulate", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(quadwalk(&["simulate", "--coin", "explicit"]).status.code(), Some(2));
    assert_eq!(quadwalk(&["simulate", "--psi", "1", "--psi", "1"]).status.code(), Some(2));
    let guard = quadwalk(&["tree-check", "--k", "3", "--steps", "30"]);
    assert_eq!(guard.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&guard.stderr).contains("limit is"));
    // the tree walk does not reproduce the joined walk; see the README
    let tree = quadwalk(&["tree-check", "--k", "2", "--steps", "3"]);
    assert_eq!(tree.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&tree.stdout).unwrap();
    assert_eq!(v["matched"], false);
}

#[test]
fn explicit_coin_from_flags() {
    let s = "0.7071067811865476";
    let o = quadwalk(&["simulate", "--coin", "explicit", "--a", s, "--b", s, "--c", s, "--d", &format!("-{s}"), "--steps", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let h = quadwalk(&["simulate", "--steps", "4"]);
    assert_eq!(o.stdout, h.stdout);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "k = 3\nsteps = 7\npsi = [[0.6, 0.0], [0.0, 0.8], [0.0, 0.0]]\ntheta_choice = \"zero\"\n").unwrap();
    let o = quadwalk(&["simulate", "--config", cfg.to_str().unwrap(), "--steps", "9", "--dump-config"]);
    assert_eq!(o.status.code(), Some(0));
    let dumped = String::from_utf8(o.stdout).unwrap();
    assert!(dumped.contains("k = 3\n"));
    assert!(dumped.contains("steps = 9\n"));
    assert!(dumped.contains("theta_choice = \"zero\"\n"));

    // the dump is itself a config file that resolves to the same dump
    let again = dir.path().join("again.toml");
    std::fs::write(&again, &dumped).unwrap();
    let o2 = quadwalk(&["simulate", "--config", again.to_str().unwrap(), "--dump-config"]);
    assert_eq!(String::from_utf8(o2.stdout).unwrap(), dumped);

    std::fs::write(&cfg, "nonsense = 1\n").unwrap();
    assert_eq!(quadwalk(&["simulate", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn theorem_reports_carry_flags() {
    let o = quadwalk(&["theorem1", "--window", "4:12", "--theta-choice", "zero"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let f = &v["findings"][0];
    for key in ["quantity", "printed_formula_value", "simulated_value", "assumption_flags", "tolerance_class"] {
        assert!(f.get(key).is_some(), "{key}");
    }
    assert!(f["assumption_flags"].as_array().unwrap().iter().any(|s| s == "theta:=0"));

    let o = quadwalk(&["theorem2", "--time", "20", "--grid", "8", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("x,f_h,c_d,rho_w"));
    assert_eq!(text.lines().count(), 9);
}
