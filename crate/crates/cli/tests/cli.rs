use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_binpack-adversary"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn weight_outside_range_is_rejected() {
    let out = run(&["verify", "--t", "3", "--w", "1.6"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside"));
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_t_is_rejected() {
    assert!(!run(&["simulate", "--t", "2"]).status.success());
    assert!(!run(&["simulate", "--m", "0"]).status.success());
    assert!(!run(&["simulate", "--algorithm", "worst-fit"]).status.success());
}

#[test]
fn optimize_reports_optimum_and_sweep() {
    let out = run(&["optimize"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "optimize");
    assert!(v["r_star"].as_str().unwrap().starts_with("1.5427809064729"));
    assert!(v["w_star"].as_str().unwrap().starts_with("1.0715238669087"));
    assert_eq!(v["optimum"]["residual_w"]["form"], "0 + 0·√1387369");
    let rows = v["sweep"].as_array().unwrap();
    assert_eq!(rows.len(), 51 * 11);
    // w = 1, n' = 1: (1 − 3 + 35/6)/(8533/2352 − 5/4 + 1/7)
    let last_at_w1 = rows.iter().find(|r| r["w"]["exact"] == "1" && r["n_prime"]["exact"] == "1").unwrap();
    assert_eq!(last_at_w1["bound"]["exact"], "184/121");
}

#[test]
fn output_is_byte_stable() {
    let a = run(&["simulate", "--algorithm", "random", "--seed", "5"]);
    let b = run(&["simulate", "--algorithm", "random", "--seed", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(run(&["optimize"]).stdout, run(&["optimize"]).stdout);
}

#[test]
fn simulate_writes_report_with_eight_stopping_points() {
    let dir = std::env::temp_dir().join(format!("binpack-adversary-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = run(&["simulate", "--algorithm", "first-fit", "--t", "3", "--m", "1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    std::fs::remove_dir_all(&dir).ok();
    let r = &v["report"];
    assert_eq!(r["stopping_points"].as_array().unwrap().len(), 8);
    assert_eq!(r["n_large"], r["stats"]["nu"]["A"]);
    assert_eq!(v["passed"], true);
    assert_eq!(v["offline_packings"].as_array().unwrap().len(), 8);
}

#[test]
fn next_fit_never_beats_first_fit() {
    let ratio = |alg: &str| {
        let v = json(&run(&["simulate", "--algorithm", alg]));
        v["report"]["max_ratio"]["decimal"].as_str().unwrap().parse::<f64>().unwrap()
    };
    assert!(ratio("next-fit") >= ratio("first-fit"));
}

#[test]
fn verify_t3_passes() {
    let out = run(&["verify", "--t", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}
