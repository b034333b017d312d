use std::process::Command;

use qrt::cli::{run, Outcome};

fn qrt(args: &[&str]) -> Outcome {
    run(std::iter::once("qrt").chain(args.iter().copied()))
}

fn field(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {out}"))
        .to_string()
}

#[test]
fn isotropic_omega_matches_closed_form() {
    let o = qrt(&["monotone", "omega", "--state", "isotropic:0.4,2", "--theory", "ppt"]);
    assert_eq!(o.code, 0, "{o:?}");
    let v: f64 = o.stdout.split_whitespace().next().unwrap().parse().unwrap();
    assert!((v - 2.8 / 1.2).abs() < 1e-6, "{v}");
    assert!(o.stdout.contains("(optimal)"));
}

#[test]
fn pure_entangled_state_is_certified_infinite() {
    let o = qrt(&["monotone", "omega", "--state", "bell:2", "--theory", "ppt", "--optimizers"]);
    assert_eq!(o.code, 0, "{o:?}");
    assert!(o.stdout.starts_with("infinite (certified)"), "{}", o.stdout);
    assert!(o.stdout.contains("certificate_violation"));
}

#[test]
fn malformed_input_exits_with_config_code() {
    let o = qrt(&["monotone", "omega", "--state", "{\"re\": [[1,", "--theory", "ppt"]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("malformed JSON"), "{}", o.stderr);
    assert_eq!(qrt(&["monotone", "omega", "--state", "bell:2", "--theory", "nonsense"]).code, 1);
    assert_eq!(qrt(&["monotone", "omega", "--state", "coherent:3", "--theory", "ppt"]).code, 1);
    assert_eq!(qrt(&["monotone", "omega", "--theory", "ppt"]).code, 1);
    assert_eq!(qrt(&["sweep", "--figure", "2c"]).code, 1);
    assert_eq!(qrt(&["sweep", "--figure", "3a", "--p-grid", "0,0.5"]).code, 1);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_qrt");
    let ok = Command::new(bin)
        .args(["monotone", "omega", "--state", "isotropic:0.4,2", "--theory", "ppt"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("2.33333"));
    let bad = Command::new(bin).args(["monotone", "omega", "--state", "{", "--theory", "ppt"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn decisions_follow_the_monotones() {
    let o = qrt(&["decide", "--state", "mixed:4", "--target", "bell:2", "--theory", "ppt"]);
    assert_eq!(field(&o.stdout, "verdict"), "no");
    let o = qrt(&["decide", "--state", "bell:3", "--target", "schmidt:0.8,0.6", "--theory", "ppt"]);
    assert!(field(&o.stdout, "verdict").starts_with("yes"), "{}", o.stdout);
    let o = qrt(&["decide", "--state", "isotropic:0.2,2", "--target", "isotropic:0.4,2", "--theory", "ppt"]);
    assert!(field(&o.stdout, "verdict").starts_with("yes"), "{}", o.stdout);
    let o = qrt(&["decide", "--state", "isotropic:0.4,2", "--target", "isotropic:0.2,2", "--theory", "ppt"]);
    assert_eq!(field(&o.stdout, "verdict"), "no");
}

#[test]
fn sweeps_are_byte_stable() {
    let args = ["sweep", "--figure", "3a", "--p-grid", "0.1,0.3,0.6", "--threads", "2"];
    let a = qrt(&args);
    assert_eq!(a.code, 0, "{a:?}");
    assert_eq!(a.stdout, qrt(&args).stdout);
    assert!(a.stdout.starts_with("p,E,status\n"));
    let fam = ["sweep", "--family", "isotropic:{},2", "--grid", "0.2:0.6:3", "--theory", "ppt", "--stable"];
    let csv = qrt(&fam);
    assert_eq!(csv.stdout, qrt(&fam).stdout);
    assert!(csv.stdout.contains(",optimal,0\n"), "{}", csv.stdout);
    let mut json_args = fam.to_vec();
    json_args.extend(["--format", "json"]);
    let j: serde_json::Value = serde_json::from_str(&qrt(&json_args).stdout).unwrap();
    assert_eq!(j["metadata"]["wall_time_ms"], 0);
    assert_eq!(j["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn figure_rows_carry_status() {
    let o = qrt(&["sweep", "--figure", "2a", "--gamma-grid", "0.4"]);
    assert_eq!(o.code, 0);
    let row: Vec<&str> = o.stdout.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row.len(), 7);
    for x in &row[2..6] {
        assert!((x.parse::<f64>().unwrap() - 0.3).abs() < 1e-6, "{row:?}");
    }
    assert_eq!(row[6], "optimal");
}

#[test]
fn config_file_supplies_fields_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{"command": "monotone omega", "state": "isotropic:0.4,2", "theory": "ppt", "solver": {"tol_gap": 1e-9}}"#,
    )
    .unwrap();
    let cfg = path.to_str().unwrap();
    let o = qrt(&["--config", cfg]);
    assert_eq!(o.code, 0, "{o:?}");
    assert!(o.stdout.starts_with("2.33333"));
    let o = qrt(&["--config", cfg, "monotone", "omega", "--state", "isotropic:0.2,2"]);
    assert!(o.stdout.starts_with("5.66666"), "{}", o.stdout);
    std::fs::write(&path, r#"{"stat": "bell:2"}"#).unwrap();
    assert_eq!(qrt(&["--config", cfg, "monotone", "omega"]).code, 1);
}

#[test]
fn protocol_build_verify_apply() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("map.json");
    let m = map.to_str().unwrap();
    let o = qrt(&[
        "protocol", "build", "--state", "isotropic:0.3,2", "--target", "bell:2", "--theory", "ppt", "--p", "0.5", "--output", m,
    ]);
    assert_eq!(o.code, 0, "{o:?}");
    let err: f64 = field(&o.stdout, "error").parse().unwrap();
    let at = format!("@{m}");
    let v = qrt(&["protocol", "verify", "--map", &at, "--theory", "ppt"]);
    assert_eq!(v.code, 0, "{v:?}");
    assert_eq!(field(&v.stdout, "free"), "true");
    let a = qrt(&["protocol", "apply", "--map", &at, "--state", "isotropic:0.3,2"]);
    let p: f64 = field(&a.stdout, "probability").parse().unwrap();
    assert!((p - 0.5).abs() < 1e-6, "{p}");
    let t = qrt(&["tradeoff", "theta", "--state", "isotropic:0.3,2", "--theory", "ppt", "--target", "bell:2", "--p", "0.5"]);
    let e: f64 = field(&t.stdout, "error").parse().unwrap();
    assert!((e - err).abs() < 1e-9);
}

#[test]
fn bounds_and_discrimination_report() {
    let o = qrt(&["bound", "--state", "isotropic:0.4,2", "--target", "bell:2", "--theory", "ppt"]);
    assert_eq!(o.code, 0, "{o:?}");
    let e: f64 = field(&o.stdout, "error_lower_bound").parse().unwrap();
    assert!((e - 0.3).abs() < 1e-6);
    assert_eq!(field(&o.stdout, "exact"), "true");
    let d = qrt(&["discriminate", "--state", "isotropic:0.3,2", "--theory", "ppt", "--random", "10", "--seed", "1"]);
    let w: f64 = field(&d.stdout, "omega").parse().unwrap();
    let c: f64 = field(&d.stdout, "constructed_ratio").parse().unwrap();
    assert!((w - c).abs() <= 1e-3 * w);
}
