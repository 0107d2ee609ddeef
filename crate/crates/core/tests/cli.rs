use std::process::Command;

fn watsonlab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_watsonlab"));
    c.env_remove("WATSONLAB_DEFAULTS");
    c
}

#[test]
fn bruhat_suite_passes() {
    let out = watsonlab().args(["run", "bruhat"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[PASS] bruhat"));
    assert!(text.contains("max_roundtrip_err"));
}

#[test]
fn unknown_suite_is_a_config_error() {
    let out = watsonlab().args(["run", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn too_few_nodes_is_a_config_error() {
    let out = watsonlab().args(["run", "bruhat", "--nodes", "8"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = watsonlab().args(["run", "bruhat", "--s", "1.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_power_of_two_warns() {
    let out = watsonlab().args(["run", "bruhat", "--nodes", "1000"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stderr).unwrap().contains("power of two"));
}

#[test]
fn failing_metric_gives_exit_one() {
    let out = watsonlab().args(["run", "bruhat", "--tol", "bruhat=0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn json_report_schema() {
    let dir = std::env::temp_dir().join(format!("watsonlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("r.json");
    let out = watsonlab()
        .args(["run", "phi", "--nodes", "1024", "--json"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.code() == Some(0) || out.status.code() == Some(1));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["version"], "1");
    assert_eq!(v["config"]["n_nodes"], 1024);
    let r = &v["reports"][0];
    assert_eq!(r["suite"], "phi");
    assert!(r.get("wall_time").is_none());
    assert!(r["paper_anchor"].as_str().unwrap().len() > 5);
    for (_, m) in r["metrics"].as_object().unwrap() {
        assert!(m["tolerance"].is_number());
        assert!(m["comparison"] == "<=" || m["comparison"] == ">=");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn defaults_file_is_overridden_by_flags() {
    let dir = std::env::temp_dir().join(format!("watsonlab-env-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("defaults.conf");
    std::fs::write(&cfg, "nodes = 8\n").unwrap();
    let out = watsonlab().env("WATSONLAB_DEFAULTS", &cfg).args(["run", "bruhat"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = watsonlab()
        .env("WATSONLAB_DEFAULTS", &cfg)
        .args(["run", "bruhat", "--nodes", "64"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn table_dump() {
    let out = watsonlab().args(["table", "--s", "0.5", "--xmax", "2", "--points", "5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(text.lines().next(), Some("x,phi,psi_over_i"));
    assert_eq!(rows.len(), 5);
    // center row: φ_{1/2}(0) and ψ(0) = 0
    assert!((rows[2][1] - 5.2441151085842396).abs() < 1e-8);
    assert_eq!(rows[2][2], 0.0);
    assert_eq!(rows[0][1], rows[4][1]);
    assert_eq!(rows[0][2], -rows[4][2]);
}

#[test]
fn csv_traces() {
    let dir = std::env::temp_dir().join(format!("watsonlab-csv-{}", std::process::id()));
    let out = watsonlab()
        .args(["run", "bruhat", "--nodes", "512", "--csv-dir"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let phi = std::fs::read_to_string(dir.join("phi.csv")).unwrap();
    assert_eq!(phi.lines().next(), Some("x,re,im"));
    assert_eq!(phi.lines().count(), 513);
    assert!(dir.join("watson_matrix.csv").exists());
    std::fs::remove_dir_all(&dir).ok();
}
