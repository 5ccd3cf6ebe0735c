use std::path::Path;
use std::process::{Command, Output};

fn dgmvp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgmvp"))
        .args(args)
        .env("DGMVP_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn fixture() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/prices.csv").to_string()
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.user.json");
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn enumerate_counts_and_lists() {
    let o = dgmvp(&["enumerate", "--n", "4", "--l", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("feasible 120"));
    assert!(text.contains("unconstrained 4096"));

    let o = dgmvp(&["enumerate", "--n", "2", "--l", "2", "--list"]);
    let lines: Vec<String> = stdout(&o).lines().skip(2).map(String::from).collect();
    // Text form lists qubit 0 first; lots are per asset.
    assert_eq!(lines, ["0011 0,3", "1001 1,2", "0110 2,1", "1100 3,0"]);
}

#[test]
fn enumerate_rejects_bad_sizes() {
    let o = dgmvp(&["enumerate", "--n", "0", "--l", "2"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn verify_identities_passes() {
    let o = dgmvp(&["verify-identities", "--angles", "4"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn unknown_preset_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = dgmvp(&["run", "no-such-preset", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn run_replay_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"n": [2], "l": [2], "p": [1, 2], "seeds": 2,
            "instances": {"source": "synthetic", "count": 2, "factors": 2},
            "drivers": ["unfrozen"], "budget": {"max_estimations": 30}}"#,
    );
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();
    let o = dgmvp(&["run", "layerwise-comparison", "--config", &cfg, "--seed", "3", "--out", out_s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = out.join("layerwise-comparison.csv");
    assert!(csv.exists() && out.join("summary.json").exists());

    let again = dir.path().join("again");
    dgmvp(&["run", "layerwise-comparison", "--config", &cfg, "--seed", "3", "--out", again.to_str().unwrap()]);
    assert_eq!(
        std::fs::read(&csv).unwrap(),
        std::fs::read(again.join("layerwise-comparison.csv")).unwrap()
    );

    let o = dgmvp(&["replay", "--dir", out_s, "--row", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).trim_end().ends_with("identical"));
    assert!(!dgmvp(&["replay", "--dir", out_s, "--row", "999"]).status.success());

    let o = dgmvp(&["plot-data", "--in", csv.to_str().unwrap(), "--figure", "fig7"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("p,method,alpha_mean_mean,alpha_min_median,p80"));
    assert_eq!(text.lines().count(), 3);
    assert!(!dgmvp(&["plot-data", "--in", csv.to_str().unwrap(), "--figure", "fig99"]).status.success());
}

#[test]
fn fit_reads_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("fig10.csv");
    let mut text = String::from("n,l,b_nl,initial,runs,mean_p_gm,mean_inv_p_gm\n");
    for (n, b) in [(2, 4.0f64), (3, 10.0), (4, 20.0), (5, 35.0)] {
        let y = 1.5 * b.powf(0.8);
        text += &format!("{n},3,{b},maxbias,20,{},{y}\n", 1.0 / y);
    }
    std::fs::write(&table, text).unwrap();
    let o = dgmvp(&["fit", "--in", table.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["maxbias"]["b"].as_f64().unwrap() - 0.8).abs() < 1e-9);
    assert_eq!(v["maxbias"]["points"], 4);

    let o = dgmvp(&["fit", "--in", table.to_str().unwrap(), "--fix-n", "2"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["maxbias"]["error"].is_string());
}

#[test]
fn covariance_of_fixture() {
    let o = dgmvp(&["covariance", "--prices", &fixture(), "--tickers", "ALFA,BRVO"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.to_string().contains("ALFA"));
    let o = dgmvp(&["covariance", "--prices", &fixture(), "--tickers", "ALFA,ZZZZ"]);
    assert!(!o.status.success());
}
