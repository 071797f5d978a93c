use std::path::Path;
use std::process::{Command, Output};

use farezone_cli::config::{ScenarioConfig, TABLE2};
use farezone_cli::ridership::load_ridership;
use farezone_cli::CliError;
use proptest::prelude::*;
use serde_json::Value;

fn farezone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_farezone"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|row| row.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn bundled_config_carries_baseline_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "base.toml", TABLE2);
    let s = ScenarioConfig::load(Path::new(&path)).unwrap().settings();
    let c = &s.corridor;
    assert_eq!(c.cbd_density, 1500.0);
    assert_eq!(c.corridor_length, 50.0);
    assert_eq!(c.logit_scale, 0.5);
    assert_eq!(c.cost_elasticity, 1.0 / 70.0);
    assert_eq!(c.fare, 5.0);
    assert_eq!(c.admin_exponent, 2.0);
    assert_eq!((s.activation_cost, s.deactivation_cost), (5000.0, 5000.0));
    assert_eq!(s.gbm.discount, 0.02);
}

#[test]
fn invalid_configs_name_the_field() {
    let err = ScenarioConfig::parse("[corridor]\nA = -50\nv_a = 30\nv_b = 25\n").unwrap_err();
    let CliError::Validation(p) = err else {
        panic!()
    };
    assert!(p.iter().any(|m| m.starts_with("corridor.A")), "{p:?}");
    let err = ScenarioConfig::parse("[corridor]\nv_a = 30\n").unwrap_err();
    assert!(err.to_string().contains("corridor.v_b: missing"));
    assert!(err.to_string().contains("set it explicitly"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trip_is_lossless(
        q in 1.0..1e4f64,
        e_c in 1e-3..0.1f64,
        v_a in 5.0..80.0f64,
        v_b in 5.0..80.0f64,
        eta in -0.01..0.015f64,
        sigma in 0.0..0.5f64,
        seed in any::<u32>(),
        mode in prop_oneof![Just("each"), Just("mean")],
    ) {
        let text = format!(
            "[corridor]\nQ_CBD = {q:?}\ne_c = {e_c:?}\nv_a = {v_a:?}\nv_b = {v_b:?}\n\
             [dynamics]\neta = {eta:?}\nsigma = {{ value = {sigma:?}, unit = \"1/month\", source = \"assumed\" }}\n\
             [simulation]\nseed = {seed}\npath_mode = \"{mode}\"\n"
        );
        let first = ScenarioConfig::parse(&text).unwrap();
        let again = ScenarioConfig::parse(&first.to_toml_string()).unwrap();
        prop_assert_eq!(first.settings(), again.settings());
        prop_assert_eq!(first.assumed(), again.assumed());
        prop_assert_eq!(first.settings().corridor.cbd_density, q);
    }
}

#[test]
fn ridership_files_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("month,boardings\n");
    for i in 0..32 {
        text.push_str(&format!(
            "{}-{:02},{}\n",
            2022 + i / 12,
            i % 12 + 1,
            5000 + 10 * i
        ));
    }
    let ok = write(dir.path(), "ok.csv", &text);
    assert_eq!(load_ridership(Path::new(&ok)).unwrap().len(), 32);
    let dup = write(
        dir.path(),
        "dup.csv",
        "month,boardings\n2024-01,1\n2024-01,2\n",
    );
    assert!(load_ridership(Path::new(&dup)).is_err());
    let order = write(
        dir.path(),
        "order.csv",
        "month,boardings\n2024-03,1\n2024-02,2\n",
    );
    assert!(load_ridership(Path::new(&order)).is_err());
}

#[test]
fn static_opt_surface_peaks_at_reported_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "base.toml", TABLE2);
    let out = dir.path().join("out");
    let run = farezone(&[
        "--quiet",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "static-opt",
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let s = summary(&out);
    let (header, rows) = csv_rows(&out.join("welfare_surface.csv"));
    assert_eq!(header, ["stage", "zone_length", "frequency", "welfare"]);
    for stage in ["fare_based", "fare_free"] {
        let best = rows
            .iter()
            .filter(|r| r[0] == stage)
            .max_by(|a, b| {
                a[3].parse::<f64>()
                    .unwrap()
                    .total_cmp(&b[3].parse().unwrap())
            })
            .unwrap();
        let o = &s[format!("optimum_{stage}")];
        assert_eq!(
            best[1].parse::<f64>().unwrap(),
            o["zone_length"].as_f64().unwrap()
        );
        assert_eq!(
            best[2].parse::<f64>().unwrap(),
            o["frequency"].as_f64().unwrap()
        );
        assert_eq!(
            best[3].parse::<f64>().unwrap(),
            o["welfare"].as_f64().unwrap()
        );
    }
    let hash = {
        use sha2::Digest;
        format!("{:x}", sha2::Sha256::digest(TABLE2.as_bytes()))
    };
    assert_eq!(s["config_sha256"], hash.as_str());
    assert_eq!(s["seed"], 2024);
    assert_eq!(s["assumed"]["corridor.v_a"], 30.0);
    assert!(s["assumed"].get("corridor.A").is_none());
    for f in ["mode_split.csv", "surplus_profile.csv"] {
        assert!(out.join(f).exists());
    }
}

#[test]
fn stage_flag_limits_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = farezone(&[
        "--quiet",
        "--out",
        dir.path().to_str().unwrap(),
        "static-opt",
        "--stage",
        "0",
    ]);
    assert!(run.status.success());
    let s = summary(dir.path());
    assert!(s.get("optimum_fare_based").is_some() && s.get("optimum_fare_free").is_none());
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let bad = write(
        dir.path(),
        "bad.toml",
        "[corridor]\nA = -1\nv_a = 30\nv_b = 25\n",
    );
    let run = farezone(&["--config", &bad, "--out", out, "static-opt"]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("corridor.A"));
    let missing = dir.path().join("nope.toml");
    assert_eq!(
        farezone(&[
            "--config",
            missing.to_str().unwrap(),
            "--out",
            out,
            "static-opt"
        ])
        .status
        .code(),
        Some(1)
    );
    // An exit cost above the perpetual loss leaves no exit threshold.
    let costly = write(
        dir.path(),
        "costly.toml",
        &TABLE2.replace("K = { value = 5000,", "K = { value = 5e7,"),
    );
    let run = farezone(&[
        "--config",
        &costly,
        "--out",
        out,
        "thresholds",
        "--no-dp-check",
    ]);
    assert_eq!(
        run.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
}

#[test]
fn calibrate_recovers_a_clean_trend() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("month,boardings\n");
    for t in 0..36 {
        let wiggle = if t % 2 == 0 { 1.01 } else { 0.99 };
        text.push_str(&format!(
            "{}-{:02},{}\n",
            2021 + t / 12,
            t % 12 + 1,
            1000.0 * (0.01 * t as f64).exp() * wiggle
        ));
    }
    let file = write(dir.path(), "ridership.csv", &text);
    let run = farezone(&[
        "--quiet",
        "--out",
        dir.path().to_str().unwrap(),
        "calibrate",
        "--ridership",
        &file,
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let c = &summary(dir.path())["calibration"];
    let (lo, hi) = (
        c["eta_ci95"][0].as_f64().unwrap(),
        c["eta_ci95"][1].as_f64().unwrap(),
    );
    assert!(lo < 0.01 && 0.01 < hi);
    assert_eq!(c["returns"], 35);
    let bad = write(
        dir.path(),
        "gap.csv",
        "month,boardings\n2024-01,1\n2024-03,2\n",
    );
    assert_eq!(
        farezone(&[
            "--out",
            dir.path().to_str().unwrap(),
            "calibrate",
            "--ridership",
            &bad
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn simulate_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = farezone(&[
        "--quiet", "--seed", "5", "--out", out, "simulate", "--months", "12", "--paths", "3",
    ]);
    assert!(run.status.success());
    let (header, rows) = csv_rows(&dir.path().join("paths.csv"));
    assert_eq!(
        header,
        ["month", "calendar", "expected", "mean", "path_0", "path_1", "path_2"]
    );
    assert_eq!(rows.len(), 13);
    assert_eq!(rows[4][1], "2025-01");
    assert_eq!(summary(dir.path())["seed"], 5);
}

#[test]
fn thresholds_report_both_regimes_and_dp_check() {
    let dir = tempfile::tempdir().unwrap();
    let run = farezone(&[
        "--quiet",
        "--out",
        dir.path().to_str().unwrap(),
        "thresholds",
        "--regime",
        "welfare",
    ]);
    assert!(run.status.success());
    let w = &summary(dir.path())["regimes"]["welfare"];
    let (upper, lower, single) = (
        w["upper"].as_f64().unwrap(),
        w["lower"].as_f64().unwrap(),
        w["single_threshold"].as_f64().unwrap(),
    );
    assert!(lower < single && single < upper);
    assert!(w["dp"]["relative_gap_upper"].as_f64().unwrap() < 0.05);

    let run = farezone(&[
        "--quiet",
        "--out",
        dir.path().to_str().unwrap(),
        "thresholds",
        "--no-switching-cost",
        "--no-dp-check",
    ]);
    assert!(run.status.success());
    let s = summary(dir.path());
    for regime in ["welfare", "equity"] {
        let r = &s["regimes"][regime];
        assert_eq!(r["upper"], r["single_threshold"]);
        assert_eq!(r["lower"], r["single_threshold"]);
        assert!(r.get("dp").is_none());
    }
}

#[test]
fn equity_outputs_follow_requested_fares_and_weights() {
    let dir = tempfile::tempdir().unwrap();
    let run = farezone(&[
        "--quiet",
        "--out",
        dir.path().to_str().unwrap(),
        "equity",
        "--fares",
        "0,5",
        "--mu",
        "0,1",
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let (_, gini_rows) = csv_rows(&dir.path().join("gini_vs_zone.csv"));
    assert_eq!(gini_rows.len(), 2 * 51);
    let (_, lorenz) = csv_rows(&dir.path().join("lorenz.csv"));
    for policy in ["fare_based", "optimized_zone", "full_corridor"] {
        let last = lorenz.iter().rfind(|r| r[0] == policy).unwrap();
        assert_eq!((last[1].as_str(), last[2].as_str()), ("1", "1"));
    }
    let s = summary(dir.path());
    let g = &s["gini"];
    assert!(g["full_corridor"].as_f64() < g["fare_based"].as_f64());
    assert_eq!(s["benefit_optimum"][1]["zone_length"], 50.0);
    let bad = farezone(&[
        "--out",
        dir.path().to_str().unwrap(),
        "equity",
        "--mu",
        "1.5",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn policy_eval_reports_every_policy() {
    let dir = tempfile::tempdir().unwrap();
    let run = farezone(&[
        "--quiet",
        "--out",
        dir.path().to_str().unwrap(),
        "policy-eval",
        "--regime",
        "equity",
        "--paths",
        "10",
    ]);
    assert!(run.status.success());
    let (_, ranking) = csv_rows(&dir.path().join("policy_ranking.csv"));
    assert_eq!(ranking.len(), 5);
    let payoffs: Vec<f64> = ranking.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(payoffs.windows(2).all(|w| w[0] >= w[1]));
    let (_, periods) = csv_rows(&dir.path().join("periods.csv"));
    for policy in ranking.iter().map(|r| &r[2]) {
        for path in 0..10 {
            let months: usize = periods
                .iter()
                .filter(|r| &r[1] == policy && r[2] == path.to_string())
                .map(|r| r[8].parse::<usize>().unwrap())
                .sum();
            assert_eq!(months, 42);
        }
    }
    let (_, table3) = csv_rows(&dir.path().join("table3.csv"));
    assert_eq!(table3.len(), 1);
    let months: usize =
        table3[0][7].parse::<usize>().unwrap() + table3[0][9].parse::<usize>().unwrap();
    assert_eq!(months, 42);
}
