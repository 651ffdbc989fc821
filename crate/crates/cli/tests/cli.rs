use std::fs;
use std::process::Command;

use bipoisson_cli::main_with_args;
use serde_json::Value;

struct Run {
    code: u8,
    out: String,
    err: String,
}

fn run(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("bipoisson").chain(args.iter().copied());
    let code = main_with_args(argv, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn json(args: &[&str]) -> Value {
    let r = run(args);
    assert_eq!(r.code, 0, "{}", r.err);
    serde_json::from_str(&r.out).unwrap()
}

fn close(a: &Value, b: f64) -> bool {
    (a.as_f64().unwrap() - b).abs() < 1e-14
}

#[test]
fn kernel_from_zero_is_negative_binomial() {
    let v = json(&[
        "kernel", "--theta", "1", "--s", "0", "--t", "0.5", "--z", "0",
    ]);
    assert_eq!(v["case"], "birth");
    assert_eq!(v["law"]["tag"], "NegativeBinomial");
    assert!(close(&v["law"]["r"], 1.0));
    assert!(close(&v["law"]["p"], 0.5));
}

#[test]
fn kernel_entrance_is_poisson() {
    let v = json(&["kernel", "--s", "1", "--t", "2", "--z", "3.0"]);
    assert_eq!(v["law"]["tag"], "Poisson");
    assert!(close(&v["law"]["lambda"], 3.0));
}

#[test]
fn kernel_death_is_binomial() {
    let v = json(&["kernel", "--s", "2", "--t", "3", "--z", "4"]);
    assert_eq!(v["law"]["tag"], "Binomial");
    assert_eq!(v["law"]["n"], 4);
    assert!(close(&v["law"]["p"], 0.5));
}

#[test]
fn kernel_mass_table_is_geometric() {
    let v = json(&[
        "kernel",
        "--s",
        "0",
        "--t",
        "0.5",
        "--z",
        "0",
        "--mass-max",
        "3",
    ]);
    let mass = v["mass"].as_array().unwrap();
    assert_eq!(mass.len(), 4);
    for (k, row) in mass.iter().enumerate() {
        assert!(close(&row["log_mass"], -((k + 1) as f64) * 2f64.ln()));
    }
}

#[test]
fn kernel_bridge_prints_orientation() {
    let v = json(&[
        "kernel", "--s", "0.5", "--t", "2", "--u", "3", "--z", "2", "--z-u", "1",
    ]);
    assert!(v.get("orientation").is_some());
    assert!(v["u"].as_f64() == Some(3.0));
}

#[test]
fn fractional_count_off_one_is_a_usage_error() {
    let r = run(&["kernel", "--s", "0.5", "--t", "2", "--z", "1.5"]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("non-negative integer"));
}

#[test]
fn malformed_flags_are_usage_errors() {
    assert_eq!(run(&["kernel", "--s", "x"]).code, 2);
    assert_eq!(run(&["verify", "--suite", "nope"]).code, 2);
    assert_eq!(run(&["simulate", "--theta", "-1"]).code, 2);
    assert_eq!(run(&["simulate", "--eta", "2"]).code, 2);
    assert_eq!(run(&["frobnicate"]).code, 2);
    assert_eq!(run(&["--help"]).code, 0);
}

#[test]
fn mgf_of_one_time_matches_the_closed_form() {
    // At theta = 1, X_1 = Z_1 - 1 with Z_1 ~ Exp(1): E e^{u X_1} = e^{-u}/(1-u).
    let v = json(&["mgf", "--times", "1", "--args", "0.25"]);
    let expected = (-0.25f64).exp() / 0.75;
    assert!((v["mgf"].as_f64().unwrap() - expected).abs() < 1e-12);
}

#[test]
fn eta_theta_pair_is_reported_in_canonical_form() {
    let v = json(&[
        "kernel", "--eta", "2", "--theta", "0.5", "--s", "0", "--t", "0.5", "--z", "0",
    ]);
    assert!(close(&v["theta"], 1.0));
    assert!(close(&v["reduction"]["time_scale"], 0.25));
    assert!(close(&v["reduction"]["space_scale"], 2.0));
}

fn parse_events(csv: &str) -> Vec<(String, f64, f64)> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("phase,time,level"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].to_owned(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn simulate_levels_rise_then_fall() {
    for construction in ["forward", "representation"] {
        let r = run(&[
            "simulate",
            "--theta",
            "0.7",
            "--seed",
            "5",
            "--window",
            "0.01",
            "--k-max",
            "5000",
            "--construction",
            construction,
        ]);
        assert_eq!(r.code, 0, "{}", r.err);
        let events = parse_events(&r.out);
        let one = events.iter().position(|e| e.0 == "one").unwrap();
        let (births, deaths) = (&events[..one], &events[one + 1..]);
        assert!(births.iter().all(|e| e.0 == "birth" && e.1 < 1.0));
        assert!(deaths
            .iter()
            .all(|e| e.0 == "death" && e.1 > 1.0 && e.1 <= 3.0));
        assert!(births
            .windows(2)
            .all(|w| w[0].1 < w[1].1 && w[1].2 == w[0].2 + 1.0));
        assert!(deaths
            .windows(2)
            .all(|w| w[0].1 < w[1].1 && w[1].2 == w[0].2 - 1.0));
        assert!(events[one].2 > 0.0);
    }
}

#[test]
fn simulate_files_are_deterministic_and_carry_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.csv");
    let grid = dir.path().join("grid.csv");
    let args = [
        "simulate",
        "--seed",
        "11",
        "--window",
        "0.001",
        "--k-max",
        "20000",
        "--grid-points",
        "61",
        "--events",
        events.to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
    ];
    let read = || {
        [&events, &grid]
            .iter()
            .flat_map(|p| {
                [
                    fs::read(p).unwrap(),
                    fs::read(format!("{}.meta.json", p.display())).unwrap(),
                ]
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(&args).code, 0);
    let first = read();
    assert_eq!(run(&args).code, 0);
    assert_eq!(first, read());

    let meta: Value = serde_json::from_slice(&first[1]).unwrap();
    assert_eq!(meta["command"], "simulate");
    assert!(close(&meta["theta"], 1.0));
    assert_eq!(meta["config"]["seed"], 11);
    assert!(close(&meta["config"]["window"], 0.001));
    assert_eq!(meta["config"]["k_max"], 20000);
    assert!(meta["trajectory"]["birth_truncated"].is_boolean());

    // Below t = 1 every grid point is theta (1 - t) Z_t - t / theta with Z_t
    // the level of the last birth at or before t.
    let ev = parse_events(&String::from_utf8(first[0].clone()).unwrap());
    let text = String::from_utf8(first[2].clone()).unwrap();
    let mut checked = 0;
    for line in text.lines().skip(1) {
        let (t, x) = line.split_once(',').unwrap();
        let (t, x): (f64, f64) = (t.parse().unwrap(), x.parse().unwrap());
        if t < 1.0 {
            let level = ev.iter().filter(|e| e.0 == "birth" && e.1 <= t).count() as f64;
            assert!((x - ((1.0 - t) * level - t)).abs() < 1e-12, "t = {t}");
            checked += 1;
        }
    }
    assert_eq!(checked, 20);
}

#[test]
fn config_file_is_layered_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"command": "kernel", "theta": 2.0, "s": 0, "t": 0.5, "z": 0}"#,
    )
    .unwrap();
    let path = cfg.to_str().unwrap();
    let v = json(&["kernel", "--config", path]);
    assert!(close(&v["theta"], 2.0));
    assert!(close(&v["law"]["r"], 0.25));
    let v = json(&["kernel", "--config", path, "--theta", "1"]);
    assert!(close(&v["law"]["r"], 1.0));
    assert_eq!(run(&["simulate", "--config", path]).code, 2);
    fs::write(&cfg, r#"{"theta": 1.0, "tehta": 2.0}"#).unwrap();
    assert_eq!(run(&["kernel", "--config", path]).code, 2);
}

#[test]
fn missing_config_file_is_an_io_error() {
    let r = run(&["kernel", "--config", "/nonexistent/run.json"]);
    assert_eq!(r.code, 1);
}

#[test]
fn verify_writes_sorted_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let r = run(&[
        "verify",
        "--suite",
        "ck",
        "--theta",
        "1",
        "--seed",
        "7",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let reports: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    let reports = reports.as_array().unwrap();
    let ids: Vec<&str> = reports
        .iter()
        .map(|r| r["claim_id"].as_str().unwrap())
        .collect();
    let mut sorted = ids.clone();
    sorted.sort_unstable();
    assert_eq!(ids, sorted);
    for r in reports {
        for field in [
            "claim_id",
            "method",
            "computed",
            "reference",
            "tolerance",
            "pass",
            "diagnostics",
            "seed",
        ] {
            assert!(r.get(field).is_some(), "{field}");
        }
        assert_eq!(r["pass"], true);
    }
    let meta: Value =
        serde_json::from_slice(&fs::read(dir.path().join("report.json.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["claims"]["total"], reports.len());
    assert_eq!(meta["claims"]["passed"], reports.len());
}

#[test]
fn failing_claim_exits_one() {
    // A zero tolerance that rounding alone defeats.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.json");
    fs::write(
        &cfg,
        r#"{"suite": "ck", "tolerances": {"tail": 1e-16, "check": 0.0}}"#,
    )
    .unwrap();
    let r = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.code, 1, "{}", r.err);
    assert!(r.err.contains("FAIL"));
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_bipoisson");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(
        status(&["kernel", "--s", "2", "--t", "3", "--z", "4"]),
        Some(0)
    );
    assert_eq!(
        status(&["kernel", "--s", "2", "--t", "3", "--z", "4.5"]),
        Some(2)
    );
    assert_eq!(status(&["verify", "--suite", "limits"]), Some(0));
}
