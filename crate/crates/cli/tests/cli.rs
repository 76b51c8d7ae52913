//! End-to-end runs of the `firm` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use firm_cli::dataset::{self, DistSpec, ForecastCell, ObservationCell, Record};
use firm_core::firm::ScoringMatrix;
use firm_core::synthetic::SyntheticSystem;
use firm_core::{ContingencyTable, FirmSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

const RAIN_CONFIG: &str = r#"{
  "schema_version": 1,
  "thresholds": [50, 100],
  "weights": [1, 4],
  "alpha": 0.75,
  "a": 0,
  "labels": ["below 50mm", "50-100mm", "above 100mm"]
}"#;

const OCF: [[u64; 3]; 3] = [[77984, 259, 37], [199, 136, 50], [6, 15, 27]];
const OFFICIAL: [[u64; 3]; 3] = [[77658, 165, 13], [451, 171, 36], [80, 74, 65]];

fn firm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_firm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let out = firm(&full);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// One categorical record per table count, spread over 365 days.
fn table_dataset(rows: &[[u64; 3]; 3]) -> String {
    let start = chrono::NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    let mut out = String::from("location_id,date,lead_days,forecast,observation\n");
    let mut k = 0u64;
    for (i, row) in rows.iter().enumerate() {
        for (j, &n) in row.iter().enumerate() {
            for _ in 0..n {
                let date = start + chrono::Days::new(k % 365);
                writeln!(out, "loc{},{date},1,cat={i},cat={j}", k % 110).unwrap();
                k += 1;
            }
        }
    }
    out
}

fn table_csv(rows: &[[u64; 3]; 3]) -> String {
    let mut out = String::from("forecast\\observed,C0,C1,C2\n");
    for (i, r) in rows.iter().enumerate() {
        writeln!(out, "C{i},{},{},{}", r[0], r[1], r[2]).unwrap();
    }
    out
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn score_reproduces_table_mean() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "rain.json", RAIN_CONFIG);
    let data = write(&dir, "ocf.csv", &table_dataset(&OCF));
    let table_out = dir.path().join("table.csv");
    let v = ok_json(&["score", "--config", s(&cfg), "--data", s(&data), "--table-out", s(&table_out)]);

    let spec = FirmSpec::new(vec![50.0, 100.0], vec![1.0, 4.0], 0.75, 0.0).unwrap();
    let rows: Vec<Vec<u64>> = OCF.iter().map(|r| r.to_vec()).collect();
    let expected = ContingencyTable::from_rows(&rows)
        .unwrap()
        .mean_score(&ScoringMatrix::new(&spec).unwrap())
        .unwrap();
    assert_eq!(v["records"], 78713);
    assert!((f(&v["mean"]["total"]) - expected.total).abs() < 1e-15);
    assert!((f(&v["mean"]["total"]) - 7.054e-3).abs() < 1e-6);
    assert!((f(&v["mean"]["miss"]) - 6.136e-3).abs() < 1e-6);
    assert!((f(&v["miss_share"]) - 0.87).abs() < 0.005);
    assert_eq!(v["contingency_table"], serde_json::json!(rows));

    // the table written alongside feeds estimate-alpha
    let e = ok_json(&["estimate-alpha", "--table", s(&table_out)]);
    assert!((f(&e["alpha_tilde"]) - 0.75).abs() < 0.01, "{e}");
    let e2 = ok_json(&["estimate-alpha", "--config", s(&cfg), "--data", s(&data)]);
    assert_eq!(e, e2);
}

#[test]
fn score_text_report_uses_six_digits() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "rain.json", RAIN_CONFIG);
    let data = write(&dir, "ocf.csv", &table_dataset(&OCF));
    let out = firm(&["score", "--config", s(&cfg), "--data", s(&data)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("mean_score   0.00705411"), "{text}");
    assert!(text.contains("above 100mm"), "{text}");
}

#[test]
fn estimate_alpha_from_published_tables() {
    let dir = TempDir::new().unwrap();
    let ocf = write(&dir, "ocf.csv", &table_csv(&OCF));
    let off = write(&dir, "official.csv", &table_csv(&OFFICIAL));
    let a = f(&ok_json(&["estimate-alpha", "--table", s(&ocf)])["alpha_tilde"]);
    let b = f(&ok_json(&["estimate-alpha", "--table", s(&off)])["alpha_tilde"]);
    assert!((a - 0.75).abs() < 0.01, "{a}");
    assert!((b - 0.89).abs() < 0.01, "{b}");

    let even = write(&dir, "even.csv", "x,no,yes\nno,50,7\nyes,7,10\n");
    let v = ok_json(&["estimate-alpha", "--table", s(&even)]);
    assert_eq!(f(&v["alpha_hat"]), 0.5);
}

#[test]
fn single_perfect_case_scores_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "rain.json", RAIN_CONFIG);
    let data = write(
        &dir,
        "one.csv",
        "location_id,date,lead_days,forecast,observation\nx,2020-02-02,1,cat=1,72.5\n",
    );
    let v = ok_json(&["score", "--config", s(&cfg), "--data", s(&data)]);
    assert_eq!(f(&v["mean"]["total"]), 0.0);
    assert!(v["miss_share"].is_null());
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "rain.json", RAIN_CONFIG);
    let empty = write(&dir, "empty.csv", "location_id,date,lead_days,forecast,observation\n");
    let bad = write(
        &dir,
        "bad.csv",
        "location_id,date,lead_days,forecast,observation\nx,2020-01-01,1,cat=0,1\nx,2020-01-02,one,cat=0,1\n",
    );
    let huber = write(
        &dir,
        "huber.json",
        r#"{"schema_version":1,"thresholds":[50,100],"weights":[1,4],"alpha":0.75,"a":10}"#,
    );
    let cat_obs = write(
        &dir,
        "cat.csv",
        "location_id,date,lead_days,forecast,observation\nx,2020-01-01,1,12,cat=1\n",
    );
    let perfect = write(&dir, "perfect.csv", "x,C0,C1\nC0,10,0\nC1,0,5\n");
    let old = write(&dir, "old.json", r#"{"schema_version":0,"thresholds":[1],"weights":[1],"alpha":0.5}"#);

    let code = |args: &[&str]| firm(args).status.code().unwrap();
    assert_eq!(code(&["score", "--config", s(&cfg), "--data", s(&empty)]), 3);
    let out = firm(&["score", "--config", s(&cfg), "--data", s(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    assert_eq!(code(&["score", "--config", s(&huber), "--data", s(&cat_obs)]), 3);
    assert_eq!(code(&["score", "--config", s(&old), "--data", s(&bad)]), 3);
    assert_eq!(code(&["score", "--config", s(&cfg), "--data", "/nonexistent.csv"]), 3);
    assert_eq!(code(&["estimate-alpha", "--table", s(&perfect)]), 4);
    assert_eq!(code(&["score", "--config", s(&cfg)]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["estimate-alpha"]), 2);
    assert_eq!(code(&["--help"]), 0);
}

/// Gaussian forecasts from a calibrated system; `bias` shifts every predictive mean.
fn gaussian_dataset(n: usize, days: u64, bias: f64, seed: u64) -> Vec<Record> {
    let system = SyntheticSystem::standard(0.5, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = chrono::NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
    (0..n)
        .map(|k| {
            let (y1, y) = system.draw_pair(&mut rng);
            Record {
                location_id: format!("s{}", k % 7),
                date: start + chrono::Days::new(k as u64 % days),
                lead_days: 1,
                forecast: ForecastCell::Distribution(DistSpec::Normal {
                    mean: y1 + bias,
                    sd: system.sigma2(),
                }),
                observation: ObservationCell::Value(y),
            }
        })
        .collect()
}

fn save(dir: &TempDir, name: &str, records: &[Record]) -> PathBuf {
    let p = dir.path().join(name);
    dataset::write(std::fs::File::create(&p).unwrap(), records).unwrap();
    p
}

const GAUSS_CONFIG: &str = r#"{"schema_version":1,"thresholds":[0.5,1.2815515655446004],"weights":[1,2],"alpha":0.7,"a":0}"#;

#[test]
fn sweep_beta_finds_alpha_and_detects_bias() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "g.json", GAUSS_CONFIG);
    let fair = save(&dir, "fair.csv", &gaussian_dataset(40_000, 200, 0.0, 3));
    let biased = save(&dir, "biased.csv", &gaussian_dataset(40_000, 200, 0.5, 3));
    let grid = ["--betas", "0.3:0.95:0.05"];

    let v = ok_json(&[&["sweep-beta", "--config", s(&cfg), "--data", s(&fair)][..], &grid].concat());
    let best = f(&v["best_beta"]);
    assert!((best - 0.7).abs() <= 0.1, "{v}");
    let vb = ok_json(&[&["sweep-beta", "--config", s(&cfg), "--data", s(&biased)][..], &grid].concat());
    assert!(f(&vb["best_beta"]) < 0.7, "{vb}");
}

#[test]
fn sweep_beta_needs_distributions_and_ignores_beta_for_point_masses() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "rain.json", RAIN_CONFIG);
    let cats = write(
        &dir,
        "c.csv",
        "location_id,date,lead_days,forecast,observation\nx,2020-01-01,1,cat=0,3\n",
    );
    let out = firm(&["sweep-beta", "--config", s(&cfg), "--data", s(&cats)]);
    assert_eq!(out.status.code(), Some(3));

    let points = write(
        &dir,
        "p.csv",
        "location_id,date,lead_days,forecast,observation\n\
         x,2020-01-01,1,dist=empirical;values=60,40\n\
         x,2020-01-02,1,dist=empirical;values=120,55\n\
         x,2020-01-03,1,dist=empirical;values=10,10\n",
    );
    let v = ok_json(&["sweep-beta", "--config", s(&cfg), "--data", s(&points)]);
    let scores: Vec<f64> = v["points"].as_array().unwrap().iter().map(|p| f(&p["total"])).collect();
    assert_eq!(scores.len(), 19);
    assert!(scores.iter().all(|x| *x == scores[0]), "{scores:?}");
    assert_eq!(f(&v["best_beta"]), 0.05);
}

#[test]
fn sweep_alpha_is_linear_in_weights() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "g.json", GAUSS_CONFIG);
    let cfg2 = write(
        &dir,
        "g2.json",
        &GAUSS_CONFIG.replace("\"weights\":[1,2]", "\"weights\":[2,4]"),
    );
    let data = save(&dir, "fair.csv", &gaussian_dataset(5_000, 50, 0.0, 9));
    let a = ok_json(&["sweep-alpha", "--config", s(&cfg), "--data", s(&data)]);
    let b = ok_json(&["sweep-alpha", "--config", s(&cfg2), "--data", s(&data)]);
    for (p, q) in a["points"].as_array().unwrap().iter().zip(b["points"].as_array().unwrap()) {
        let (x, y) = (f(&p["total"]) * 2.0, f(&q["total"]));
        assert!((x - y).abs() <= 1e-12 * y.abs(), "{x} {y}");
    }
    // small alpha with a rare top event gives a small score
    let pts = a["points"].as_array().unwrap();
    assert!(f(&pts[0]["total"]) < f(&pts[9]["total"]));
}

#[test]
fn compare_identical_inputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "g.json", GAUSS_CONFIG);
    let data = save(&dir, "a.csv", &gaussian_dataset(3_000, 100, 0.0, 5));
    let v = ok_json(&["compare", "--config", s(&cfg), "--data", s(&data), "--data-b", s(&data), "--replicates", "500"]);
    assert_eq!(f(&v["mean_daily_difference"]), 0.0);
    // all differences are zero, and the DM variance estimate is zero so that
    // method is reported as a warning
    let ivs = v["intervals"].as_array().unwrap();
    assert_eq!(ivs.len(), 2);
    let warnings = v["warnings"].as_array().unwrap();
    assert_eq!(warnings.len(), 2, "{warnings:?}");
    assert!(warnings.iter().any(|w| w.as_str().unwrap().starts_with("dm-hln")));
    assert_eq!(f(&ivs[0]["lower"]), 0.0);
    assert_eq!(f(&ivs[0]["upper"]), 0.0);
    let boot = &ivs[1];
    assert_eq!(f(&boot["lower"]), 0.0);
    assert_eq!(f(&boot["upper"]), 0.0);
}

#[test]
fn compare_detects_better_system_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "g.json", GAUSS_CONFIG);
    let a = save(&dir, "a.csv", &gaussian_dataset(20_000, 200, 0.0, 11));
    let b = save(&dir, "b.csv", &gaussian_dataset(20_000, 200, 0.8, 11));
    let args = [
        "compare", "--config", s(&cfg), "--data", s(&a), "--data-b", s(&b),
        "--one-sided", "less", "--replicates", "2000", "--seed", "7", "--format", "json",
    ];
    let first = firm(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let v: Value = serde_json::from_slice(&first.stdout).unwrap();
    for r in v["one_sided"].as_array().unwrap() {
        assert_eq!(r["reject"], true, "{r}");
    }
    assert!(f(&v["mean_daily_difference"]) < 0.0);
    let second = firm(&args);
    assert_eq!(first.stdout, second.stdout);

    // the file output is deterministic too
    let out1 = dir.path().join("r1.csv");
    let out2 = dir.path().join("r2.csv");
    for o in [&out1, &out2] {
        let mut full = args[..args.len() - 2].to_vec();
        full.extend(["--out", s(o)]);
        assert!(firm(&full).status.success());
    }
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
    let csv = std::fs::read_to_string(&out1).unwrap();
    assert!(csv.starts_with("method,level,kind,estimate,lower,upper,statistic,reject\n"), "{csv}");
}

#[test]
fn compare_rejects_mismatched_dates() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "g.json", GAUSS_CONFIG);
    let a = save(&dir, "a.csv", &gaussian_dataset(300, 30, 0.0, 1));
    let b = save(&dir, "b.csv", &gaussian_dataset(300, 31, 0.0, 1));
    let out = firm(&["compare", "--config", s(&cfg), "--data", s(&a), "--data-b", s(&b)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn canonical_dataset_round_trip() {
    let mut records = gaussian_dataset(50, 10, 0.25, 2);
    records.push(Record {
        location_id: "with, comma".into(),
        date: chrono::NaiveDate::from_ymd_opt(1999, 12, 31).unwrap(),
        lead_days: -2,
        forecast: ForecastCell::Distribution(DistSpec::Quantiles {
            pairs: vec![(0.1, 0.0), (0.5, 1e-7), (0.9, 3.3e17)],
            min: Some(0.0),
        }),
        observation: ObservationCell::Category(2),
    });
    records.push(Record {
        location_id: "z".into(),
        date: chrono::NaiveDate::from_ymd_opt(2000, 2, 29).unwrap(),
        lead_days: 0,
        forecast: ForecastCell::Distribution(DistSpec::ExpTail {
            p0: 0.7,
            scale: 20.0,
            lower: 0.0,
        }),
        observation: ObservationCell::Value(0.1 + 0.2),
    });
    records.push(Record {
        location_id: "z".into(),
        date: chrono::NaiveDate::from_ymd_opt(2000, 3, 1).unwrap(),
        lead_days: 5,
        forecast: ForecastCell::Distribution(DistSpec::Empirical {
            values: vec![-1.5, 2.0, std::f64::consts::PI],
        }),
        observation: ObservationCell::Value(-0.0),
    });
    records.push(Record {
        location_id: "z".into(),
        date: chrono::NaiveDate::from_ymd_opt(2000, 3, 2).unwrap(),
        lead_days: 5,
        forecast: ForecastCell::Value(1.0 / 3.0),
        observation: ObservationCell::Value(f64::MIN_POSITIVE),
    });
    let mut buf = Vec::new();
    dataset::write(&mut buf, &records).unwrap();
    let back = dataset::read(buf.as_slice()).unwrap();
    assert_eq!(back, records);
}

#[test]
fn synthetic_commands_are_seeded() {
    let run = |args: &[&str]| {
        let out = firm(args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let lt = ["synthetic", "leadtime", "--cases", "20000", "--format", "csv", "--seed", "4"];
    let first = run(&lt);
    assert_eq!(first, run(&lt));
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("beta,score\n0.05,"), "{text}");
    assert_eq!(text.lines().count(), 20);

    let ab = [
        "synthetic", "alpha-bias", "--alphas", "0.3,0.5", "--base-rates", "0.25",
        "--rel-uncertainties", "0.01", "--cases", "400000", "--format", "json",
    ];
    let v: Value = serde_json::from_slice(&run(&ab)).unwrap();
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 2);
    for p in pts {
        assert!((f(&p["alpha_tilde"]) - f(&p["alpha"])).abs() < 0.1, "{p}");
    }

    let pf = [
        "synthetic", "pod-far", "--alphas", "0.5", "--base-rates", "0.1",
        "--rel-uncertainties", "0.01", "--cases-per-trial", "200", "--target-se", "0.05",
        "--format", "json",
    ];
    let v: Value = serde_json::from_slice(&run(&pf)).unwrap();
    assert!(f(&v["points"][0]["probability"]) > 0.95, "{v}");
}
