use std::path::Path;
use std::process::{Command, Output};

use fairmix_core::report::{csv_writer, fmt_f64};
use serde::Deserialize;

fn fairmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairmix")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[derive(Debug, Deserialize)]
struct SweepRecord {
    axis: String,
    value: f64,
    regime: String,
    r_plus: Option<f64>,
    r_minus: Option<f64>,
    delta: Option<f64>,
    status: String,
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

#[test]
fn sweep_csv_reemits_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eps.csv");
    let o = fairmix(&["sweep", "--preset", "epsilon", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let original = std::fs::read(&out).unwrap();

    let mut rdr = csv::Reader::from_reader(original.as_slice());
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(rdr.headers().unwrap()).unwrap();
        for rec in rdr.deserialize::<SweepRecord>() {
            let r = rec.unwrap();
            w.write_record([
                r.axis,
                fmt_f64(r.value),
                r.regime,
                opt(r.r_plus),
                opt(r.r_minus),
                opt(r.delta),
                r.status,
            ])
            .unwrap();
        }
        w.flush().unwrap();
    }
    assert_eq!(buf, original);
    assert!(!original.contains(&b'\r'));
}

#[test]
fn manifest_rerun_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.csv");
    let o = fairmix(&[
        "sweep",
        "--preset",
        "class_distance",
        "--mc-n",
        "10000",
        "--seed",
        "7",
        "--out",
        path(&first),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest = dir.path().join("a.csv.manifest.json");
    let second = dir.path().join("b.csv");
    let o = fairmix(&["sweep", "--config", path(&manifest), "--out", path(&second)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(&manifest).unwrap()).unwrap();
    assert_eq!(m["seed"], 7);
    assert_eq!(m["command"], "sweep");
}

#[test]
fn analytic_exit_codes() {
    let o = fairmix(&["analytic", "--d", "5", "--alpha", "0.6", "--lambda", "0,0.5"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let deltas: Vec<f64> =
        text.lines().skip(1).map(|l| l.split(',').nth(7).unwrap().parse().unwrap()).collect();
    assert_eq!(deltas.len(), 2);
    assert!(deltas[1] < deltas[0]);

    let o = fairmix(&["analytic", "--epsilon", "1.0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("perturbation exceeds class separation"));
}

#[test]
fn malformed_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("train.json");
    std::fs::write(&cfg, r#"{"seeds": 2, "learning_rte": 0.1}"#).unwrap();
    let o = fairmix(&["train", "--config", path(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("learning_rte"), "{}", stderr(&o));

    std::fs::write(&cfg, r#"{"epochs": -3}"#).unwrap();
    let o = fairmix(&["train", "--config", path(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("epochs"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let o = fairmix(&["sweep", "--preset", "lambda", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let o = fairmix(&["analytic", "--config", "/nonexistent-dir/c.json"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn vanishing_tolerance_fails_validation() {
    let o = fairmix(&["validate", "--n", "10000", "--multiplier", "0.001"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn invalid_grid_row_is_tagged_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.csv");
    std::fs::write(
        &grid,
        "regime,d,mu_plus,mu_minus,sigma_plus,sigma_minus,alpha,lambda,epsilon\n\
         natural,2,1,1,1,1,0.6,0.5,0\n\
         adversarial,2,0.2,0.2,1,1,0.6,0.5,0.3\n",
    )
    .unwrap();
    let out = dir.path().join("report.csv");
    let o = fairmix(&["validate", "--grid", path(&grid), "--n", "20000", "--out", path(&out)]);
    assert_eq!(code(&o), 1);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[1].ends_with(",true"), "{}", lines[1]);
    assert!(lines[2].ends_with(",,,,,,error:separation_exceeded"), "{}", lines[2]);

    // The report itself is a valid grid file.
    let again = dir.path().join("again.csv");
    let o = fairmix(&["validate", "--grid", path(&out), "--n", "20000", "--out", path(&again)]);
    assert_eq!(code(&o), 1);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn train_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("train.json");
    std::fs::write(
        &cfg,
        r#"{"d": 3, "n": 3000, "epochs": 4, "regimes": ["natural", "adversarial"], "epsilon": 0.0}"#,
    )
    .unwrap();
    let out = dir.path().join("runs.csv");
    let o = fairmix(&["train", "--config", path(&cfg), "--seeds", "2", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let runs = std::fs::read_to_string(&out).unwrap();
    assert_eq!(runs.lines().count(), 5);
    let agg = std::fs::read_to_string(dir.path().join("runs.csv.aggregate.csv")).unwrap();
    assert!(agg.starts_with("regime,mode,quantity,avg,std,min,max\n"));
    // At ε = 0 the two regimes are identical runs.
    let body: Vec<&str> = agg.lines().skip(1).collect();
    let (nat, adv) = body.split_at(body.len() / 2);
    for (a, b) in nat.iter().zip(adv) {
        assert_eq!(a.split_once(',').unwrap().1, b.split_once(',').unwrap().1);
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("runs.csv.json")).unwrap()).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 4);
    assert_eq!(report["runs"][0]["epoch_loss"].as_array().unwrap().len(), 4);
    assert!(dir.path().join("runs.csv.manifest.json").exists());
}
