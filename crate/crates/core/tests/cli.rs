use std::path::Path;
use std::process::{Command, Output};

use storesim::io::{report_schema, validate_against, ReportDocument};
use storesim::metrics::MEASURE_COUNT;

fn storesim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_storesim"))
        .args(args)
        .env_remove("STORESIM_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn small_run(out: &Path) -> Output {
    storesim(&[
        "run",
        "--scenario",
        "d",
        "--weeks",
        "2",
        "--reps",
        "3",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn run_writes_report_csv_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = small_run(&out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("customers leaving with purchase"));

    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), MEASURE_COUNT + 1);
    assert_eq!(csv.lines().next(), Some("id,name,mean,sd"));

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let schema: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("report.schema.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(schema, report_schema());
    assert_eq!(validate_against(&schema, &json), Vec::<String>::new());
    assert_eq!(json["provenance"]["base_seed"], 7);
    assert_eq!(
        json["provenance"]["replication_seeds"]
            .as_array()
            .unwrap()
            .len(),
        3
    );
}

#[test]
fn repeated_runs_are_byte_identical_and_regenerate() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert_eq!(code(&small_run(&a)), 0);
    assert_eq!(code(&small_run(&b)), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let o = storesim(&["regenerate", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    // A report whose embedded config no longer matches its hash is refused.
    let mut doc = ReportDocument::from_json(&std::fs::read_to_string(&a).unwrap()).unwrap();
    doc.provenance.config.pool_size += 1;
    std::fs::write(&b, doc.to_json()).unwrap();
    assert_ne!(code(&storesim(&["regenerate", b.to_str().unwrap()])), 0);
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = Command::new(env!("CARGO_BIN_EXE_storesim"))
        .args([
            "run",
            "--weeks",
            "1",
            "--reps",
            "2",
            "--out",
            out.to_str().unwrap(),
        ])
        .env("STORESIM_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let doc = ReportDocument::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc.provenance.base_seed, 99);
}

#[test]
fn sweep_prints_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = storesim(&[
        "sweep",
        "--param",
        "queue-length",
        "--grid",
        "1,4",
        "--weeks",
        "2",
        "--reps",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let rows: Vec<f64> = stdout
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0] > rows[1]);
    assert!(dir.path().join("point-1.json").exists());
    assert!(dir.path().join("point-4.json").exists());
}

#[test]
fn exit_codes() {
    assert_eq!(code(&storesim(&["validate"])), 0);
    assert_eq!(code(&storesim(&["validate", "--department", "ww"])), 0);
    assert_eq!(code(&storesim(&["--help"])), 0);
    assert_eq!(code(&storesim(&["frobnicate"])), 1);
    assert_eq!(
        code(&storesim(&["run", "--scenario", "z", "--weeks", "1"])),
        1
    );
    assert_eq!(code(&storesim(&["run", "--reps", "0", "--weeks", "1"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = storesim::io::ATV_JSON.replacen("\"pool_size\"", "\"pool_sise\"", 1);
    std::fs::write(&bad, text).unwrap();
    assert_eq!(
        code(&storesim(&["validate", "--config", bad.to_str().unwrap()])),
        2
    );
    assert_eq!(
        code(&storesim(&[
            "validate",
            "--config",
            "/nonexistent/cfg.json"
        ])),
        2
    );

    // Far above anything one staffed till can serve.
    let o = storesim(&[
        "calibrate",
        "--target",
        "100000",
        "--lo",
        "1",
        "--hi",
        "4",
        "--weeks",
        "1",
        "--reps",
        "2",
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn show_config_round_trips_through_validate() {
    let o = storesim(&["show-config", "--department", "ww"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), storesim::io::WW_JSON);
}
