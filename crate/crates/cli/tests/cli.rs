use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn miw(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_miw"))
        .args(args)
        .env("MIW_CACHE_DIR", cache)
        .output()
        .expect("miw runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has an error line");
    serde_json::from_str(line).expect("stderr error is JSON")
}

fn num(v: &Value) -> f64 {
    v.as_str().expect("decimal string").parse().unwrap()
}

fn solve_to(dir: &Path, n: usize) -> std::path::PathBuf {
    let path = dir.join(format!("n{n}.json"));
    let out = miw(
        &dir.join("cache"),
        &[
            "solve",
            "--n",
            &n.to_string(),
            "--out",
            path.to_str().unwrap(),
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    path
}

#[test]
fn solve_three_and_twenty_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = miw(tmp.path(), &["solve", "--n", "3"]);
    assert!(out.status.success());
    let doc = json(&out);
    let values: Vec<f64> = doc["values"].as_array().unwrap().iter().map(num).collect();
    for (v, w) in values.iter().zip([1.0, 0.0, -1.0]) {
        assert!((v - w).abs() < 1e-12);
    }

    let doc = json(&miw(tmp.path(), &["solve", "--n", "22"]));
    assert!((num(&doc["values"][0]) - 2.0025).abs() < 5e-4);
    assert!(
        String::from_utf8_lossy(&miw(tmp.path(), &["solve", "--n", "22"]).stderr)
            .contains("source=cache")
    );
}

#[test]
fn small_n_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = miw(tmp.path(), &["solve", "--n", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "usage");
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("N must be ≥ 3"));
    assert_eq!(miw(tmp.path(), &["solve"]).status.code(), Some(2));
}

#[test]
fn corrupted_document_fails_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let path = solve_to(tmp.path(), 22);
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let v = doc["values"][4].as_str().unwrap().to_string();
    doc["values"][4] = Value::String(format!("-{v}"));
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, doc.to_string()).unwrap();

    let out = miw(tmp.path(), &["verify", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let report = json(&out);
    assert!(num(&report["properties"]["max_symmetry_defect"]) > 1.0);
    let failed = &stderr_json(&out)["error"]["failed"];
    assert!(failed.as_array().unwrap().iter().any(|f| f == "symmetry"));

    // density and distance refuse to load it
    assert_eq!(
        miw(tmp.path(), &["density", bad.to_str().unwrap()])
            .status
            .code(),
        Some(4)
    );
    assert_eq!(
        miw(tmp.path(), &["distance", bad.to_str().unwrap()])
            .status
            .code(),
        Some(4)
    );

    let good = miw(tmp.path(), &["verify", path.to_str().unwrap()]);
    assert!(good.status.success());
    assert_eq!(json(&good)["failed"].as_array().unwrap().len(), 0);
}

#[test]
fn schema_violations_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"schema_version": 1, "N": 3, "precision_digits": 20, "residual": "0", "values": ["1", "0"]}"#).unwrap();
    let out = miw(tmp.path(), &["verify", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"]["kind"], "schema");
}

#[test]
fn density_csv_has_one_row_per_interval() {
    let tmp = tempfile::tempdir().unwrap();
    let path = solve_to(tmp.path(), 22);
    let out = miw(tmp.path(), &["density", "--csv", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "interval_left,interval_right,height,mass");
    assert_eq!(lines.len(), 22);
    let mass: f64 = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((mass - 1.0).abs() < 1e-12);
}

#[test]
fn distance_report_respects_bounds() {
    let tmp = tempfile::tempdir().unwrap();
    let path = solve_to(tmp.path(), 50);
    let r = json(&miw(tmp.path(), &["distance", path.to_str().unwrap()]));
    assert_eq!(r["bounds_hold"], true);
    assert!(num(&r["report"]["dw_to_normal"]) <= num(&r["report"]["stein_upper"]));
}

#[test]
fn roots_flag_ordering() {
    let tmp = tempfile::tempdir().unwrap();
    let r = json(&miw(tmp.path(), &["roots", "--n", "5"]));
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["n"], 2);
    assert_eq!(rows[1]["n"], 3);
    assert!(rows.iter().all(|row| row["a_gt_b"] == true));
    assert_eq!(r["a_exceeds_b"], true);
}

#[test]
fn sweep_table_and_cached_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let run = |dir: &str| {
        let out_dir = tmp.path().join(dir);
        let out = miw(
            &cache,
            &[
                "--stable-output",
                "sweep",
                "--n-list",
                "11,22,50,100,200",
                "--out-dir",
                out_dir.to_str().unwrap(),
            ],
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        fs::read_to_string(out_dir.join("sweep.csv")).unwrap()
    };
    let first = run("a");
    assert_eq!(first, run("b"));

    let mut rdr = csv::Reader::from_reader(first.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (dw, stein) = (col("dw_to_normal"), col("stein_upper"));
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    let dws: Vec<f64> = rows.iter().map(|r| r[dw].parse().unwrap()).collect();
    assert!(dws.windows(2).all(|w| w[1] < w[0]));
    assert!(rows
        .iter()
        .all(|r| r[dw].parse::<f64>().unwrap() <= r[stein].parse::<f64>().unwrap()));
}

#[test]
fn sweep_rejects_small_n() {
    let tmp = tempfile::tempdir().unwrap();
    let out = miw(
        tmp.path(),
        &[
            "sweep",
            "--n-list",
            "5,2",
            "--out-dir",
            tmp.path().join("o").to_str().unwrap(),
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ou_without_cached_configuration_and_no_solve() {
    let tmp = tempfile::tempdir().unwrap();
    let out = miw(
        tmp.path(),
        &["ou", "--n", "40", "--m", "2", "--t", "1", "--no-solve"],
    );
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(stderr_json(&out)["error"]["kind"], "missing_dependency");
}

#[test]
fn ou_warns_outside_slow_growth_regime() {
    let tmp = tempfile::tempdir().unwrap();
    let out = miw(
        tmp.path(),
        &[
            "ou", "--n", "22", "--m", "5", "--t", "2", "--reps", "20", "--seed", "1",
        ],
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: m = 5"));
    let r = json(&out);
    assert_eq!(r["warnings"].as_array().unwrap().len(), 1);
    assert_eq!(r["header"]["N"], 22);
    assert_eq!(r["header"]["seed"], 1);
}

#[test]
fn ou_normal_source_is_deterministic_and_unit_variance() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "--stable-output",
        "ou",
        "--normal",
        "--m",
        "200",
        "--t",
        "10",
        "--reps",
        "500",
        "--seed",
        "7",
    ];
    let a = miw(tmp.path(), &args);
    let b = miw(tmp.path(), &args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    assert!((num(&r["statistics"]["stationary_variance"]["estimate"]) - 1.0).abs() < 0.05);
    assert_eq!(r["header"]["N"], Value::Null);
}

#[test]
fn ou_paths_csv_carries_header() {
    let tmp = tempfile::tempdir().unwrap();
    let paths = tmp.path().join("paths.csv");
    let out = miw(
        tmp.path(),
        &[
            "ou",
            "--normal",
            "--m",
            "4",
            "--t",
            "2",
            "--reps",
            "3",
            "--seed",
            "9",
            "--paths",
            paths.to_str().unwrap(),
        ],
    );
    assert!(out.status.success());
    let text = fs::read_to_string(paths).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# seed=9 m=4 N=normal T=2 reps=3");
    assert_eq!(lines[1], "rep,k,t,Y,Xbar");
    // [mT] + 1 = 9 values per replication
    assert_eq!(lines.len(), 2 + 3 * 9);
}

#[test]
fn corrupt_cache_entry_is_replaced() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    fs::create_dir_all(&cache).unwrap();
    fs::write(cache.join("N7_P30.json"), "garbage").unwrap();
    let out = miw(&cache, &["solve", "--n", "7"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ignoring cache entry"));
    let stored = fs::read(cache.join("N7_P30.json")).unwrap();
    assert_eq!(stored, out.stdout);
}

#[test]
fn metadata_only_without_stable_output() {
    let tmp = tempfile::tempdir().unwrap();
    let r = json(&miw(tmp.path(), &["roots", "--n", "3"]));
    assert!(r["metadata"]["elapsed_seconds"].is_string());
    let r = json(&miw(tmp.path(), &["--stable-output", "roots", "--n", "3"]));
    assert!(r.get("metadata").is_none());
}
