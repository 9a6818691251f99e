use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn molspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_molspec")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn lines(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn solve_free_strip_has_bound_state() {
    let out = molspec(&["solve", "--d", "1", "--sigma", "0", "--L", "8", "--M", "32"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let reports = lines(&stdout(&out));
    assert_eq!(reports.len(), 1);
    let r = &reports[0];
    assert_eq!(r["schema"], "molspec.report/1");
    assert_eq!(r["experiment"], "solve");
    let e0 = r["output"]["E0"].as_f64().unwrap();
    assert!(e0 < 4.9348, "E0 = {e0}");
    assert_eq!(r["output"]["class"], "NONEMPTY");
}

#[test]
fn replay_reproduces_solve_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("solve.jsonl");
    let path_s = path.to_str().unwrap();
    let out = molspec(&["solve", "--atoms", "0.3,1.1,2.5", "--sigma", "5;inf;pw:1,0.5,40", "--L", "4", "--M", "10", "--count", "3", "--output", path_s]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let original = fs::read_to_string(&path).unwrap();
    let replayed = molspec(&["--replay", path_s]);
    assert_eq!(replayed.status.code(), Some(0), "{}", String::from_utf8_lossy(&replayed.stderr));
    assert_eq!(stdout(&replayed), original);

    // a doctored eigenvalue is caught
    let mut v: Value = serde_json::from_str(original.trim()).unwrap();
    v["output"]["eigenvalues"][0] = Value::from(v["output"]["eigenvalues"][0].as_f64().unwrap() * (1.0 + 1e-15));
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, format!("{v}\n")).unwrap();
    assert_eq!(molspec(&["--replay", bad.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn mc_output_independent_of_jobs() {
    let base = ["mc", "--nu", "1.5", "--sigma", "20", "--n", "12", "--seed", "9", "--L", "3", "--M", "8"];
    let one = molspec(&[&base[..], &["--jobs", "1"]].concat());
    let four = molspec(&[&base[..], &["--jobs", "4"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let reports = lines(&stdout(&one));
    assert_eq!(reports.len(), 13);
    let summary = &reports[12];
    assert_eq!(summary["experiment"], "mc_summary");
    let total: u64 = summary["summary"]["frequencies"].as_array().unwrap().iter().map(|f| f["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 12);
}

#[test]
fn csv_agrees_with_jsonl() {
    let args = ["mc", "--sigma", "1e4", "--n", "6", "--seed", "3", "--L", "3", "--M", "8"];
    let json = lines(&stdout(&molspec(&args)));
    let csv_out = molspec(&[&args[..], &["--format", "csv"]].concat());
    assert_eq!(csv_out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(csv_out.stdout.as_slice());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["experiment", "d", "nu", "sigma", "E0", "class", "ci_lo", "ci_hi", "seed"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6 + 3);
    for (row, rep) in rows.iter().zip(&json[..6]) {
        assert_eq!(&row[0], "mc_sample");
        let e0: f64 = row[4].parse().unwrap();
        assert_eq!(e0, rep["sample"]["E0"].as_f64().unwrap());
        assert_eq!(&row[5], rep["sample"]["class"].as_str().unwrap());
        assert_eq!(row[8].parse::<u64>().unwrap(), rep["sample"]["stream_seed"].as_u64().unwrap());
    }
    let freqs = json[6]["summary"]["frequencies"].as_array().unwrap();
    for (row, f) in rows[6..].iter().zip(freqs) {
        assert_eq!(&row[0], "mc_summary");
        assert_eq!(&row[5], f["class"].as_str().unwrap());
        assert_eq!(row[6].parse::<f64>().unwrap(), f["ci"]["lo"].as_f64().unwrap());
        assert_eq!(row[7].parse::<f64>().unwrap(), f["ci"]["hi"].as_f64().unwrap());
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "nu = 3.0\nseed = 11\nhorizon = 2.0\n").unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = lines(&stdout(&molspec(&["sample", "--config", c])));
    assert_eq!(from_file[0]["configuration"]["nu"], 3.0);
    assert_eq!(from_file[0]["configuration"]["seed"], 11);
    let overridden = lines(&stdout(&molspec(&["sample", "--config", c, "--seed", "12"])));
    assert_eq!(overridden[0]["configuration"]["seed"], 12);
    assert_eq!(overridden[0]["configuration"]["nu"], 3.0);

    fs::write(&cfg, "nu = 3.0\ncolour = \"red\"\n").unwrap();
    let rejected = molspec(&["sample", "--config", c]);
    assert_eq!(rejected.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&rejected.stderr).contains("colour"));
}

#[test]
fn exit_codes() {
    assert_eq!(molspec(&["solve", "--bogus"]).status.code(), Some(2));
    assert_eq!(molspec(&["solve", "--sigma", "-1"]).status.code(), Some(2));
    assert_eq!(molspec(&["mc", "--nu", "0"]).status.code(), Some(2));
    assert_eq!(molspec(&["gamma", "--eta", "2.5", "--points", "3", "--cells", "8"]).status.code(), Some(2));
    assert_eq!(molspec(&["--help"]).status.code(), Some(0));
    // refinement lists must ascend
    assert_eq!(molspec(&["converge", "--L-list", "3", "--M-list", "8,4"]).status.code(), Some(2));
}

#[test]
fn appendix_reports_zero_violations() {
    let out = molspec(&["appendix", "--trials", "40", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("A1 violations: 0") && err.contains("A2 violations: 0"), "{err}");
    let r = &lines(&stdout(&out))[0];
    assert_eq!(r["output"]["a1"]["violations"], 0);
    assert_eq!(r["output"]["mu_table"]["rows"].as_array().unwrap().last().unwrap()["gamma"], "inf");
}

#[test]
fn mesh_dump_writes_json_and_coo() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("strip");
    let out = molspec(&["mesh-dump", "--L", "2", "--M", "2", "--atoms", "1.0", "--sigma", "3", "--coo", prefix.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(doc["schema"], "molspec.mesh/1");
    let mesh = &doc["mesh"];
    assert!(!mesh["nodes"].as_array().unwrap().is_empty());
    let tags: Vec<&str> = mesh["edge_groups"].as_array().unwrap().iter().map(|g| g["tag"].as_str().unwrap()).collect();
    assert!(tags.iter().any(|t| t.starts_with("GAMMA")), "{tags:?}");

    for m in ["A", "M"] {
        let text = fs::read_to_string(Path::new(&format!("{}.{m}.coo", prefix.display()))).unwrap();
        let mut it = text.lines();
        let header: Vec<usize> = it.next().unwrap().split(' ').map(|x| x.parse().unwrap()).collect();
        assert_eq!(header[0], header[1]);
        assert_eq!(it.count(), header[2]);
    }
}
