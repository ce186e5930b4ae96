use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn eoda(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eoda"))
        .args(args)
        .env("EODA_DATA_DIR", data)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &[&str] = &[
    "--thresholds",
    "8,4",
    "--epochs",
    "2",
    "--set",
    "population_size=150",
    "--set",
    "samples_per_iteration=150",
];

fn run_small(data: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--domain", "chess", "--out", out.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    eoda(data, &args)
}

#[test]
fn tablebase_build_and_verify() {
    let d = TempDir::new().unwrap();
    let o = eoda(d.path(), &["tablebase", "build"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(d.path().join("krk.tb").exists());
    let o = eoda(d.path(), &["tablebase", "verify"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("verify: OK"));
    assert!(text.contains("0.152"), "depth-3 discrepancy must be noted");
    assert!(text.lines().any(|l| l.split_whitespace().collect::<Vec<_>>() == ["draw", "2796"]));

    let bytes = fs::read(d.path().join("krk.tb")).unwrap();
    let bad = d.path().join("bad.tb");
    fs::write(&bad, &bytes[..bytes.len() - 5]).unwrap();
    let o = eoda(d.path(), &["tablebase", "verify", "--path", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("corrupt"));

    let o = eoda(d.path(), &["tablebase", "verify", "--path", "/nonexistent/krk.tb"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_one() {
    let d = TempDir::new().unwrap();
    assert_eq!(eoda(d.path(), &[]).status.code(), Some(1));
    assert_eq!(eoda(d.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(eoda(d.path(), &["predicates", "--domain", "go"]).status.code(), Some(1));
    assert_eq!(eoda(d.path(), &["report"]).status.code(), Some(1));
    assert_eq!(eoda(d.path(), &["--help"]).status.code(), Some(0));

    let o = eoda(d.path(), &["run", "--domain", "chess", "--set", "populationsize=3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("populationsize"), "{}", stderr(&o));

    let cfg = d.path().join("cfg.json");
    fs::write(&cfg, r#"{"domain": "chess", "train": {"learning_rate": -1}}"#).unwrap();
    let o = eoda(d.path(), &["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("learning_rate"), "{}", stderr(&o));

    let o = eoda(d.path(), &["run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("domain"));
}

#[test]
fn predicates_listing() {
    let d = TempDir::new().unwrap();
    let o = eoda(d.path(), &["predicates", "--domain", "chess"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for p in ["king_distance", "between", "kings_in_opposition", "l_shape", "edge_distance"] {
        assert!(text.contains(p), "{p} missing");
    }
    let o = eoda(d.path(), &["predicates", "--domain", "jobshop", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let ids: Vec<&str> = v.as_array().unwrap().iter().map(|s| s["id"].as_str().unwrap()).collect();
    assert!(ids.contains(&"total_wait") && ids.contains(&"early"));
}

#[test]
fn jobshop_gen_writes_valid_instance() {
    let d = TempDir::new().unwrap();
    let path = d.path().join("inst.json");
    let o = eoda(d.path(), &["jobshop", "gen", "--seed", "0", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("lower bound 342"));
    let inst: eoda::encoding::JobShopInstance = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    assert_eq!(inst, eoda::encoding::JobShopInstance::benchmark());
    let o = eoda(d.path(), &["jobshop", "gen", "--n-jobs", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_is_reproducible_and_writes_manifest() {
    let d = TempDir::new().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    // The tablebase does not exist yet and is built on demand.
    let oa = run_small(d.path(), &a, &["--seeds", "2", "--ilp", "on,off"]);
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    assert!(d.path().join("krk.tb").exists());
    let ob = run_small(d.path(), &b, &["--seed-list", "0,1", "--ilp", "on,off", "--jobs", "2"]);
    assert_eq!(ob.status.code(), Some(0), "{}", stderr(&ob));
    for variant in ["ilp", "plain"] {
        for seed in 0..2 {
            let name = format!("{variant}/seed-{seed}.csv");
            let x = fs::read(a.join(&name)).unwrap();
            let y = fs::read(b.join(&name)).unwrap();
            assert_eq!(x, y, "{name} differs between identical runs");
            assert!(a.join(format!("{variant}/seed-{seed}.dbn")).exists());
        }
    }

    let text = stdout(&oa);
    assert!(text.contains("chess / DBN+ILP (2 seeds"));
    assert!(text.contains("chess / DBN (2 seeds"));
    // Every summary CSV row appears cell-for-cell in the printed table.
    let csv = fs::read_to_string(a.join("ilp/summary_precision.csv")).unwrap();
    let printed: Vec<Vec<&str>> = text.lines().map(|l| l.split_whitespace().collect()).collect();
    for row in csv.lines() {
        let cells: Vec<&str> = row.split(',').collect();
        assert!(printed.contains(&cells), "row {row} not printed");
    }

    let m: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seeds"], serde_json::json!([0, 1]));
    assert_eq!(m["variants"], serde_json::json!(["ilp", "plain"]));
    assert_eq!(m["tablebase"]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["models"].as_object().unwrap().len(), 4);
    let mb: serde_json::Value = serde_json::from_slice(&fs::read(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["models"]["ilp/seed-1"]["sha256"], mb["models"]["ilp/seed-1"]["sha256"]);

    // A directory that already holds a run is refused.
    let again = run_small(d.path(), &a, &[]);
    assert_eq!(again.status.code(), Some(1));
}

#[test]
fn report_and_rules_show() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("run");
    let o = run_small(d.path(), &out, &["--seed-list", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace_path = out.join("ilp/seed-4.json");

    let o = eoda(d.path(), &["report", trace_path.to_str().unwrap(), "--csv-dir", d.path().join("rep").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // A single trace reports its own values with zero spread.
    let trace: eoda::eods::EodsTrace = serde_json::from_slice(&fs::read(&trace_path).unwrap()).unwrap();
    let rep = fs::read_to_string(d.path().join("rep/ilp/summary_precision.csv")).unwrap();
    for (r, line) in trace.iterations.iter().zip(rep.lines().skip(1)) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[3], format!("{:.6}", r.prec_model));
        assert_eq!(cells[4], "0.000000");
        assert_eq!(cells[5], format!("{:.6}", r.prec_model));
    }

    let o = eoda(d.path(), &["rules", "show", "--trace", trace_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("iteration 1 (theta 8)"));
    assert!(stdout(&o).contains("good(x) :-"));
    let o = eoda(d.path(), &["rules", "show", "--trace", trace_path.to_str().unwrap(), "--iteration", "9"]);
    assert_eq!(o.status.code(), Some(1));

    // Mixing domains is rejected.
    let mut other = trace.clone();
    other.domain = eoda::problem::Domain::Jobshop;
    let other_path = d.path().join("seed-99.json");
    fs::write(&other_path, serde_json::to_vec(&other).unwrap()).unwrap();
    let o = eoda(d.path(), &["report", trace_path.to_str().unwrap(), other_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("mixed domains"));

    let junk = d.path().join("junk.json");
    fs::write(&junk, "{}").unwrap();
    assert_eq!(eoda(d.path(), &["report", junk.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn report_means_lie_within_seed_envelope() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("run");
    let o = run_small(d.path(), &out, &["--seeds", "3", "--ilp", "off"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = eoda(d.path(), &["report", out.to_str().unwrap(), "--csv-dir", d.path().join("rep").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rep = fs::read_to_string(d.path().join("rep/plain/summary_precision.csv")).unwrap();
    for line in rep.lines().skip(1) {
        let c: Vec<f64> = line.split(',').take(8).map(|x| x.parse().unwrap()).collect();
        let (mean, median, lo, hi) = (c[3], c[5], c[6], c[7]);
        assert!(lo <= mean && mean <= hi, "{line}");
        assert!(lo <= median && median <= hi, "{line}");
    }
    let cov = fs::read_to_string(d.path().join("rep/plain/summary_coverage.csv")).unwrap();
    for line in cov.lines().skip(1) {
        let c: Vec<f64> = line.split(',').take(6).map(|x| x.parse().unwrap()).collect();
        assert!(c[4] <= c[2] && c[2] <= c[5], "{line}");
    }
}
