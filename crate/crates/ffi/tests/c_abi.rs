use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use eoda::encoding::{JobShopInstance, JobShopSchedule};
use eoda::oracles::{jobshop_cost, make_feasible, Cost};
use eoda_ffi::*;

fn last_error() -> String {
    let p = eoda_last_error_message();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn tablebase() -> *mut EodaTablebase {
    let mut tb = ptr::null_mut();
    assert_eq!(unsafe { eoda_tablebase_build(&mut tb) }, EodaStatus::Ok);
    tb
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { eoda_string_free(p) };
    s
}

#[test]
fn krk_cost_and_canonical_form() {
    let tb = tablebase();
    assert_eq!(unsafe { eoda_tablebase_len(tb) }, 28056);
    let mut depth = -5;
    let mate = [1u8, 5, 7, 7, 0, 7];
    assert_eq!(
        unsafe { eoda_krk_cost(tb, mate.as_ptr(), &mut depth) },
        EodaStatus::Ok
    );
    assert_eq!(depth, 0);

    // Black king on a1 takes the unprotected rook on b2.
    let capture = [7u8, 7, 1, 1, 0, 0];
    assert_eq!(
        unsafe { eoda_krk_cost(tb, capture.as_ptr(), &mut depth) },
        EodaStatus::Ok
    );
    assert_eq!(depth, EODA_KRK_DRAW);

    let mut canon = [0u8; 6];
    assert_eq!(
        unsafe { eoda_krk_canonicalize(mate.as_ptr(), canon.as_mut_ptr()) },
        EodaStatus::Ok
    );
    assert!(
        canon[0] <= 3 && canon[1] <= canon[0],
        "white king outside a1-d1-d4: {canon:?}"
    );
    let mut depth2 = -5;
    assert_eq!(
        unsafe { eoda_krk_cost(tb, canon.as_ptr(), &mut depth2) },
        EodaStatus::Ok
    );
    assert_eq!(depth2, 0);
    unsafe { eoda_tablebase_free(tb) };
}

#[test]
fn errors_set_status_and_message() {
    let tb = tablebase();
    let mut depth = 0;
    let adjacent_kings = [3u8, 3, 0, 0, 3, 4];
    assert_eq!(
        unsafe { eoda_krk_cost(tb, adjacent_kings.as_ptr(), &mut depth) },
        EodaStatus::InvalidInstance
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { eoda_krk_cost(tb, ptr::null(), &mut depth) },
        EodaStatus::NullPointer
    );
    assert!(last_error().contains("squares"));
    assert_eq!(
        unsafe { eoda_krk_cost(tb, [0u8; 6].as_ptr(), ptr::null_mut()) },
        EodaStatus::InvalidInstance
    );

    // A successful call clears the message.
    let mate = [1u8, 5, 7, 7, 0, 7];
    assert_eq!(
        unsafe { eoda_krk_cost(tb, mate.as_ptr(), &mut depth) },
        EodaStatus::Ok
    );
    assert!(eoda_last_error_message().is_null());

    let missing = CString::new("/nonexistent/dir/krk.tb").unwrap();
    let mut loaded = ptr::null_mut();
    assert_eq!(
        unsafe { eoda_tablebase_load(missing.as_ptr(), &mut loaded) },
        EodaStatus::Io
    );
    assert!(loaded.is_null());
    unsafe { eoda_tablebase_free(tb) };
    unsafe { eoda_tablebase_free(ptr::null_mut()) };
}

#[test]
fn tablebase_save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("krk.tb").to_str().unwrap()).unwrap();
    let tb = tablebase();
    assert_eq!(
        unsafe { eoda_tablebase_save(tb, path.as_ptr()) },
        EodaStatus::Ok
    );
    let mut loaded = ptr::null_mut();
    assert_eq!(
        unsafe { eoda_tablebase_load(path.as_ptr(), &mut loaded) },
        EodaStatus::Ok
    );
    assert_eq!(unsafe { eoda_tablebase_len(loaded) }, 28056);
    unsafe {
        eoda_tablebase_free(tb);
        eoda_tablebase_free(loaded);
    }
}

#[test]
fn jobshop_cost_matches_simulator() {
    let mut js = ptr::null_mut();
    assert_eq!(unsafe { eoda_jobshop_benchmark(&mut js) }, EodaStatus::Ok);
    let (mut n, mut m) = (0usize, 0usize);
    assert_eq!(
        unsafe { eoda_jobshop_dims(js, &mut n, &mut m) },
        EodaStatus::Ok
    );
    assert_eq!((n, m), (5, 5));
    let mut lb = 0;
    assert_eq!(
        unsafe { eoda_jobshop_lower_bound(js, &mut lb) },
        EodaStatus::Ok
    );
    assert_eq!(lb, 342);

    let inst = JobShopInstance::benchmark();
    let mut rng = eoda::rng::seeded(11);
    let mut feasible_seen = false;
    let mut infeasible_seen = false;
    for _ in 0..200 {
        let raw = JobShopSchedule::random(n, m, &mut rng);
        for s in [make_feasible(&inst, &raw).unwrap(), raw] {
            let flat: Vec<u32> = s
                .machine_orders
                .iter()
                .flatten()
                .map(|&j| j as u32)
                .collect();
            let (mut span, mut ok) = (0u32, false);
            assert_eq!(
                unsafe { eoda_jobshop_cost(js, flat.as_ptr(), flat.len(), &mut span, &mut ok) },
                EodaStatus::Ok
            );
            match jobshop_cost(&inst, &s).unwrap() {
                Cost::Value(v) => {
                    assert!(ok);
                    assert_eq!(span, v);
                    assert!(span >= lb);
                    feasible_seen = true;
                }
                Cost::Infeasible(v) => {
                    assert!(!ok);
                    assert_eq!(span, v);
                    infeasible_seen = true;
                }
                Cost::Draw => unreachable!(),
            }
        }
    }
    assert!(feasible_seen && infeasible_seen);

    let short = [0u32; 3];
    let (mut span, mut ok) = (0u32, false);
    assert_eq!(
        unsafe { eoda_jobshop_cost(js, short.as_ptr(), short.len(), &mut span, &mut ok) },
        EodaStatus::InvalidArgument
    );
    unsafe { eoda_jobshop_free(js) };
}

#[test]
fn jobshop_json_parsing() {
    let good = CString::new(r#"{"routings":[[0,1],[1,0]],"durations":[[3,2],[4,1]]}"#).unwrap();
    let mut js = ptr::null_mut();
    assert_eq!(
        unsafe { eoda_jobshop_from_json(good.as_ptr(), &mut js) },
        EodaStatus::Ok
    );
    let mut lb = 0;
    assert_eq!(
        unsafe { eoda_jobshop_lower_bound(js, &mut lb) },
        EodaStatus::Ok
    );
    assert_eq!(lb, 7);
    unsafe { eoda_jobshop_free(js) };

    let bad = CString::new(r#"{"routings":[[0,0]],"durations":[[1,1]]}"#).unwrap();
    let mut js = ptr::null_mut();
    let status = unsafe { eoda_jobshop_from_json(bad.as_ptr(), &mut js) };
    assert_ne!(status, EodaStatus::Ok);
    assert!(js.is_null());
    assert!(!last_error().is_empty());
}

fn run(cfg: &str, tb: *const EodaTablebase) -> (EodaStatus, *mut EodaTrace) {
    let cfg = CString::new(cfg).unwrap();
    let mut trace = ptr::null_mut();
    let status = unsafe { eoda_run(cfg.as_ptr(), tb, ptr::null(), &mut trace) };
    (status, trace)
}

#[test]
fn run_is_deterministic_and_validates_config() {
    let tb = tablebase();
    let cfg = r#"{"domain":"chess","thresholds":[8,4],"population_size":150,
                  "samples_per_iteration":150,"seed":3,"train":{"epochs":2}}"#;
    let mut csvs = Vec::new();
    for _ in 0..2 {
        let (status, trace) = run(cfg, tb);
        assert_eq!(status, EodaStatus::Ok, "{}", last_error());
        assert_eq!(unsafe { eoda_trace_iterations(trace) }, 2);
        let mut s = ptr::null_mut();
        assert_eq!(unsafe { eoda_trace_csv(trace, &mut s) }, EodaStatus::Ok);
        csvs.push(take_string(s));
        let mut j = ptr::null_mut();
        assert_eq!(unsafe { eoda_trace_json(trace, &mut j) }, EodaStatus::Ok);
        let json: serde_json::Value = serde_json::from_str(&take_string(j)).unwrap();
        assert_eq!(json["seed"], 3);
        assert!(unsafe { eoda_trace_final_coverage(trace) } <= 27);
        unsafe { eoda_trace_free(trace) };
    }
    assert_eq!(csvs[0], csvs[1]);
    assert!(csvs[0].starts_with("iteration,theta,"));
    assert_eq!(csvs[0].lines().count(), 3);

    let (status, trace) = run(r#"{"domain":"chess","epochs":3}"#, tb);
    assert_eq!(status, EodaStatus::Config);
    assert!(trace.is_null());
    assert!(last_error().contains("epochs"));

    let (status, _) = run(r#"{"domain":"chess","population_size":0}"#, tb);
    assert_eq!(status, EodaStatus::Config);
    assert!(last_error().contains("population_size"));

    let (status, _) = run(r#"{"domain":"chess"}"#, ptr::null());
    assert_eq!(status, EodaStatus::NullPointer);
    unsafe { eoda_tablebase_free(tb) };
}

fn header_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/eoda.h")
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(header_path()).unwrap();
    let exports = [
        "eoda_version",
        "eoda_last_error_message",
        "eoda_string_free",
        "eoda_tablebase_build",
        "eoda_tablebase_load",
        "eoda_tablebase_save",
        "eoda_tablebase_len",
        "eoda_tablebase_free",
        "eoda_krk_cost",
        "eoda_krk_canonicalize",
        "eoda_jobshop_benchmark",
        "eoda_jobshop_from_json",
        "eoda_jobshop_free",
        "eoda_jobshop_dims",
        "eoda_jobshop_lower_bound",
        "eoda_jobshop_cost",
        "eoda_run",
        "eoda_trace_free",
        "eoda_trace_iterations",
        "eoda_trace_final_coverage",
        "eoda_trace_csv",
        "eoda_trace_json",
    ];
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    for t in [
        "typedef struct EodaTablebase EodaTablebase;",
        "typedef struct EodaTrace EodaTrace;",
        "EODA_STATUS_PANIC = 7",
    ] {
        assert!(header.contains(t), "{t} missing from header");
    }
}

#[test]
fn c_program_links_against_static_library() {
    // Test binaries live in the deps directory next to the freshly built
    // static library; the copy one level up is only refreshed by `cargo build`.
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().join("libeoda_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/smoke.c");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header_path().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success(), "compiling the C smoke test failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
