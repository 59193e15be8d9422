//! The command-line front end, run as a subprocess.

use std::path::Path;
use std::process::{Command, Output};

fn dramflow(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_dramflow"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "dramflow {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let k = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[k].to_string()).collect()
}

#[test]
fn plans_file_reproduces_stats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    dramflow(d, &["dse", "--net", "alexnet", "--mode", "romanet", "--out", "a"]);
    dramflow(d, &["sim", "--net", "alexnet", "--mode", "romanet", "--out", "fresh"]);
    dramflow(d, &["sim", "--plans", "a/plans_alexnet_romanet.json", "--out", "replay"]);
    let fresh = read(d, "fresh/stats_alexnet_romanet_burst.csv");
    assert_eq!(fresh, read(d, "replay/stats_alexnet_romanet_burst.csv"));
    assert_eq!(fresh.lines().count(), 1 + 8 + 1);

    dramflow(
        d,
        &["trace", "--plans", "a/plans_alexnet_romanet.json", "--layer", "0", "--out", "t1"],
    );
    dramflow(
        d,
        &["trace", "--plans", "a/plans_alexnet_romanet.json", "--layer", "0", "--out", "t2"],
    );
    assert_eq!(
        read(d, "t1/trace_alexnet_romanet_burst.txt"),
        read(d, "t2/trace_alexnet_romanet_burst.txt")
    );
}

#[test]
fn trace_file_parses_back_to_the_model_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    dramflow(d, &["dse", "--net", "toy", "--mode", "baseline", "--out", "o"]);
    dramflow(
        d,
        &["trace", "--plans", "o/plans_toy_baseline.json", "--burst", "off", "--out", "o"],
    );
    let text = std::fs::File::open(d.join("o/trace_toy_baseline_nonburst.txt")).unwrap();
    let trace = dramflow::trace_gen::read_trace(std::io::BufReader::new(text)).unwrap();
    let counts = dramflow::count_trace(&trace);
    let plans = column(&read(d, "o/plans_toy_baseline.csv"), "accesses");
    assert_eq!(counts.total().to_string(), plans[0]);
    assert_eq!(counts.requests_nonburst, counts.total());
}

#[test]
fn every_report_row_carries_its_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    dramflow(d, &["compare", "--net", "toy", "--out", "o"]);
    for name in [
        "compare_toy_burst.csv",
        "stats_toy_romanet_burst.csv",
        "stats_toy_baseline_burst.csv",
    ] {
        let hashes = column(&read(d, &format!("o/{name}")), "config_hash");
        assert!(!hashes.is_empty());
        assert!(
            hashes.iter().all(|h| h.len() == 16 && h.chars().all(|c| c.is_ascii_hexdigit())),
            "{name}"
        );
    }
    let report = String::from_utf8(dramflow(d, &["report", "--out", "o"]).stdout).unwrap();
    assert!(report.contains("conflicts_misses"));
    assert_eq!(report, read(d, "o/report.txt"));
}

#[test]
fn changing_hardware_changes_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let hw = dramflow::HardwareConfig::bundled().to_json().replace("\"cl\": 11", "\"cl\": 13");
    std::fs::write(d.join("hw.json"), hw).unwrap();
    dramflow(d, &["sim", "--net", "toy", "--mode", "romanet", "--out", "a"]);
    dramflow(d, &["sim", "--net", "toy", "--mode", "romanet", "--hw", "hw.json", "--out", "b"]);
    let a = column(&read(d, "a/stats_toy_romanet_burst.csv"), "config_hash");
    let b = column(&read(d, "b/stats_toy_romanet_burst.csv"), "config_hash");
    assert_ne!(a[0], b[0]);
    let cycles = |dir: &str| column(&read(d, &format!("{dir}/stats_toy_romanet_burst.csv")), "total_cycles");
    assert!(cycles("b").last().unwrap().parse::<u64>().unwrap() > cycles("a").last().unwrap().parse::<u64>().unwrap());
}

#[test]
fn sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    dramflow(d, &["sweep", "--net", "toy", "--axis", "bl", "--values", "1,8", "--out", "o"]);
    let csv = read(d, "o/sweep_toy_bl.csv");
    let req: Vec<u64> = column(&csv, "requests").iter().map(|v| v.parse().unwrap()).collect();
    // rows: bl=1 romanet, bl=1 baseline, bl=8 romanet, bl=8 baseline
    let ratio = req[0] as f64 / req[2] as f64;
    assert!((7.0..=8.0).contains(&ratio), "{ratio}");

    dramflow(
        d,
        &[
            "sweep",
            "--net",
            "alexnet",
            "--mode",
            "romanet",
            "--axis",
            "buffer",
            "--values",
            "16,32,64,128,256",
            "--out",
            "o",
        ],
    );
    let csv = read(d, "o/sweep_alexnet_buffer.csv");
    let modes = column(&csv, "mode");
    let acc: Vec<u64> = column(&csv, "accesses").iter().map(|v| v.parse().unwrap()).collect();
    for mode in ["romanet", "baseline"] {
        let series: Vec<u64> = acc.iter().zip(&modes).filter(|(_, m)| *m == mode).map(|(a, _)| *a).collect();
        assert_eq!(series.len(), 5);
        assert!(series.windows(2).all(|w| w[1] <= w[0]), "{mode}: {series:?}");
    }

    dramflow(d, &["sweep", "--net", "toy", "--axis", "step", "--values", "1,2,4,8", "--out", "o"]);
    let csv = read(d, "o/sweep_toy_step.csv");
    let modes = column(&csv, "mode");
    let acc: Vec<u64> = column(&csv, "accesses").iter().map(|v| v.parse().unwrap()).collect();
    let romanet: Vec<u64> = acc.iter().zip(&modes).filter(|(_, m)| *m == "romanet").map(|(a, _)| *a).collect();
    assert!(romanet.windows(2).all(|w| w[0] <= w[1]), "{romanet:?}");
}

#[test]
fn errors_exit_nonzero_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_dramflow"))
            .current_dir(dir.path())
            .args(args)
            .output()
            .unwrap()
    };

    let out = run(&["dse", "--net", "no/such/network.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    std::fs::write(dir.path().join("bad.json"), "{\"layers\": [{\"name\": \"x\"}]}").unwrap();
    let out = run(&["dse", "--net", "bad.json"]);
    assert!(!out.status.success());

    let out = run(&["report", "--out", "empty"]);
    assert!(!out.status.success());

    let out = run(&["dse", "--steps", "0"]);
    assert!(!out.status.success());
}
