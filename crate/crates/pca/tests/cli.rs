use std::path::Path;
use std::process::{Command, Output};

fn pca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pca")).args(args).env_remove("PCA_THREADS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const EXAMPLE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/dv-vs-critical.cfg");

#[test]
fn help_exits_zero_everywhere() {
    for sub in [&[][..], &["verify"], &["scan"], &["rho"], &["gap"], &["nu-table"], &["dv"]] {
        let mut args = sub.to_vec();
        args.push("--help");
        let o = pca(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        let text = stdout(&o);
        assert!(text.contains("--threads") && text.contains("--seed"), "{args:?}");
    }
}

#[test]
fn every_flag_is_documented() {
    for sub in ["rho", "gap", "nu-table", "dv", "scan", "verify"] {
        let text = stdout(&pca(&[sub, "--help"]));
        let lines: Vec<&str> = text.lines().collect();
        for (i, line) in lines.iter().enumerate() {
            let trimmed = line.trim();
            if !trimmed.starts_with("--") || trimmed.starts_with("--help") {
                continue;
            }
            // short layout puts the text after the flag, long layout on the next line
            let same_line = trimmed.split_once("  ").is_some_and(|(_, d)| !d.trim().is_empty());
            let next_line = lines.get(i + 1).is_some_and(|n| !n.trim().is_empty() && !n.trim().starts_with('-'));
            assert!(same_line || next_line, "{sub}: undocumented {trimmed:?}");
        }
    }
}

#[test]
fn verify_fast_passes_and_bad_level_is_usage() {
    let o = pca(&["verify", "fast"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS detailed_balance"));
    assert_eq!(pca(&["verify", "medium"]).status.code(), Some(2));
}

#[test]
fn corrupted_baseline_fails_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("baseline.txt");
    std::fs::write(&path, "gap_a beta=0.2 L=0 = 1.32807\x00garbage\n").unwrap();
    let o = pca(&["verify", "--baseline", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL baseline: corrupted baseline"));
    std::fs::write(&path, "gap_a beta=0.2 L=0 = 1.5\n").unwrap();
    let o = pca(&["verify", "--baseline", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL baseline gap_a beta=0.2 L=0"));
}

#[test]
fn gap_front_end() {
    let o = pca(&["gap", "--beta", "0.2", "--L", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let value: f64 = text.split("value=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!((value - 1.328074).abs() < 5e-7, "{text}");
    let o = pca(&["gap", "--beta", "0.2", "--L", "5", "--mode", "exact"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn rho_front_end() {
    let o = pca(&["rho", "--beta", "0", "--n", "3", "--samples", "500"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "3");
    assert_eq!(row[1].parse::<f64>().unwrap(), 0.0);
    let a = stdout(&pca(&["rho", "--beta", "0.3", "--n", "1,2", "--samples", "2000", "--seed", "5", "--threads", "1"]));
    let b = stdout(&pca(&["rho", "--beta", "0.3", "--n", "1,2", "--samples", "2000", "--seed", "5", "--threads", "3"]));
    let c = stdout(&pca(&["rho", "--beta", "0.3", "--n", "1,2", "--samples", "2000", "--seed", "6"]));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn nu_table_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("t.bin");
    let csv = dir.path().join("t.csv");
    let o = pca(&["nu-table", "--beta", "0.3", "--square", "2", "--boundary", "minus", "--out", bin.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (header, probs) = pca::table_io::decode(&std::fs::read(&bin).unwrap()).unwrap();
    assert_eq!(probs.len(), 16);
    assert_eq!(header.dim, 2);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 17);
    // the all-minus state is the likeliest under a minus boundary
    let best = probs.iter().cloned().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    assert_eq!(best, 0);
}

#[test]
fn dv_prints_threshold() {
    let text = stdout(&pca(&["dv", "--beta", "0.2"]));
    assert!(text.contains("dv_sum beta=0.2"));
    let t: f64 = text.split("threshold=").nth(1).unwrap().trim().parse().unwrap();
    assert!((t - 0.274653).abs() < 1e-4);
    assert!(stdout(&pca(&["dv", "--dim", "1"])).contains("threshold=none"));
}

fn scan_into(dir: &Path, threads: &str, extra: &[&str]) -> Output {
    let mut args = vec!["scan", EXAMPLE, "--out", dir.to_str().unwrap(), "--threads", threads, "--set", "scan.samples=3000", "--set", "scan.n=1,2,4"];
    args.extend_from_slice(extra);
    pca(&args)
}

#[test]
fn scan_writes_reports_and_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let o = scan_into(dir.path(), "2", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["scan.csv", "scan_summary.csv", "scan.jsonl"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let jsonl = std::fs::read_to_string(dir.path().join("scan.jsonl")).unwrap();
    for line in jsonl.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
    assert_eq!(scan_into(dir.path(), "2", &["--set", "scan.beta="]).status.code(), Some(2));
    assert_eq!(scan_into(dir.path(), "2", &["--set", "scan.bogus=1"]).status.code(), Some(2));
    assert_eq!(pca(&["scan", "/nonexistent.cfg"]).status.code(), Some(2));
}

#[test]
fn scan_cell_errors_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    // L = 3 needs 25 sites, beyond exact enumeration
    let o = scan_into(dir.path(), "1", &["--set", "scan.L=0,3", "--set", "scan.n=1"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert!(csv.contains("error:budget"), "{csv}");
}
