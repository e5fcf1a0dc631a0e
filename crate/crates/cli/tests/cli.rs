use std::path::Path;
use std::process::{Command, Output};

fn pnc_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pnc-sim")).args(args).output().expect("binary runs")
}

const SMALL: &[&str] = &["--frames", "20", "--len", "16", "--snr", "0,4", "--delta", "0.3,0.6"];

fn run_to(path: &Path, extra: &[&str]) -> Output {
    let mut args = SMALL.to_vec();
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", path.to_str().unwrap()]);
    pnc_sim(&args)
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert!(run_to(&p1, &["--seed", "5"]).status.success());
    assert!(run_to(&p2, &["--seed", "5", "--threads", "3"]).status.success());
    let (a, b) = (std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# pnc-sim "));
    assert_eq!(text.lines().count(), 2 + 4);
    assert!(!text.contains('\r'));
}

#[test]
fn sequential_flag_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert!(run_to(&p1, &["--frontend", "evenodd"]).status.success());
    assert!(run_to(&p2, &["--frontend", "evenodd", "--sequential"]).status.success());
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

#[test]
fn stdout_matches_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.csv");
    assert!(run_to(&p, &[]).status.success());
    let out = pnc_sim(SMALL);
    assert!(out.status.success());
    assert_eq!(out.stdout, std::fs::read(&p).unwrap());
}

#[test]
fn aligned_symbols_are_unsupported() {
    let out = pnc_sim(&["--delta", "0", "--frames", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta = 0"));
    let out = pnc_sim(&["--tau-a", "0.4", "--tau-b", "0.4", "--frames", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn even_odd_needs_rectangular_pulses() {
    let out = pnc_sim(&["--frontend", "evenodd", "--pulse", "half-sine", "--frames", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["--bogus"][..],
        &["--mod", "8psk"],
        &["--pulse", "gaussian"],
        &["--decoder", "sova"],
        &["--snr", "3:1:1"],
        &["--delta", "1.5"],
        &["--ha", "1"],
        &["--frames", "0"],
        &["--delta", "0.5", "--tau-a", "0.1", "--tau-b", "0.2"],
        &["--tau-a", "0.1"],
    ] {
        let out = pnc_sim(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_to(&dir.path().join("missing").join("x.csv"), &[]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn timing_fills_the_throughput_column() {
    let out = pnc_sim(&["--frames", "4", "--len", "8", "--snr", "3", "--timing"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(2).unwrap();
    let tp: f64 = row.split(',').nth(9).unwrap().parse().unwrap();
    assert!(tp > 0.0);
}

#[test]
fn high_snr_is_error_free() {
    let out = pnc_sim(&["--frames", "10", "--len", "32", "--snr", "60", "--mod", "qpsk", "--hb", "0.8,1.1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(&fields[6..9], &["0", "0", "0"]);
}
