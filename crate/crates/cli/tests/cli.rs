//! Drives the built binary end to end through temp files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_snn-dbscan"))
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/example_6x6.events")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().expect("spawn");
    assert!(
        out.status.success(),
        "{args:?} failed: {}{}",
        stdout(&out),
        String::from_utf8_lossy(&out.stderr)
    );
    stdout(&out)
}

fn exit_code(args: &[&str]) -> i32 {
    bin().args(args)
        .output()
        .expect("spawn")
        .status
        .code()
        .expect("exit code")
}

#[test]
fn build_reports_published_sizes() {
    let out = run_ok(&[
        "build", "--builder", "flat", "--rows", "10", "--cols", "10", "--epsilon", "2",
        "--minpts", "4",
    ]);
    assert!(out.contains("500 neurons, 4172 synapses"), "{out}");

    // Streaming networks are width-independent; no --cols needed.
    let out = run_ok(&[
        "build", "--builder", "systolic", "--rows", "260", "--epsilon", "4", "--minpts", "4",
    ]);
    assert!(out.contains("5460 neurons, 46700 synapses"), "{out}");
}

#[test]
fn build_usage_errors_exit_2() {
    assert_eq!(
        exit_code(&[
            "build", "--builder", "flat", "--rows", "3", "--cols", "3", "--epsilon", "1",
            "--minpts", "0",
        ]),
        2
    );
    // Flat networks need a width.
    assert_eq!(
        exit_code(&["build", "--builder", "flat", "--rows", "3", "--epsilon", "1", "--minpts", "2"]),
        2
    );
}

#[test]
fn build_partitioned_part_reports_interior_size() {
    let out = run_ok(&[
        "build", "--builder", "systolic", "--rows", "260", "--cols", "346", "--epsilon", "4",
        "--minpts", "4", "--partition", "26", "--policy", "delete", "--part", "4",
    ]);
    assert_eq!(out.lines().filter(|l| l.starts_with("part ")).count(), 10);
    assert!(out.contains("770 neurons, 5554 synapses"), "{out}");
}

#[test]
fn run_matches_classify_for_both_builders() {
    let dir = tempfile::tempdir().expect("tempdir");
    let flat = dir.path().join("flat.net");
    let sys = dir.path().join("sys.net");
    let frame = fixture();
    let frame = frame.to_str().unwrap();

    run_ok(&[
        "build", "--builder", "flat", "--rows", "6", "--cols", "6", "--epsilon", "1",
        "--minpts", "4", "-o", flat.to_str().unwrap(),
    ]);
    run_ok(&[
        "build", "--builder", "systolic", "--rows", "6", "--epsilon", "1", "--minpts", "4",
        "-o", sys.to_str().unwrap(),
    ]);

    let oracle = run_ok(&["classify", frame, "--epsilon", "1", "--minpts", "4"]);
    assert!(oracle.contains(".CC..."), "{oracle}");

    let flat_out = run_ok(&["run", flat.to_str().unwrap(), frame]);
    assert_eq!(flat_out, oracle);

    let sys_out = run_ok(&["run", sys.to_str().unwrap(), frame]);
    assert_eq!(sys_out, oracle);
}

#[test]
fn streamed_run_emits_one_grid_per_frame() {
    let dir = tempfile::tempdir().expect("tempdir");
    let sys = dir.path().join("sys.net");
    let frame = fixture();
    let frame = frame.to_str().unwrap();

    run_ok(&[
        "build", "--builder", "systolic", "--rows", "6", "--epsilon", "1", "--minpts", "4",
        "-o", sys.to_str().unwrap(),
    ]);
    let oracle = run_ok(&["classify", frame, "--epsilon", "1", "--minpts", "4"]);
    let streamed = run_ok(&["run", sys.to_str().unwrap(), frame, frame, "--stream"]);
    assert_eq!(streamed, format!("{oracle}\n{oracle}"));

    // Two frames without a multi-frame mode is a usage error.
    assert_eq!(exit_code(&["run", sys.to_str().unwrap(), frame, frame]), 2);
    // Pipelining is the grid-shaped network's mode.
    assert_eq!(
        exit_code(&["run", sys.to_str().unwrap(), frame, frame, "--pipeline"]),
        2
    );
}

#[test]
fn verify_passes_and_fault_injection_fails() {
    let pass = &[
        "verify", "--builder", "flat", "--rows", "3", "--cols", "3", "--epsilon", "1",
        "--minpts", "3", "--exhaustive",
    ];
    let out = bin().args(pass).output().expect("spawn");
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("PASS flat 3 3 1 3 512 0"), "{}", stdout(&out));

    let fail = &[
        "verify", "--builder", "flat", "--rows", "3", "--cols", "3", "--epsilon", "1",
        "--minpts", "3", "--exhaustive", "--inject-fault",
    ];
    let out = bin().args(fail).output().expect("spawn");
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"), "{}", stdout(&out));
}

#[test]
fn verify_covers_partial_builders() {
    let out = run_ok(&[
        "verify", "--builder", "partial-flat", "--rows", "6", "--cols", "6", "--epsilon", "1",
        "--minpts", "4", "--random", "5", "--seed", "7", "--partition", "3,3", "--policy",
        "retain",
    ]);
    assert!(out.contains("PASS partial-flat 6 6 1 4 5 0"), "{out}");
}

#[test]
fn bench_reproduces_published_numbers() {
    let out = run_ok(&[
        "bench", "--builder", "flat", "--rows", "10", "--cols", "10", "--epsilon", "2",
        "--minpts", "4", "--deploy", "100e6,2.5e-6,10",
    ]);
    for needle in [
        "neurons                500",
        "synapses               4172",
        "max fan-out            26",
        "compute time           50ns",
        "input time             25us",
        "rate                   40kHz",
        "bottleneck             I/O",
    ] {
        assert!(out.contains(needle), "missing {needle:?} in:\n{out}");
    }

    let out = run_ok(&[
        "bench", "--builder", "systolic", "--rows", "260", "--cols", "346", "--epsilon", "4",
        "--minpts", "4", "--deploy", "100e6,2.5e-6,0",
    ]);
    assert!(out.contains("compute time           3.58us"), "{out}");
    assert!(out.contains("bottleneck             compute"), "{out}");
}

#[test]
fn render_strips_the_header() {
    let dir = tempfile::tempdir().expect("tempdir");
    let labels = dir.path().join("fixture.labels");
    let frame = fixture();

    let oracle = run_ok(&[
        "classify", frame.to_str().unwrap(), "--epsilon", "1", "--minpts", "4",
    ]);
    std::fs::write(&labels, &oracle).expect("write labels");

    let rendered = run_ok(&["render", labels.to_str().unwrap()]);
    let body: String = oracle.lines().skip(1).map(|l| format!("{l}\n")).collect();
    assert_eq!(rendered, body);
}
