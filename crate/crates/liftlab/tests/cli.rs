//! End-to-end checks of the `liftlab` binary: pipeline, exit codes, and
//! byte-level determinism of reports.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_liftlab"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn pipeline_corpus_solve_verify_analyze() {
    let dir = tempdir("pipeline");
    let out = run_in(
        &dir,
        &[
            "corpus",
            "--kind",
            "random",
            "--count",
            "2",
            "--dims",
            "2,3,2",
            "--seed",
            "7",
            "--out-dir",
            "corpus",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(dir.join("corpus/random_000.json").exists());

    let out = run_in(&dir, &["validate", "corpus/random_000.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("\"pass\": true"));

    let out = run_in(
        &dir,
        &[
            "solve",
            "corpus/random_000.json",
            "--central",
            "--out",
            "ip.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0));

    let out = run_in(&dir, &["verify", "corpus/random_000.json", "ip.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("\"pass\": true"));

    let out = run_in(&dir, &["analyze", "corpus/random_000.json", "ip.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("\"uniqueness\""));
    assert!(stdout(&out).contains("\"proper_param\""));

    let out = run_in(
        &dir,
        &["collide", "corpus/random_000.json", "--params", "5"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("\"collisions\": 0"));
}

#[test]
fn exit_code_contract() {
    let dir = tempdir("exit_codes");

    // 2: missing file.
    let out = run_in(&dir, &["validate", "nope.json"]);
    assert_eq!(out.status.code(), Some(2));

    // 2: malformed JSON.
    std::fs::write(dir.join("bad.json"), "{ not json").unwrap();
    let out = run_in(&dir, &["validate", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));

    // 2: clap usage error.
    let out = run_in(&dir, &["corpus", "--kind", "bogus", "--out-dir", "x"]);
    assert_eq!(out.status.code(), Some(2));

    // 1: well-formed but invalid data set (Q = 0, R = I violates the Gram
    // inequality).
    let invalid = r#"{
  "dims": { "H0": 1, "H": 1, "Hp": 1 },
  "A": { "rows": 1, "cols": 1, "data": [[0.0, 0.0]] },
  "Tp": { "rows": 1, "cols": 1, "data": [[0.0, 0.0]] },
  "R": { "rows": 1, "cols": 1, "data": [[1.0, 0.0]] },
  "Q": { "rows": 1, "cols": 1, "data": [[0.0, 0.0]] }
}
"#;
    std::fs::write(dir.join("invalid.json"), invalid).unwrap();
    let out = run_in(&dir, &["validate", "invalid.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("\"pass\": false"));

    // 0: identities suite on healthy trials.
    let out = run_in(&dir, &["identities", "--suite", "all", "--trials", "25"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn reports_are_bit_identical_across_runs() {
    let dir = tempdir("determinism");
    let args = [
        "corpus",
        "--kind",
        "classical",
        "--count",
        "1",
        "--dims",
        "3",
        "--seed",
        "5",
        "--out-dir",
        "c",
    ];
    assert_eq!(run_in(&dir, &args).status.code(), Some(0));
    let ds_bytes = std::fs::read(dir.join("c/classical_000.json")).unwrap();

    let dir2 = tempdir("determinism2");
    assert_eq!(run_in(&dir2, &args).status.code(), Some(0));
    assert_eq!(
        ds_bytes,
        std::fs::read(dir2.join("c/classical_000.json")).unwrap()
    );

    let solve = [
        "solve",
        "c/classical_000.json",
        "--param-seed",
        "9",
        "-N",
        "16",
    ];
    let a = run_in(&dir, &solve);
    let b = run_in(&dir2, &solve);
    assert_eq!(a.stdout, b.stdout);

    let collide = [
        "collide",
        "c/classical_000.json",
        "--params",
        "6",
        "--seed",
        "3",
    ];
    let a = run_in(&dir, &collide);
    let b = run_in(&dir2, &collide);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn solve_output_round_trips_and_env_tol_applies() {
    let dir = tempdir("roundtrip");
    assert_eq!(
        run_in(
            &dir,
            &[
                "corpus",
                "--kind",
                "random",
                "--count",
                "1",
                "--dims",
                "2,3,2",
                "--seed",
                "3",
                "--out-dir",
                "c",
            ],
        )
        .status
        .code(),
        Some(0)
    );
    assert_eq!(
        run_in(
            &dir,
            &[
                "solve",
                "c/random_000.json",
                "--central",
                "--out",
                "ip.json"
            ]
        )
        .status
        .code(),
        Some(0)
    );

    // Parse -> serialize must reproduce the file byte for byte: verify with
    // an impossibly tight tolerance flips the exit code, proving LIFTLAB_TOL
    // reaches the checker.
    let out = bin()
        .args(["verify", "c/random_000.json", "ip.json"])
        .env("LIFTLAB_TOL", "1e-30")
        .current_dir(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));

    let out = run_in(&dir, &["verify", "c/random_000.json", "ip.json"]);
    assert_eq!(out.status.code(), Some(0));
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("liftlab_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
