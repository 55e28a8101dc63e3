#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(name: &str) -> String {
    fixtures().join(name).to_string_lossy().into_owned()
}

/// Runs the binary and returns exit code, stdout and stderr.
pub fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_multinorm")).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).expect("utf-8 stdout"),
        String::from_utf8(out.stderr).expect("utf-8 stderr"),
    )
}

/// `(golden file, subcommand and flags, config fixture, expected exit code)`.
pub const GOLDEN: &[(&str, &str, Option<&str>, i32)] = &[
    ("repro.json", "repro", None, 0),
    ("repro.txt", "repro --format text", None, 0),
    ("ex1_measure.json", "measure", Some("ex1.json"), 0),
    ("ex1_beta.json", "beta", Some("ex1.json"), 0),
    ("ex1_certify.json", "certify", Some("ex1.json"), 0),
    ("ex1_quoted_certify.json", "certify", Some("ex1_quoted.json"), 0),
    ("ex1_simulate.json", "simulate", Some("ex1.json"), 0),
    ("ex2_measure.json", "measure", Some("ex2.json"), 0),
    ("ex2_certify.json", "certify", Some("ex2.json"), 2),
    ("ex2_quoted_certify.json", "certify", Some("ex2_quoted.json"), 0),
    ("chua_measure.json", "measure", Some("chua.json"), 0),
    ("certify_stable.json", "certify", Some("certify_stable.json"), 0),
    ("certify_unstable.json", "certify", Some("certify_unstable.json"), 2),
    ("certify_general.json", "certify", Some("certify_general.json"), 0),
    ("sync.json", "sync", Some("sync.json"), 0),
    ("sync_quoted.json", "sync", Some("sync_quoted.json"), 0),
];

/// Output of one golden entry. Trajectory CSVs go to a scratch file so that
/// stdout carries the JSON summary.
pub fn golden_output(cmd: &str, config: Option<&str>) -> (i32, String) {
    let mut args: Vec<String> = cmd.split_whitespace().map(String::from).collect();
    if let Some(c) = config {
        args.extend(["--config".to_string(), fixture(c)]);
    }
    if cmd == "simulate" {
        let csv = std::env::temp_dir().join(format!("multinorm-golden-{}.csv", std::process::id()));
        args.extend(["--out".to_string(), csv.to_string_lossy().into_owned()]);
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let (code, stdout, _) = run(&refs);
    (code, stdout)
}
