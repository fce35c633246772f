#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixture_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

/// Runs the binary with `args`, stripping any inherited worker setting.
pub fn elm_meta(args: &[&str]) -> Output {
    elm_meta_env(args, &[])
}

pub fn elm_meta_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_elm-meta"));
    cmd.args(args).env_remove("ELMMETA_WORKERS").env("RUST_LOG", "warn");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Pipeline over `corpus` with a small sweep; panics unless it succeeds.
pub fn small_pipeline(corpus: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec![
        "pipeline",
        "--corpus",
        s(corpus),
        "--out-dir",
        s(out),
        "--n-max",
        "40",
        "--repetitions",
        "3",
        "--seed",
        "17",
    ];
    args.extend_from_slice(extra);
    let o = elm_meta(&args);
    assert_eq!(code(&o), 0, "pipeline failed: {}", stderr(&o));
}

pub fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}
