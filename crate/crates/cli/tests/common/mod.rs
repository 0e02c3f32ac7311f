//! Golden-file runner shared by the CLI tests and the acceptance suite.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn tests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

/// Runs the binary from the spec corpus directory.
pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fanning")).args(args).current_dir(tests_dir().join("data")).output().expect("binary runs")
}

pub struct Case {
    pub name: String,
    pub args: Vec<String>,
    pub exit: i32,
    pub ext: String,
}

pub fn cases() -> Vec<Case> {
    let text = std::fs::read_to_string(tests_dir().join("golden/cases.json")).expect("case list");
    let list: Vec<serde_json::Value> = serde_json::from_str(&text).expect("case list parses");
    list.into_iter()
        .map(|c| Case {
            name: c["name"].as_str().expect("name").to_string(),
            args: c["args"].as_array().expect("args").iter().map(|a| a.as_str().expect("string arg").to_string()).collect(),
            exit: c["exit"].as_i64().expect("exit") as i32,
            ext: c["ext"].as_str().expect("ext").to_string(),
        })
        .collect()
}

/// Compares one case against its golden file; with `UPDATE_GOLDEN=1` rewrites the file instead.
pub fn check(case: &Case) -> Result<(), String> {
    let args: Vec<&str> = case.args.iter().map(String::as_str).collect();
    let out = run(&args);
    let code = out.status.code().unwrap_or(-1);
    if code != case.exit {
        return Err(format!("{}: exit {code}, expected {}; stderr: {}", case.name, case.exit, String::from_utf8_lossy(&out.stderr)));
    }
    let path = tests_dir().join("golden").join(format!("{}.{}", case.name, case.ext));
    if std::env::var("UPDATE_GOLDEN").is_ok_and(|v| v == "1") {
        std::fs::write(&path, &out.stdout).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected != out.stdout {
        return Err(format!("{}: output differs from {}", case.name, path.display()));
    }
    Ok(())
}
