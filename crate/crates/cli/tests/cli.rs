mod common;

use common::{cases, check, run};

#[test]
fn golden_outputs_match() {
    let failures: Vec<String> = cases().iter().filter_map(|c| check(c).err()).collect();
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn golden_corpus_covers_every_subcommand() {
    let commands: std::collections::BTreeSet<String> = cases().iter().map(|c| c.args[0].clone()).collect();
    for c in ["invariants", "congruent", "classify", "lagrangian", "normalize", "oracle"] {
        assert!(commands.contains(c), "no golden case for {c}");
    }
}

#[test]
fn non_fanning_curve_exits_3_and_names_the_point() {
    let out = run(&["invariants", "not_fanning.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t = 0"));
}

#[test]
fn parse_errors_exit_2() {
    assert_eq!(run(&["invariants", "missing.json"]).status.code(), Some(2));
    assert_eq!(run(&["invariants", "oscillator.json", "--window", "1:0"]).status.code(), Some(2));
    assert_eq!(run(&["invariants", "oscillator.json", "--window", "-2:0"]).status.code(), Some(2));
    assert_eq!(run(&["invariants", "oscillator.json", "--samples", "1"]).status.code(), Some(2));
    assert_eq!(run(&["congruent", "oscillator.json", "orbit.json"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn symplectic_mode_rejects_non_lagrangian_curves() {
    assert_eq!(run(&["congruent", "orbit.json", "orbit_transformed.json", "--mode", "symplectic"]).status.code(), Some(5));
    assert_eq!(run(&["lagrangian", "orbit.json"]).status.code(), Some(5));
}

#[test]
fn oscillator_schwarzian_column_is_two() {
    let out = run(&["invariants", "oscillator.json", "--samples", "5"]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let col = doc["columns"].as_array().unwrap().iter().position(|c| c == "S_0_0").unwrap();
    for row in doc["rows"].as_array().unwrap() {
        assert!((row[col].as_f64().unwrap() - 2.0).abs() <= 1e-9);
    }
}

#[test]
fn line_jacobi_columns_vanish() {
    let out = run(&["invariants", "line.json", "--samples", "5"]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let cols: Vec<usize> =
        doc["columns"].as_array().unwrap().iter().enumerate().filter(|(_, c)| c.as_str().unwrap().starts_with("K_")).map(|(i, _)| i).collect();
    assert!(!cols.is_empty());
    for row in doc["rows"].as_array().unwrap() {
        assert!(cols.iter().all(|&i| row[i].as_f64().unwrap().abs() <= 1e-12));
    }
}

#[test]
fn csv_and_json_agree() {
    let json = run(&["invariants", "orbit.json", "--samples", "3"]);
    let csv = run(&["invariants", "orbit.json", "--samples", "3", "--format", "csv"]);
    let doc: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let text = String::from_utf8(csv.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), doc["columns"].as_array().unwrap().len());
    for (line, row) in lines.zip(doc["rows"].as_array().unwrap()) {
        let values: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let expected: Vec<f64> = row.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert_eq!(values, expected);
    }
}

#[test]
fn output_file_matches_standard_output() {
    let dir = std::env::temp_dir().join(format!("fanning-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("classify.json");
    let to_file = run(&["classify", "line.json", "--out", path.to_str().unwrap()]);
    assert_eq!(to_file.status.code(), Some(0));
    assert!(to_file.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), run(&["classify", "line.json"]).stdout);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exponential_orbit_is_weakly_parallel() {
    let doc: serde_json::Value = serde_json::from_slice(&run(&["classify", "orbit.json"]).stdout).unwrap();
    assert_eq!(doc["weakly_parallel"]["value"], true);
}

#[test]
fn oscillator_lagrangian_report_passes() {
    let doc: serde_json::Value = serde_json::from_slice(&run(&["lagrangian", "oscillator.json"]).stdout).unwrap();
    assert_eq!(doc["signature"]["index"], 0);
    assert_eq!(doc["pass"], true);
}
