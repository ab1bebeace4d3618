use std::path::Path;
use std::process::{Command, Output};

use elicit::graph::{ConstraintGraph, Degree, Edge, ElementId};
use serde_json::{json, Value};

fn elicit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elicit")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = elicit(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

/// Hidden order over 65 ids; `shift` rotates the levels.
fn write_oracle(path: &str, shift: usize) {
    let mut ids: Vec<String> = (0..65).map(|i| format!("v{i:02}")).collect();
    ids.rotate_left(shift);
    let levels: Vec<Vec<String>> = ids.chunks(2).map(|c| c.to_vec()).collect();
    std::fs::write(path, json!({"levels": levels, "muchGap": 4}).to_string()).unwrap();
}

#[test]
fn encode_replay_unify_compare() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (i, shift) in [0, 0, 4].iter().enumerate() {
        write_oracle(&p(d, &format!("o{i}.json")), *shift);
        ok(&[
            "encode",
            "--oracle",
            &p(d, &format!("o{i}.json")),
            "--seed",
            &i.to_string(),
            "-o",
            &p(d, &format!("g{i}.json")),
            "--log",
            &p(d, &format!("l{i}.json")),
        ]);
    }
    let replayed = ok(&["replay", &p(d, "l0.json")]);
    assert_eq!(replayed, std::fs::read_to_string(p(d, "g0.json")).unwrap());

    ok(&[
        "unify",
        &p(d, "g0.json"),
        &p(d, "g1.json"),
        &p(d, "g2.json"),
        "-o",
        &p(d, "u.json"),
        "--report",
        &p(d, "r.json"),
    ]);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(p(d, "r.json")).unwrap()).unwrap();
    let sum = ["applied", "disputed", "contradictory"]
        .iter()
        .map(|k| report[k].as_u64().unwrap())
        .sum::<u64>();
    assert_eq!(sum, 2080);

    let csv = ok(&["compare", &p(d, "g0.json"), &p(d, "g1.json"), &p(d, "g2.json")]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "a,b,total,differing,opposing,adjacent_swaps,footrule");
    assert_eq!(lines.len(), 4);
    let row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&row[2..5], ["2080", "0", "0"]);

    let text = ok(&["prioritize", &p(d, "u.json")]);
    assert!(text.starts_with('['));
}

#[test]
fn score_chain_prints_thirteen_values() {
    let dir = tempfile::tempdir().unwrap();
    let names: Vec<String> = (0..13).map(|i| format!("c{i:02}")).collect();
    let edges = names
        .windows(2)
        .map(|w| Edge::new(w[0].as_str(), w[1].as_str(), Degree::Greater))
        .collect();
    let g = ConstraintGraph::new("t", names.iter().map(|n| ElementId::from(n.as_str())), edges, "").unwrap();
    let path = p(dir.path(), "chain.json");
    std::fs::write(&path, g.to_json()).unwrap();
    let out = ok(&[
        "score", &path, "--d1", "0.5", "--d2", "1.5", "--min", "0", "--max", "10", "--decimals", "1",
    ]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let chosen: Vec<f64> = v["perSet"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["chosen"].as_f64().unwrap())
        .collect();
    let want: Vec<f64> = (0..13).map(|i| 2.0 + 0.5 * i as f64).collect();
    assert_eq!(chosen, want);

    let curve = ok(&["feasibility", &path, "--step", "0.01"]);
    assert_eq!(curve.lines().next(), Some("d1,d2min,d2max"));
    assert_eq!(curve.lines().count(), 1 + 83);

    // infeasible: twelve edges of 1.0 in a range of 10
    let out = elicit(&["score", &path, "--d1", "1", "--d2", "1"]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("no rational scores"));
}

#[test]
fn errors_are_json_on_stderr() {
    let out = elicit(&["replay", "/definitely/not/here.json"]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("reading"));

    let dir = tempfile::tempdir().unwrap();
    let path = p(dir.path(), "g.json");
    std::fs::write(&path, r#"{"formatVersion": 2, "catalogRef": "x", "nodes": [], "edges": [], "provenance": ""}"#)
        .unwrap();
    let out = elicit(&["prioritize", &path]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("version"));
}

#[test]
fn catalogs_and_baseline() {
    let all = ok(&["cvss-catalog"]);
    let v: Value = serde_json::from_str(&all).unwrap();
    assert_eq!(v["elements"].as_array().unwrap().len(), 2496);

    let dir = tempfile::tempdir().unwrap();
    let freq = p(dir.path(), "freq.csv");
    std::fs::write(
        &freq,
        "vector,count\nAV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H,90\nAV:L/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H,10\n",
    )
    .unwrap();
    let top = ok(&["cvss-catalog", "--frequency", &freq, "--coverage", "0.9"]);
    let v: Value = serde_json::from_str(&top).unwrap();
    assert_eq!(v["elements"].as_array().unwrap().len(), 1);

    let controls = p(dir.path(), "controls.csv");
    std::fs::write(&controls, "id,title,description,level\nA-1,x,,subcategory\nA-1,y,,subcategory\n").unwrap();
    let out = elicit(&["control-catalog", &controls]);
    assert!(!out.status.success());

    let b: Value = serde_json::from_str(&ok(&["baseline", "--n", "2", "--samples", "4000"])).unwrap();
    assert!((b["meanAdjacentSwaps"].as_f64().unwrap() - 0.5).abs() < 0.05);
}
