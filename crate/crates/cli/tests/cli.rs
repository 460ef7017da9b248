use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use arbor_core::io::MapDocument;
use tempfile::TempDir;

fn arbor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arbor")).args(args).env_remove("ARBOR_THREADS").output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A 40-node tree: node i hangs off node (i - 1) / 3.
fn tree_json(dir: &TempDir) -> PathBuf {
    let nodes: Vec<String> =
        (0..40).map(|i| format!(r#"{{"id": {i}, "label": "topic {i}", "weight": {}}}"#, 40 - i)).collect();
    let edges: Vec<String> =
        (1..40).map(|i| format!(r#"{{"source": {}, "target": {i}, "weight": 1}}"#, (i - 1) / 3)).collect();
    let path = dir.path().join("tree.json");
    fs::write(&path, format!(r#"{{"nodes": [{}], "edges": [{}]}}"#, nodes.join(","), edges.join(","))).unwrap();
    path
}

/// A ring of 24 nodes with chords, so the hierarchy step has cycles to break.
fn graph_tsv(dir: &TempDir) -> (PathBuf, PathBuf) {
    let nodes: String = (0..24).map(|i| format!("{i}\tnode{i}\t{}\n", 1 + i % 5)).collect();
    let mut edges: String = (0..24).map(|i| format!("{i}\t{}\t1\n", (i + 1) % 24)).collect();
    edges.extend((0..24).step_by(4).map(|i| format!("{i}\t{}\t3\n", (i + 9) % 24)));
    let (n, e) = (dir.path().join("nodes.tsv"), dir.path().join("edges.tsv"));
    fs::write(&n, nodes).unwrap();
    fs::write(&e, edges).unwrap();
    (n, e)
}

fn layout_doc(dir: &TempDir, extra: &[&str]) -> (PathBuf, Output) {
    let input = tree_json(dir);
    let out = dir.path().join("map.json");
    let mut args = vec!["layout", p(&input), "-o", p(&out)];
    args.extend_from_slice(extra);
    let output = arbor(&args);
    (out, output)
}

#[test]
fn layout_writes_a_valid_document() {
    let dir = TempDir::new().unwrap();
    let (out, output) = layout_doc(&dir, &["--iters", "10"]);
    assert!(output.status.success(), "{}", text(&output.stderr));
    let doc = MapDocument::from_json(&fs::read_to_string(out).unwrap()).unwrap();
    doc.validate().unwrap();
    assert_eq!(doc.nodes.len(), 40);
    assert_eq!(doc.meta.metrics.crossings, 0);
    assert_eq!(doc.meta.metrics.overlaps, 0);
    assert_eq!(doc.meta.params.iterations, 10);
    assert_eq!(doc.meta.init, "edge-length");
    assert_eq!(doc.meta.mode, "rt");
}

#[test]
fn layout_to_stdout_matches_file_output() {
    let dir = TempDir::new().unwrap();
    let (out, _) = layout_doc(&dir, &["--iters", "5", "--mode", "prt", "--threads", "1"]);
    let input = dir.path().join("tree.json");
    let stdout = arbor(&["layout", p(&input), "--iters", "5", "--mode", "prt", "--threads", "1"]);
    assert!(stdout.status.success());
    assert_eq!(text(&stdout.stdout), fs::read_to_string(out).unwrap());
}

#[test]
fn verbose_prints_one_json_line_per_iteration() {
    let dir = TempDir::new().unwrap();
    let (_, output) = layout_doc(&dir, &["--iters", "4", "--init", "compact", "-v"]);
    assert!(output.status.success());
    let lines: Vec<serde_json::Value> =
        text(&output.stderr).lines().map(|l| serde_json::from_str(l).expect("json line")).collect();
    let improve = lines.iter().filter(|l| l["phase"] == "improve").count();
    assert_eq!(improve, 4);
    assert!(lines.last().unwrap()["del"].is_number());
}

#[test]
fn metrics_recomputes_from_the_document() {
    let dir = TempDir::new().unwrap();
    let (out, _) = layout_doc(&dir, &["--iters", "5"]);
    let doc = MapDocument::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    let output = arbor(&["metrics", p(&out)]);
    assert!(output.status.success());
    let m: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(m["del"].as_f64().unwrap(), doc.meta.metrics.del);
    assert_eq!(m["cm"].as_f64().unwrap(), doc.meta.metrics.cm);

    let csv = arbor(&["metrics", p(&out), "--csv"]);
    let csv = text(&csv.stdout);
    assert!(csv.starts_with("del,cm,runtime_seconds,crossings,overlaps\n"));
    assert!(csv.trim_end().ends_with(",0,0"));
}

#[test]
fn metrics_exit_code_flags_violations() {
    let dir = TempDir::new().unwrap();
    let (out, _) = layout_doc(&dir, &["--iters", "2"]);
    let mut doc = MapDocument::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    // stack two labels on each other
    let (x, y) = (doc.nodes[0].x, doc.nodes[0].y);
    doc.nodes[39].x = x;
    doc.nodes[39].y = y;
    let bad = dir.path().join("bad.json");
    fs::write(&bad, doc.to_json()).unwrap();
    assert_eq!(arbor(&["metrics", p(&bad)]).status.code(), Some(2));
}

#[test]
fn metrics_csv_file_is_written() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("m.csv");
    let (_, output) = layout_doc(&dir, &["--iters", "3", "--metrics-csv", p(&csv)]);
    assert!(output.status.success());
    let lines: Vec<String> = fs::read_to_string(csv).unwrap().lines().map(String::from).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].split(',').count(), 5);
}

#[test]
fn graph_input_gets_the_requested_levels() {
    let dir = TempDir::new().unwrap();
    let (nodes, edges) = graph_tsv(&dir);
    let out = dir.path().join("map.json");
    let output = arbor(&["layout", p(&nodes), "--edges", p(&edges), "--levels", "3", "--iters", "5", "-o", p(&out)]);
    assert!(output.status.success(), "{}", text(&output.stderr));
    let doc = MapDocument::from_json(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(doc.meta.level_count, 3);
    assert_eq!(doc.edges.len(), doc.nodes.len() - 1);
    doc.hierarchy().unwrap().check_nesting().unwrap();
}

#[test]
fn mlst_prints_levels_and_lengths() {
    let dir = TempDir::new().unwrap();
    let (nodes, edges) = graph_tsv(&dir);
    let output = arbor(&["mlst", p(&nodes), "--edges", p(&edges), "--levels", "4", "--l-min", "100"]);
    assert!(output.status.success(), "{}", text(&output.stderr));
    let v: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(v["level_count"], 4);
    let lengths: Vec<f64> =
        v["edges"].as_array().unwrap().iter().map(|e| e["desired_length"].as_f64().unwrap()).collect();
    assert_eq!(lengths.len(), 23);
    assert_eq!(lengths.iter().cloned().fold(f64::INFINITY, f64::min), 100.0);
}

#[test]
fn export_svg_filters_by_level() {
    let dir = TempDir::new().unwrap();
    let (out, _) = layout_doc(&dir, &["--iters", "3", "--levels", "3"]);
    let doc = MapDocument::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    let top = arbor(&["export-svg", p(&out), "--level", "1"]);
    assert!(top.status.success());
    let top = text(&top.stdout);
    let expected = doc.nodes.iter().filter(|n| n.level == 1).count();
    assert_eq!(top.matches("<rect").count(), expected);
    let all = dir.path().join("all.svg");
    assert!(arbor(&["export-svg", p(&out), "--level", "3", "-o", p(&all)]).status.success());
    assert_eq!(fs::read_to_string(all).unwrap().matches("<rect").count(), 40);

    let bad = arbor(&["export-svg", p(&out), "--level", "4"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(text(&bad.stderr).contains("level 4"));
}

#[test]
fn config_shows_defaults_and_overrides() {
    let output = arbor(&["config"]);
    assert!(output.status.success());
    let v: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(v["params"]["collision_strength"], 0.16);
    assert_eq!(v["params"]["iterations"], 50);

    let dir = TempDir::new().unwrap();
    let file = dir.path().join("c.json");
    fs::write(&file, r#"{"init": "compact", "params": {"batch": 128, "seed": 9}}"#).unwrap();
    let output = arbor(&["config", "--config", p(&file), "--seed", "3"]);
    let v: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(v["init"], "compact");
    assert_eq!(v["params"]["batch"], 128);
    assert_eq!(v["params"]["seed"], 3);
}

#[test]
fn bad_inputs_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let missing = arbor(&["layout", "/nonexistent/graph.json"]);
    assert_eq!(missing.status.code(), Some(1));

    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{\"nodes\": [\n{\"id\": 1,}\n]}").unwrap();
    let output = arbor(&["layout", p(&broken)]);
    assert_eq!(output.status.code(), Some(1));
    assert!(text(&output.stderr).contains("line 2"), "{}", text(&output.stderr));

    let output = arbor(&["layout", p(&tree_json(&dir)), "--batch", "0"]);
    assert_eq!(output.status.code(), Some(1));

    let output = arbor(&["layout", p(&tree_json(&dir)), "--root", "999"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn reciprocal_inverts_given_weights() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("g.json");
    fs::write(
        &path,
        r#"{"nodes": [{"id": 0}, {"id": 1}, {"id": 2}],
            "edges": [{"source": 0, "target": 1, "weight": 4}, {"source": 1, "target": 2, "weight": 1}]}"#,
    )
    .unwrap();
    let output = arbor(&["mlst", p(&path), "--edge-lengths", "given", "--reciprocal", "--l-min", "1"]);
    assert!(output.status.success(), "{}", text(&output.stderr));
    let v: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let mut lengths: Vec<f64> =
        v["edges"].as_array().unwrap().iter().map(|e| e["desired_length"].as_f64().unwrap()).collect();
    lengths.sort_by(f64::total_cmp);
    // 1/4 and 1/1, rescaled so the shorter is l_min
    assert_eq!(lengths, vec![1.0, 4.0]);
}

#[test]
fn layouts_are_reproducible_across_runs() {
    let dir = TempDir::new().unwrap();
    let input = tree_json(&dir);
    let run = || text(&arbor(&["layout", p(&input), "--iters", "8", "--seed", "42", "--threads", "1"]).stdout);
    assert_eq!(run(), run());
}
