//! End-to-end runs of the binary: the documented examples, output formats,
//! round trips, and the exit-code contract for usage and input errors.

use std::process::{Command, Output};

use bunkbed_core::exact::{
    bunkbed_gap, event_probability, ConnectivityEvent, EdgeStates, ExactOptions,
};
use bunkbed_core::generate::{generate, ClassKind, ClassSpec};
use bunkbed_core::graph::{build_bunkbed, WeightedGraph};
use bunkbed_core::Prob;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bunkbed"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stdout_text(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn class_graph(spec: &str, p: Prob) -> WeightedGraph {
    generate(&ClassSpec::uniform(ClassKind::parse(spec).unwrap(), p)).unwrap()
}

#[test]
fn gap_example_is_exact_and_matches_the_engine() {
    let out = run(&["gap", "--class", "complete:4", "--p", "1/2", "--v", "a", "--w", "b"]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["engine"], "exact");
    let direct = bunkbed_gap(
        &build_bunkbed(&class_graph("complete:4", Prob::ratio(1, 2))),
        "a",
        "b",
        &ExactOptions::default(),
    )
    .unwrap();
    assert_eq!(doc["gap"], direct.gap.to_string().as_str());
    assert_eq!(doc["same_layer"], direct.same_layer.to_string().as_str());
}

#[test]
fn poly_example_matches_the_single_edge_literal() {
    let out = run(&["poly", "--class", "complete:2", "--v", "a", "--w", "b"]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["degree"], 3);
    assert_eq!(
        doc["coefficients"],
        serde_json::json!(["0", "1", "-2", "1"])
    );
    assert_eq!(doc["verdict"], "nonnegative");
}

#[test]
fn twin_verification_example_passes() {
    let out = run(&[
        "verify-thm2",
        "--class",
        "complete_bipartite:2,2",
        "--p",
        "1/2",
        "--v",
        "V1_0",
        "--w",
        "V1_1",
    ]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["pass"], true);
    assert!(doc["assertions"].as_array().unwrap().len() >= 5);
}

#[test]
fn adjacent_verification_passes_on_the_triangle() {
    let out = run(&[
        "verify-thm1",
        "--class",
        "complete:3",
        "--p",
        "1/4",
        "--v",
        "a",
        "--w",
        "b",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["pass"], true);
}

#[test]
fn generated_graph_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("graph.json");
    let path_str = path.to_str().unwrap();
    let out = run(&[
        "gen",
        "--class",
        "complete_bipartite:2,3",
        "--p",
        "2/5",
        "--out",
        path_str,
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());

    let written = std::fs::read_to_string(&path).unwrap();
    let reloaded = WeightedGraph::from_json_str(&written).unwrap();
    let direct = class_graph("complete_bipartite:2,3", Prob::ratio(2, 5));
    assert_eq!(reloaded.to_json_string(), direct.to_json_string());

    let echoed = run(&["gen", "--graph", path_str]);
    assert_eq!(code(&echoed), 0);
    assert_eq!(stdout_text(&echoed).trim_end(), written.trim_end());

    let by_file = run(&["gap", "--graph", path_str, "--v", "V1_0", "--w", "V2_0"]);
    let by_class = run(&[
        "gap",
        "--class",
        "complete_bipartite:2,3",
        "--p",
        "2/5",
        "--v",
        "V1_0",
        "--w",
        "V2_0",
    ]);
    assert_eq!(stdout_json(&by_file)["gap"], stdout_json(&by_class)["gap"]);
}

#[test]
fn exact_event_agrees_with_the_library() {
    let out = run(&[
        "exact",
        "--class",
        "cycle:4",
        "--p",
        "1/2",
        "--connect",
        "c0,c2",
        "--separate",
        "c1,c3",
    ]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    let direct = event_probability(
        &class_graph("cycle:4", Prob::ratio(1, 2)),
        &ConnectivityEvent::new().connect("c0", "c2").separate("c1", "c3"),
        &EdgeStates::new(),
        &ExactOptions::default(),
    )
    .unwrap();
    assert_eq!(doc["probability"], direct.probability.to_string().as_str());
}

#[test]
fn sampling_output_is_deterministic_per_seed() {
    let args = [
        "mc", "--class", "complete:3", "--p", "1/2", "--v", "a", "--w", "b", "--samples",
        "20000", "--seed", "5",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    let doc = stdout_json(&first);
    assert_eq!(doc["engine"], "mc");
    assert_eq!(doc["seed"], 5);
}

#[test]
fn check_class_csv_lists_every_pair_on_the_grid() {
    let out = run(&["check-class", "--class", "complete:3", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = stdout_text(&out);
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines[0], "class,p,v,w,side,twin,adjacent_symmetry");
    assert_eq!(lines.len(), 1 + 9);
    for row in &lines[1..] {
        assert!(row.ends_with("true,true"), "unexpected row {row}");
    }
}

#[test]
fn exhaustive_search_reports_isomorphism_class_counts() {
    let out = run(&["search", "--mode", "exhaustive", "--max-vertices", "3"]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["pass"], true);
    assert_eq!(doc["violations"].as_array().unwrap().len(), 0);
    assert_eq!(
        doc["instances_by_size"],
        serde_json::json!({"1": 1, "2": 2, "3": 4})
    );
}

#[test]
fn search_accepts_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(
        &path,
        r#"{"mode": "random", "instances": 5, "max_vertices": 3, "p_grid": ["1/2"], "seed": 3}"#,
    )
    .unwrap();
    let out = run(&["search", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["instances_checked"], 5);
    assert_eq!(doc["pass"], true);
}

#[test]
fn text_format_renders_human_summaries() {
    let gap = run(&[
        "gap", "--class", "complete:3", "--v", "a", "--w", "b", "--format", "text",
    ]);
    assert_eq!(code(&gap), 0);
    assert!(stdout_text(&gap).contains("gap = 55/512"));

    let sweep = run(&["check-class", "--class", "complete:3", "--format", "text"]);
    assert_eq!(code(&sweep), 0);
    let text = stdout_text(&sweep);
    assert!(text.contains("violations: 0"));
    assert!(text.trim_end().ends_with("pass"));
}

#[test]
fn worker_count_does_not_change_exact_output() {
    let default_run = run(&["gap", "--class", "complete:3", "--v", "a", "--w", "b"]);
    let pinned = run(&[
        "gap", "--class", "complete:3", "--v", "a", "--w", "b", "--workers", "2",
    ]);
    assert_eq!(code(&pinned), 0);
    assert_eq!(default_run.stdout, pinned.stdout);
}

#[test]
fn usage_and_input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, content: &str| {
        let path = dir.path().join(name);
        std::fs::write(&path, content).unwrap();
        path.to_str().unwrap().to_string()
    };
    let garbled = write("garbled.json", "{ not json");
    let out_of_range = write(
        "range.json",
        r#"{"vertices": ["a", "b"], "edges": [{"u": "a", "v": "b", "p": "3/2"}],
            "vertex_weights": {"a": "1/2", "b": "1/2"}}"#,
    );
    let duplicated = write(
        "dup.json",
        r#"{"vertices": ["a", "b"], "edges": [{"u": "a", "v": "b", "p": "1/2"},
            {"u": "b", "v": "a", "p": "1/3"}], "vertex_weights": {"a": "1/2", "b": "1/2"}}"#,
    );

    let cases: Vec<Vec<&str>> = vec![
        // both input sources
        vec!["gap", "--class", "complete:3", "--graph", &garbled, "--v", "a", "--w", "b"],
        // no input source
        vec!["gap", "--v", "a", "--w", "b"],
        // malformed class specs
        vec!["gap", "--class", "complete:0", "--v", "a", "--w", "b"],
        vec!["gap", "--class", "dodecahedron:5", "--v", "a", "--w", "b"],
        // weight outside [0,1]
        vec!["gap", "--class", "complete:3", "--p", "7/5", "--v", "a", "--w", "b"],
        // unreadable or invalid graph files
        vec!["gap", "--graph", "/nonexistent/graph.json", "--v", "a", "--w", "b"],
        vec!["gap", "--graph", &garbled, "--v", "a", "--w", "b"],
        vec!["gap", "--graph", &out_of_range, "--v", "a", "--w", "b"],
        vec!["gap", "--graph", &duplicated, "--v", "a", "--w", "b"],
        // unknown vertex
        vec!["gap", "--class", "complete:3", "--v", "zz", "--w", "b"],
        // enumeration over the requested cap
        vec!["gap", "--class", "complete:5", "--cap", "10", "--v", "a", "--w", "b"],
        // csv where no table exists
        vec!["gap", "--class", "complete:3", "--v", "a", "--w", "b", "--format", "csv"],
        // malformed event pair
        vec!["exact", "--class", "complete:3", "--connect", "ab"],
        // hypotheses that do not hold
        vec!["verify-thm2", "--class", "cycle:4", "--v", "c0", "--w", "c1"],
        vec!["verify-thm1", "--class", "complete_bipartite:2,2", "--v", "V1_0", "--w", "V1_1"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(code(&out), 2, "expected exit 2 for {args:?}");
        assert!(
            !out.stderr.is_empty(),
            "expected a diagnostic on stderr for {args:?}"
        );
    }
}
