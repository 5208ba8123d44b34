//! End-to-end runs of the `tablog` binary against its in-process server.

use std::path::PathBuf;
use std::process::{Command, Output};

fn programs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/programs")
}

fn tablog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tablog"))
        .args(args)
        .env_remove("TABLOG_SERVER")
        .env_remove("TABLOG_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn program(name: &str) -> String {
    programs().join(name).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_prints_answers_then_no() {
    let o = tablog(&["run", &program("graph.pl"), "--query", "p(a,A)"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "A = b\nA = c\nno\n");
}

#[test]
fn no_answers_exits_one() {
    let o = tablog(&["run", &program("graph.pl"), "--query", "p(z,A)"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "no\n");
}

#[test]
fn errors_exit_two() {
    let o = tablog(&["run", &program("graph.pl"), "--query", "p(a,"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("syntax"));
    let o = tablog(&["run", "/no/such/file.pl", "--query", "p"]);
    assert_eq!(o.status.code(), Some(2));
    let o = tablog(&["transform", &program("graph.pl")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn records_are_json_lines() {
    let o = tablog(&["run", &program("join.pl"), "--query", "p(a,X)", "--format", "records"]);
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["answer"], "X = c");
    assert_eq!(lines[1]["ordinal"], 2);
    assert_eq!(lines[1]["query"], "p(a,X)");
}

#[test]
fn machine_trace_is_stable() {
    let args = ["run", &program("join.pl"), "--query", "p(a,X)", "--trace", "machines"];
    let a = tablog(&args);
    let b = tablog(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("# initial\nS: <-p(a,X)\n"));
    assert!(text.ends_with("X = b\nX = c\nno\n"));
}

#[test]
fn trace_defaults_to_the_log() {
    let o = tablog(&["trace", &program("graph.pl"), "--query", "p(a,A)"]);
    assert!(stdout(&o).starts_with("1 p(a,A)"));
}

#[test]
fn transform_output_runs_the_same() {
    let o = tablog(&["transform", &program("p4.pl")]);
    assert_eq!(o.status.code(), Some(0));
    let dir = std::env::temp_dir().join(format!("tablog-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("p4_transformed.pl");
    std::fs::write(&out, &o.stdout).unwrap();
    let original = tablog(&["run", &program("p4.pl"), "--query", "p(a,B,C,D)"]);
    let transformed = tablog(&["run", &out.to_string_lossy(), "--query", "p(a,B,C,D)"]);
    assert_eq!(original.status.code(), Some(0));
    assert_eq!(stdout(&original), stdout(&transformed));
}

#[test]
fn dump_tables_lists_entries() {
    let o = tablog(&["dump-tables", &program("join.pl"), "--query", "p(a,X)"]);
    let text = stdout(&o);
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("p(") && first.contains(":[p(a,b),p(e,a),"), "{first}");
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn check_passes_on_graph() {
    let o = tablog(&["check", &program("graph.pl"), "--query", "p(a,A)", "--iterations"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.starts_with("Iteration 0:"));
    assert!(text.ends_with("PASS\n"));
}

#[test]
fn ingest_demo_reads_once() {
    let data = programs().join("data");
    let o = tablog(&["ingest-demo", "emp.txt", "--ids", "1,2,3", "--data-dir", &data.to_string_lossy()]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(text.lines().filter(|l| l.starts_with("emp_data(")).count(), 3);
    assert!(text.ends_with("file opens: 1\n"), "{text}");
    let o = tablog(&["ingest-demo", "missing.txt", "--data-dir", &data.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_prints_a_table() {
    let o = tablog(&["bench", "--sizes", "15,100", "--reps", "1"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0));
    assert!(text.lines().nth(1).unwrap().split_whitespace().take(3).eq(["15", "5", "15"]));
}
