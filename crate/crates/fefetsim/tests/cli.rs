//! CLI contract tests: exit codes, seed requirements, and file output.

use std::io::Write;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fefetsim"))
        .args(args)
        .output()
        .expect("spawn CLI")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(exit_code(&run(&["--help"])), 0);
    assert_eq!(exit_code(&run(&["--version"])), 0);
    assert_eq!(exit_code(&run(&["shmoo", "--help"])), 0);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(exit_code(&run(&["array", "--no-such-flag"])), 1);
    assert_eq!(exit_code(&run(&["no-such-command"])), 1);
}

#[test]
fn bad_config_exits_one() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "[device]\nn_domains = \"many\"").unwrap();
    let path = f.path().to_str().unwrap();
    let out = run(&["program-stats", "--config", path, "--cells", "10"]);
    assert_eq!(exit_code(&out), 1);

    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "[device]\nno_such_key = 1").unwrap();
    let path = f.path().to_str().unwrap();
    let out = run(&["program-stats", "--config", path, "--cells", "10"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn injection_commands_require_a_seed() {
    let out = run(&["inject", "--workload", "classifier"]);
    assert_eq!(exit_code(&out), 1);
    let out = run(&["minsize", "--workload", "classifier"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn missing_graph_input_exits_two() {
    let out = run(&[
        "inject",
        "--workload",
        "graph",
        "--input",
        "/no/such/file.txt",
        "--seed",
        "1",
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn malformed_edge_list_exits_two() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "0 1\nbroken line").unwrap();
    let path = f.path().to_str().unwrap();
    let out = run(&["inject", "--workload", "graph", "--input", path, "--seed", "1"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn bad_generator_spec_exits_two() {
    let out = run(&[
        "inject",
        "--workload",
        "graph",
        "--input",
        "er:0:2.0",
        "--seed",
        "1",
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn infeasible_organization_exits_three() {
    // A fixed organization that cannot cover the capacity exactly.
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(
        f,
        "n_cells = 50\n[array]\nsubarray_rows = 7\nsubarray_cols = 13\nn_banks = 3"
    )
    .unwrap();
    let path = f.path().to_str().unwrap();
    let out = run(&["array", "--config", path]);
    assert_eq!(exit_code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn out_flag_writes_the_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&[
        "program-stats",
        "--cells",
        "50",
        "--seed",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("per_level"));
}

#[test]
fn env_var_thread_fallback_matches_flag() {
    let base = run(&["shmoo", "--domains", "50", "--bpc", "1", "--samples", "200", "--threads", "1"]);
    let env = Command::new(env!("CARGO_BIN_EXE_fefetsim"))
        .args(["shmoo", "--domains", "50", "--bpc", "1", "--samples", "200"])
        .env("FEFETSIM_THREADS", "2")
        .output()
        .expect("spawn CLI");
    assert_eq!(exit_code(&base), 0);
    assert_eq!(env.status.code(), Some(0));
    assert_eq!(base.stdout, env.stdout);
}
