use std::fs;
use std::process::{Command, Output};

fn nlfd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlfd")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn preset_study_writes_csv_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("table1");
    let o = nlfd(&["study", "--preset", "table1", "--out", prefix.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("table1.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("h,linf_error,order,status,iterations"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].split(',').nth(2) == Some(""), "first row has no order: {}", rows[0]);
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("converged")));
    let txt = fs::read_to_string(dir.path().join("table1.txt")).unwrap();
    assert!(txt.starts_with("# problem=example1"));
    assert!(stdout(&o).contains("converged"));
}

#[test]
fn csv_format_goes_to_stdout() {
    let o = nlfd(&["study", "--problem", "example5", "--alpha", "1.5", "--h-list", "0.1,0.05", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    let order: f64 = rows[2].split(',').nth(2).unwrap().parse().unwrap();
    assert!((1.9..=2.1).contains(&order), "{order}");
}

#[test]
fn solve_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("ex2");
    let o = nlfd(&["solve", "--problem", "example2", "--alpha", "1", "--h", "0.1", "--out", prefix.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let plot = fs::read_to_string(dir.path().join("ex2.plot")).unwrap();
    let blocks: Vec<&str> = plot.split("\n\n").collect();
    assert_eq!(blocks.len(), 2, "{plot}");
    // header plus 11 nodes in each block
    assert_eq!(blocks[0].lines().count(), 12);
    assert_eq!(blocks[1].trim_end().lines().count(), 12);
}

#[test]
fn non_convergence_exits_one() {
    let o = nlfd(&["solve", "--problem", "example4", "--scheme", "godunov-ext", "--h", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("status: singular-linear-solve"));
}

#[test]
fn verify_exit_codes() {
    let ok = nlfd(&["verify", "--problem", "example1", "--scheme", "lf1", "--alpha", "1.5", "--samples", "200"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let text = stdout(&ok);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() == 3, "{text}");
    assert!(text.contains("above"));

    let bad = nlfd(&["verify", "--problem", "example1", "--scheme", "lf1", "--alpha", "0", "--samples", "200"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("FAIL g-monotonicity"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["study", "--problem", "example9"],
        vec!["solve"],
        vec!["solve", "--problem", "example1", "--scheme", "lf7"],
        vec!["frobnicate"],
    ] {
        let o = nlfd(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    }
}

#[test]
fn io_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("missing").join("out");
    let o = nlfd(&["solve", "--problem", "example1", "--h", "0.1", "--out", prefix.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    let o = nlfd(&["solve", "--config", dir.path().join("nope.conf").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# example 3, godunov\nproblem = example3\nscheme = godunov-ext\nh-list = 0.1,0.05\n").unwrap();
    let o = nlfd(&["study", "--config", conf.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn help_exits_zero() {
    let o = nlfd(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in ["solve", "study", "verify"] {
        assert!(stdout(&o).contains(sub));
    }
}
