use std::process::{Command, Output};

use pzf_core::report::{BoundsReport, ExactReport, ProfileReport, RunReport, CSV_HEADER};

fn pzf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pzf")).args(args).env_remove("PZF_THREADS").output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = pzf(args);
    assert!(out.status.success(), "pzf {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Parses into the typed report and checks nothing was dropped on the way.
fn strict<T: serde::de::DeserializeOwned + serde::Serialize>(json: &str) -> T {
    let raw: serde_json::Value = serde_json::from_str(json).unwrap();
    let typed: T = serde_json::from_value(raw.clone()).unwrap();
    assert_eq!(serde_json::to_value(&typed).unwrap(), raw);
    typed
}

#[test]
fn run_csv_matches_golden_file() {
    let out =
        stdout(&["run", "--graph", "grid:2,2", "--start", "0", "--trials", "1000", "--seed", "1", "--format", "csv"]);
    assert_eq!(out, include_str!("golden/grid_2x2_seed1.csv"));
    assert_eq!(out.lines().next().unwrap(), CSV_HEADER.join(","));
}

#[test]
fn table_csv_matches_golden_file() {
    let out = stdout(&["table", "hypercube", "--dims", "1-3", "--trials", "500", "--seed", "4", "--csv"]);
    assert_eq!(out, include_str!("golden/hypercube_table_seed4.csv"));
}

#[test]
fn csv_is_identical_across_thread_counts() {
    let args = ["run", "--graph", "cycle:9", "--start", "min", "--trials", "300", "--seed", "5", "--format", "csv"];
    let one = stdout(&[&["--threads", "1"], &args[..]].concat());
    let four = stdout(&[&["--threads", "4"], &args[..]].concat());
    assert_eq!(one, four);
    let env = Command::new(env!("CARGO_BIN_EXE_pzf")).args(args).env("PZF_THREADS", "2").output().unwrap();
    assert_eq!(String::from_utf8(env.stdout).unwrap(), one);
}

#[test]
fn csv_floats_round_trip() {
    let out =
        stdout(&["run", "--graph", "path:6", "--start", "min", "--trials", "200", "--seed", "3", "--format", "csv"]);
    let json = stdout(&["run", "--graph", "path:6", "--start", "min", "--trials", "200", "--seed", "3"]);
    let report: RunReport = strict(&json);
    for (line, row) in out.lines().skip(1).zip(&report.rows) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[5].parse::<f64>().unwrap(), row.summary.mean);
        assert_eq!(fields[6].parse::<f64>().unwrap(), row.summary.variance);
        assert_eq!(fields[7].parse::<f64>().unwrap(), row.summary.std_error);
    }
    assert_eq!(out.lines().count(), report.rows.len() + 1);
}

#[test]
fn run_json_schema() {
    let json = stdout(&["run", "--graph", "grid:3,3", "--start", "min", "--trials", "500", "--seed", "2"]);
    let report: RunReport = strict(&json);
    assert_eq!(report.rows.len(), 3);
    let best = report.best();
    assert!(report.rows.iter().all(|r| r.summary.mean >= best.summary.mean));
    assert_eq!(best.annotation.lower_bound, Some(2.0));
    assert_eq!(best.annotation.upper_bound, Some(24.0));
    assert!(best.annotation.bounds.iter().any(|b| b.name == "grid_upper" && b.asymptotic));
}

#[test]
fn exact_json_schema() {
    let report: ExactReport = strict(&stdout(&["exact", "--graph", "cycle:4", "--start", "0"]));
    assert_eq!(report.expected_rational.as_deref(), Some("7/3"));
    assert!((report.expected_time - 7.0 / 3.0).abs() < 1e-12);
    assert_eq!(report.tail[0], 1.0);

    let report: ExactReport = strict(&stdout(&["exact", "--graph", "path:3", "--start", "min"]));
    assert_eq!((report.start, report.expected_time), (0, 2.0));
}

#[test]
fn profile_and_bounds_schema() {
    let profile: ProfileReport =
        strict(&stdout(&["profile", "--graph", "hypercube:5", "--start", "0", "--trials", "300"]));
    let total: f64 = profile.levels.iter().map(|l| l.mean_steps).sum();
    assert!((total - profile.mean_time).abs() < 1e-9);
    assert!(profile.levels.iter().filter(|l| l.bound.is_some()).count() >= 4);

    let bounds: BoundsReport = strict(&stdout(&["bounds", "--graph", "grid:4,5", "--format", "json"]));
    assert_eq!(bounds.n_vertices, 20);
    assert_eq!(bounds.bounds[0].value, 3.5);
}

#[test]
fn grid_table_layout() {
    let out = stdout(&["table", "grid", "--rows", "2-3", "--cols", "2-4", "--trials", "300", "--start", "center"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0].split_whitespace().collect::<Vec<_>>(), ["ept", "2", "3", "4"]);
    for line in &lines[1..] {
        for cell in line.split_whitespace().skip(1) {
            assert_eq!(cell.split('.').nth(1).unwrap().len(), 2, "{cell}");
        }
    }
}

#[test]
fn grid_table_reports_corner_and_center_starts() {
    let out = stdout(&["table", "grid", "--rows", "3", "--cols", "3", "--trials", "2000", "--csv"]);
    let starts: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(starts, ["0", "4"]);
    let table = stdout(&["table", "grid", "--rows", "3", "--cols", "3", "--trials", "2000"]);
    assert!(table.starts_with("start = corner\n"));
    assert!(table.contains("\nstart = center\n"));
}

#[test]
fn empty_range_gives_empty_table() {
    let out = stdout(&["table", "hypercube", "--dims", "5-4", "--csv"]);
    assert_eq!(out.trim(), format!("{},advisory", CSV_HEADER.join(",")));
}

#[test]
fn errors_exit_nonzero() {
    for args in [
        &["run", "--graph", "grid:0,3"][..],
        &["run", "--graph", "cycle:2"],
        &["run", "--graph", "path:4", "--rule", "constant:1.5"],
        &["run", "--graph", "path:4", "--start", "9"],
        &["exact", "--graph", "hypercube:10"],
        &["run", "--graph", "file:/nonexistent/edges.txt"],
        &["table", "grid", "--rows", "x"],
    ] {
        let out = pzf(args);
        assert!(!out.status.success(), "{args:?}");
        assert!(!out.stderr.is_empty());
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn edge_list_file_input() {
    let dir = std::env::temp_dir().join(format!("pzf-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("triangle.txt");
    std::fs::write(&path, "# triangle\n0 1\n1 2\n2 0\n").unwrap();
    let spec = format!("file:{}", path.display());
    let report: ExactReport = strict(&stdout(&["exact", "--graph", &spec, "--start", "0"]));
    assert_eq!(report.expected_rational.as_deref(), Some("2"));
    std::fs::remove_dir_all(&dir).unwrap();
}
