mod common;

use common::fixture;
use hydroplan::cli::{run, EXIT_INVALID, EXIT_IO, EXIT_OK, EXIT_USAGE};
use hydroplan_milp::{read_mps, solve_milp, MilpOptions, MilpStatus};
use std::fs;
use std::io::BufReader;
use std::path::Path;

fn hydroplan(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("hydroplan").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Value printed after `label` on the first line containing it.
fn number_after(text: &str, label: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.contains(label))
        .unwrap_or_else(|| panic!("no {label:?} in {text}"));
    let rest = &line[line.find(label).unwrap() + label.len()..];
    rest.split_whitespace().next().unwrap().parse().unwrap()
}

const REPORT_FILES: [&str; 7] = [
    "dispatches.csv",
    "inventory.csv",
    "plant_ops.csv",
    "trips.csv",
    "costs.csv",
    "shares.csv",
    "gantt.txt",
];

#[test]
fn validate_exit_codes() {
    let minimal = fixture("minimal.toml");
    let broken = fixture("broken.toml");
    let (code, out, _) = hydroplan(&["validate", path(&minimal)]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("ok"));

    let (code, out, err) = hydroplan(&["validate", path(&broken)]);
    assert_eq!(code, EXIT_INVALID);
    assert!(
        out.lines().filter(|l| l.starts_with("error")).count() >= 3,
        "{out}"
    );
    assert!(err.contains("error"));
}

#[test]
fn usage_and_io_errors() {
    let minimal = fixture("minimal.toml");
    assert_eq!(hydroplan(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(hydroplan(&["plan"]).0, EXIT_USAGE);
    assert_eq!(hydroplan(&["compare", path(&minimal)]).0, EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let args = ["plan", path(&minimal), "--gap", "-1", "--out", path(&out)];
    assert_eq!(hydroplan(&args).0, EXIT_USAGE);
    let args = [
        "plan",
        path(&minimal),
        "--override",
        "GW1:1-4",
        "--out",
        path(&out),
    ];
    assert_eq!(hydroplan(&args).0, EXIT_USAGE);
    assert_eq!(
        hydroplan(&["validate", "/nonexistent/scenario.toml"]).0,
        EXIT_IO
    );
    assert_eq!(hydroplan(&["--help"]).0, EXIT_OK);
}

#[test]
fn plan_writes_identical_reports_on_repeat_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let scenario = fixture("minimal.toml");
    let (code, out, err) = hydroplan(&["plan", path(&scenario), "--out", path(&a)]);
    assert_eq!(code, EXIT_OK, "{out}{err}");
    assert!(out.contains("status optimal within gap"), "{out}");
    assert_eq!(
        hydroplan(&["plan", path(&scenario), "--out", path(&b)]).0,
        EXIT_OK
    );
    for name in REPORT_FILES.iter().chain(&["solution.vec"]) {
        let x = fs::read(a.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(x, fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn exported_model_solved_elsewhere_reports_the_same_objective() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = fixture("minimal.toml");
    let plan_dir = dir.path().join("plan");
    let args = [
        "plan",
        path(&scenario),
        "--gap",
        "0",
        "--out",
        path(&plan_dir),
    ];
    let (code, plan_out, _) = hydroplan(&args);
    assert_eq!(code, EXIT_OK);
    let planned = number_after(&plan_out, "objective");

    let mps_dir = dir.path().join("mps");
    assert_eq!(
        hydroplan(&["export-mps", path(&scenario), "--out", path(&mps_dir)]).0,
        EXIT_OK
    );
    let names = fs::read_to_string(mps_dir.join("names.csv")).unwrap();
    assert!(names.starts_with("column,name,family,period\n"));

    let file = fs::File::open(mps_dir.join("model.mps")).unwrap();
    let mps = read_mps(BufReader::new(file)).unwrap();
    assert_eq!(names.lines().count() - 1, mps.col_names.len());
    let opts = MilpOptions {
        gap_target: 0.0,
        ..MilpOptions::default()
    };
    let res = solve_milp(&mps.mip, &opts);
    assert_eq!(res.status, MilpStatus::OptimalWithinGap);
    let x = res.x.unwrap();
    let vec: String = mps
        .col_names
        .iter()
        .zip(&x)
        .map(|(n, v)| format!("{n} {v:?}\n"))
        .collect();
    let sol = dir.path().join("external.vec");
    fs::write(&sol, vec).unwrap();

    let report_dir = dir.path().join("report");
    let args = [
        "report",
        path(&scenario),
        "--solution",
        path(&sol),
        "--out",
        path(&report_dir),
    ];
    let (code, out, err) = hydroplan(&args);
    assert_eq!(code, EXIT_OK, "{out}{err}");
    assert!(out.contains("feasible true"), "{out}");
    let reported = number_after(&out, "objective");
    assert!(
        (reported - planned).abs() <= 1e-5 * planned.abs().max(1.0),
        "{reported} vs {planned}"
    );
    for name in REPORT_FILES {
        assert!(report_dir.join(name).exists(), "{name}");
    }
}

#[test]
fn report_flags_an_infeasible_vector() {
    let dir = tempfile::tempdir().unwrap();
    let minimal = fixture("minimal.toml");
    let report_dir = dir.path().join("r");
    let sol = dir.path().join("zero.vec");
    fs::write(&sol, "").unwrap();
    let args = [
        "report",
        path(&minimal),
        "--solution",
        path(&sol),
        "--out",
        path(&report_dir),
    ];
    let (code, out, _) = hydroplan(&args);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("feasible false"), "{out}");
}

#[test]
fn compare_writes_both_plans_and_the_deltas() {
    let minimal = fixture("minimal.toml");
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("cmp");
    let args = [
        "compare",
        path(&minimal),
        "--override",
        "TF1:1-10",
        "--out",
        path(&out_dir),
    ];
    let (code, out, err) = hydroplan(&args);
    assert_eq!(code, EXIT_OK, "{out}{err}");
    for sub in ["base", "override"] {
        assert!(out_dir.join(sub).join("solution.vec").exists(), "{sub}");
        for name in REPORT_FILES {
            assert!(out_dir.join(sub).join(name).exists(), "{sub}/{name}");
        }
    }
    let deltas = fs::read_to_string(out_dir.join("deltas.csv")).unwrap();
    assert!(
        deltas.starts_with("component,base,override,delta\n"),
        "{deltas}"
    );
    let timeline = fs::read_to_string(out_dir.join("timeline_diff.csv")).unwrap();
    assert!(timeline.lines().count() > 1, "{timeline}");
}
