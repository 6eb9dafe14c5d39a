use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_gigastore");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn retention_prints_barrier() {
    let o = run(&["retention", "--storage-years", "1e6", "--alpha", "1e-5", "--f0", "1e9"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("63.3 kBT"), "{}", stdout(&o));
    let o = run(&["retention", "--storage-years", "1e9", "--alpha", "1e-5", "--f0", "1e9", "--temp-k", "300"]);
    assert!(stdout(&o).contains("70.2 kBT (1.82 eV)"), "{}", stdout(&o));
}

#[test]
fn retention_domain_error_exits_2() {
    let o = run(&["retention", "--storage-years", "1e9", "--alpha", "1", "--f0", "1e9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    assert_eq!(run(&["retention", "--alpha", "1e-5"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

fn kelvin(line: &str) -> f64 {
    line.split_whitespace()
        .rev()
        .nth(1)
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| panic!("no temperature in {line:?}"))
}

#[test]
fn plan_test_values_and_table() {
    let one = |years: &str, hours: &str| {
        let o = run(&[
            "plan-test", "--storage-years", years, "--test-hours", hours, "--alpha", "1e-6",
            "--alpha-t", "1e-6", "--f0", "1e9", "--temp-k", "300",
        ]);
        assert_eq!(o.status.code(), Some(0));
        kelvin(stdout(&o).trim())
    };
    assert!((one("1e6", "1") - 461.0).abs() <= 1.0);
    assert!((one("1e9", "8766.25") - 420.0).abs() <= 1.0);
    let same = run(&[
        "plan-test", "--storage-years", "1", "--test-hours", "8766.25", "--alpha", "1e-6",
        "--alpha-t", "1e-6", "--temp-k", "300",
    ]);
    assert!((kelvin(stdout(&same).trim()) - 300.0).abs() < 1e-6);

    let table = stdout(&run(&["plan-test", "--table"]));
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    let cells: Vec<f64> = rows
        .iter()
        .flat_map(|r| r.split('|').skip(1).map(|c| c.trim().trim_end_matches(" K").parse::<f64>().unwrap()))
        .collect();
    for (got, want) in cells.iter().zip([461.0, 411.0, 380.0, 509.0, 455.0, 420.0]) {
        assert!((got - want).abs() <= 1.0, "{got} vs {want}");
    }
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["retention", "plan-test", "optimize-stack", "master", "simulate", "read", "pipeline"] {
        let o = run(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
        let text = stdout(&o);
        let lines: Vec<&str> = text.lines().collect();
        for (i, line) in lines.iter().enumerate() {
            let flag = line.trim_start();
            if !(flag.starts_with("--") || flag.starts_with("-h")) {
                continue;
            }
            let inline = flag.split("  ").filter(|s| !s.trim().is_empty()).count() > 1;
            let below = lines.get(i + 1).is_some_and(|n| {
                let t = n.trim_start();
                !t.is_empty() && !t.starts_with('-') && n.len() - t.len() > line.len() - flag.len()
            });
            assert!(inline || below, "{sub}: undocumented flag {line:?}");
        }
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn optimize_stack_reports_contrast() {
    let o = run(&["optimize-stack", "--grid", "31"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let contrast: f64 = text.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(contrast > 0.1, "{text}");
}

#[test]
fn master_then_read_without_aging_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run_in(d, &["master", "--generated-docs", "8"]).status.code(), Some(0));
    assert_eq!(run_in(d, &["simulate", "--seed", "1"]).status.code(), Some(0));
    let o = run_in(d, &["read"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["alphaObserved"], 0.0);
    assert_eq!(report["decoded"], report["totalInner"]);
}

#[test]
fn read_rejects_foreign_image() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_in(d, &["master", "--outer-payload", "first"]);
    run_in(d, &["simulate"]);
    run_in(d, &["master", "--outer-payload", "second"]);
    assert_eq!(run_in(d, &["read"]).status.code(), Some(2));
}

#[test]
fn pipeline_exit_codes_follow_survival() {
    let dir = tempfile::tempdir().unwrap();
    let mild = dir.path().join("mild");
    let o = run(&["pipeline", "--temp-k", "473", "--hours", "1", "--seed", "42", "--out-dir", mild.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let hot = dir.path().join("hot");
    let o = run(&["pipeline", "--temp-k", "1373", "--hours", "4", "--seed", "42", "--out-dir", hot.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(hot.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["decoded"], 0);
}

#[test]
fn deterministic_mode_requires_seed_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = run(&["pipeline", "--deterministic", "--out-dir", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    for out in [&a, &b] {
        run(&[
            "pipeline", "--seed", "42", "--deterministic", "--temp-k", "650", "--hours", "1",
            "--mode", "whitelight", "--out-dir", out.to_str().unwrap(),
        ]);
    }
    for f in ["disk.pbm", "manifest.json", "scenario.json", "aged.pgm", "report.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"storage-years": 1e9, "alpha": 1e-5, "f0": 1e9, "temp-k": 300}"#).unwrap();
    let o = run(&["retention", "--config", cfg.to_str().unwrap()]);
    assert!(stdout(&o).contains("70.2 kBT"), "{}", stdout(&o));
    // explicit flags win over the file
    let o = run(&["retention", "--config", cfg.to_str().unwrap(), "--storage-years", "1e6"]);
    assert!(stdout(&o).contains("63.3 kBT"), "{}", stdout(&o));
    std::fs::write(&cfg, "[1, 2]").unwrap();
    assert_eq!(run(&["retention", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn scenario_file_drives_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_in(d, &["master"]);
    std::fs::write(
        d.join("bake.json"),
        r#"{"schedule":[{"temperature":1373,"duration":14400}],"seed":7}"#,
    )
    .unwrap();
    assert_eq!(run_in(d, &["simulate", "--scenario", "bake.json"]).status.code(), Some(0));
    assert_eq!(run_in(d, &["read"]).status.code(), Some(1));
}

/// Pristine pipeline report for a small layout, compared against a checked-in
/// copy.
#[test]
fn pristine_report_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "pipeline", "--outer-version", "1", "--outer-level", "L", "--outer-payload", "golden",
        "--generated-docs", "3", "--seed", "0", "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let got = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/pristine_report.json");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &got).unwrap();
    }
    assert_eq!(got, std::fs::read_to_string(&golden).unwrap());
}
