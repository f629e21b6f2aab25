use std::path::{Path, PathBuf};
use std::process::Command;

use hetwave::run::{render_svg, run, Mode, Report, RunConfig};
use hetwave::Error;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

fn hetwave(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hetwave")).args(args).output().unwrap()
}

fn cli(mode: &str, cfg: &Path, out: &Path) -> std::process::Output {
    hetwave(&[mode, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

/// The `data-x` attribute of the element with id `id`.
fn data_x(svg: &str, id: &str) -> f64 {
    let at = svg.find(&format!("id=\"{id}\"")).unwrap();
    let rest = &svg[at..];
    let start = rest.find("data-x=\"").unwrap() + 8;
    let end = start + rest[start..].find('"').unwrap();
    rest[start..end].parse().unwrap()
}

#[test]
fn nagumo_solve_is_deterministic_and_marks_lambda_plus() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = config("nagumo.json");
    for dir in [&a, &b] {
        let out = cli("solve", &cfg, dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    }
    let report = std::fs::read(a.path().join("nagumo_report.json")).unwrap();
    assert_eq!(report, std::fs::read(b.path().join("nagumo_report.json")).unwrap());

    let parsed: Report = serde_json::from_slice(&report).unwrap();
    assert!(parsed.pass);
    let echoed = RunConfig::from_json(&serde_json::to_string(&parsed.config).unwrap()).unwrap();
    assert_eq!(echoed, parsed.config);
    assert_eq!(echoed, RunConfig::load(&cfg).unwrap());

    let svg = std::fs::read_to_string(a.path().join("nagumo_wave.svg")).unwrap();
    assert_eq!(svg.matches("class=\"component\"").count(), 1);
    let exact = 2f64.sqrt() * 19f64.ln();
    assert!((data_x(&svg, "marker-lambda_plus") - exact).abs() < 0.02);
    let csv = std::fs::read_to_string(a.path().join("nagumo_wave.csv")).unwrap();
    assert!(csv.lines().count() > 1000);
}

#[test]
fn planar_plot_has_two_components() {
    let out = run(&RunConfig::load(&config("planar.json")).unwrap(), Path::new(".")).unwrap();
    let svg = render_svg(&out.report).unwrap();
    assert_eq!(svg.matches("class=\"component\"").count(), 2);
    assert!(svg.contains("data-index=\"2\""));
    assert!(svg.contains("class=\"cylinder-band\""));
    assert!(svg.contains("class=\"c-star\""));
}

#[test]
fn validate_report_has_nothing_to_plot() {
    let mut cfg = RunConfig::load(&config("nagumo.json")).unwrap();
    cfg.mode = Mode::Validate;
    let out = run(&cfg, Path::new(".")).unwrap();
    assert!(out.report.pass);
    assert!(matches!(render_svg(&out.report), Err(Error::NothingToPlot)));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let rejected = cli("validate", &config("nagumo_unstable.json"), dir.path());
    assert_eq!(rejected.status.code(), Some(2));

    let tilted = cli("validate", &config("tilted.json"), dir.path());
    assert_eq!(tilted.status.code(), Some(0), "{}", String::from_utf8_lossy(&tilted.stdout));

    let missing = cli("solve", &dir.path().join("absent.json"), dir.path());
    assert_eq!(missing.status.code(), Some(4));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"potential": {"name": "nagumo"}, "grid": {"h": -1}}"#).unwrap();
    assert_eq!(cli("solve", &bad, dir.path()).status.code(), Some(1));

    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"potential": {"name": "nagumo"}, "grid": {"step": 1}}"#).unwrap();
    assert_eq!(cli("solve", &unknown, dir.path()).status.code(), Some(1));

    let blocked = dir.path().join("file");
    std::fs::write(&blocked, "").unwrap();
    let io = cli("validate", &config("nagumo.json"), &blocked);
    assert_eq!(io.status.code(), Some(4));

    assert_ne!(hetwave(&["solve"]).status.code(), Some(0));
}
