use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use jumpdiff::cirjump::{CirJumpParams, JumpLaw, Weight};
use jumpdiff::sim::{JumpScheme, SimConfig};
use jumpdiff_cli::config::{
    parse_config, Arm, BumpConfig, ChangeConfig, ChangeKind, CheckConfig, CheckKind, ConfigError, DemoConfig, Family,
    ModelConfig, PlotConfig, RunConfig, ScanConfig, TargetKind,
};

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config_text(name: &str) -> String {
    fs::read_to_string(repo_root().join("configs").join(name)).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jumpdiff"))
}

fn check(kind: CheckKind) -> CheckConfig {
    CheckConfig {
        kind,
        name: None,
        t: None,
        paths: None,
        z: None,
        target: None,
        target_override: None,
        bumps: Vec::new(),
        level: None,
        grid_points: None,
        arm: None,
        samples: None,
        tolerance: None,
    }
}

#[test]
fn example_config_parses_to_documented_value() {
    let bumps = vec![
        BumpConfig { center: 0.8, width: 0.4, amplitude: 1.0 },
        BumpConfig { center: 1.2, width: 0.5, amplitude: 1.0 },
        BumpConfig { center: 2.0, width: 1.0, amplitude: 1.0 },
    ];
    let expected = RunConfig {
        seed: 20240611,
        out_dir: "jumpdiff-out".into(),
        paths: 100_000,
        z: 3.0,
        fit_epsilon: false,
        model: ModelConfig { family: Family::CirJump, h: None },
        params: CirJumpParams {
            b0: 0.5,
            b1: -1.0,
            sigma: 1.0,
            lambda: 1.0,
            law: JumpLaw::Exponential { mean: 0.5 },
            gamma: 0.2,
            y0: 1.0,
            tilde_b0: 1.0,
            tilde_b1: -1.0,
            tilde_gamma0: 0.1,
            tilde_gamma1: 0.05,
            m0: Weight::constant(0.5),
            m1: Weight::constant(0.25),
        },
        change: ChangeConfig { kind: ChangeKind::Builtin },
        sim: SimConfig {
            horizon: 1.0,
            dt: 2f64.powi(-10),
            substeps: 1,
            n_expl: 100,
            n_loc: 1000,
            jump_scheme: JumpScheme::Auto,
        },
        plots: PlotConfig { paths: 10_000, grid_points: 10, lambda_bins: 40 },
        scan: ScanConfig { lo: 0.01, hi: 10.0, points: 200 },
        demo: DemoConfig::default(),
        checks: vec![
            CheckConfig { paths: Some(10_000), ..check(CheckKind::IdentityDensity) },
            CheckConfig { target: Some(TargetKind::DirectQ), ..check(CheckKind::ReweightedExpectation) },
            CheckConfig { target: Some(TargetKind::DirectQ), ..check(CheckKind::DensityMass) },
            CheckConfig { bumps: bumps.clone(), ..check(CheckKind::Martingale) },
            CheckConfig { bumps, ..check(CheckKind::Girsanov) },
            CheckConfig { arm: Some(Arm::P), ..check(CheckKind::KillingCompensator) },
            CheckConfig {
                arm: Some(Arm::Q),
                name: Some("killing-compensator-q".into()),
                ..check(CheckKind::KillingCompensator)
            },
            check(CheckKind::Positivity),
            CheckConfig { grid_points: Some(10), ..check(CheckKind::Supermartingale) },
            CheckConfig { samples: Some(1_000_000), ..check(CheckKind::RatioBounds) },
            CheckConfig { samples: Some(1_000_000), ..check(CheckKind::EntropySign) },
        ],
    };
    assert_eq!(parse_config(&config_text("example.toml")).unwrap(), expected);
}

#[test]
fn shipped_configs_parse() {
    for name in ["identity.toml", "cdc-demo.toml"] {
        parse_config(&config_text(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

fn invalid(text: &str) -> Vec<String> {
    match parse_config(text) {
        Err(ConfigError::Invalid(v)) => v,
        other => panic!("expected constraint errors, got {other:?}"),
    }
}

fn edit(from: &str, to: &str) -> String {
    let text = config_text("example.toml");
    assert!(text.contains(from), "{from}");
    text.replacen(from, to, 1)
}

#[test]
fn zero_tilde_gamma_is_rejected() {
    let text = edit("tilde_gamma0 = 0.1", "tilde_gamma0 = 0.0").replacen("tilde_gamma1 = 0.05", "tilde_gamma1 = 0.0", 1);
    let errs = invalid(&text);
    assert!(errs.iter().any(|e| e.contains("(tilde_gamma0, tilde_gamma1)") && e.contains("(0, 0)")), "{errs:?}");
}

#[test]
fn negative_dt_is_rejected() {
    let errs = invalid(&edit("dt = 0.0009765625", "dt = -0.001"));
    assert!(errs.iter().any(|e| e.starts_with("sim:") && e.contains("dt")), "{errs:?}");
}

#[test]
fn feller_violation_names_the_hypothesis() {
    let errs = invalid(&edit("tilde_b0 = 1.0", "tilde_b0 = 0.25"));
    assert!(errs.iter().any(|e| e.contains("tilde_b0 >= sigma^2/2")), "{errs:?}");
}

#[test]
fn all_errors_are_reported_together() {
    let text = edit("tilde_b0 = 1.0", "tilde_b0 = 0.25").replacen("dt = 0.0009765625", "dt = -1.0", 1);
    assert!(invalid(&text).len() >= 2);
}

#[test]
fn unknown_keys_are_syntax_errors() {
    for (from, to) in [("seed = 20240611", "seed = 20240611\nsede = 1"), ("sigma = 1.0", "sigma = 1.0\nsgima = 1.0")] {
        match parse_config(&edit(from, to)) {
            Err(ConfigError::Syntax(m)) => assert!(m.contains("unknown field"), "{m}"),
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn syntax_errors_carry_a_position() {
    match parse_config("seed = 1\n[model\n") {
        Err(ConfigError::Syntax(m)) => assert!(m.contains("line 2"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn misplaced_check_options_are_rejected() {
    let errs = invalid(&edit("kind = \"positivity\"", "kind = \"positivity\"\nsamples = 3"));
    assert!(errs.iter().any(|e| e.contains("check[7] (positivity)") && e.contains("samples")), "{errs:?}");
}

#[test]
fn identity_suite_exits_zero() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["verify", "--config"])
        .arg(repo_root().join("configs/identity.toml"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stdout));
    for f in ["report.csv", "report.json", "timing.json", "density_mean.csv", "survival.csv", "lambda_hist.csv"] {
        assert!(out.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn corrupted_target_exits_one_and_flags_the_check() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["verify", "--config"])
        .arg(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corrupted.toml"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    let mut rdr = csv::Reader::from_path(out.path().join("report.csv")).unwrap();
    let failed: Vec<String> = rdr
        .records()
        .map(|r| r.unwrap())
        .filter(|r| &r[7] == "false")
        .map(|r| r[0].to_string())
        .collect();
    assert_eq!(failed, ["density-mass"]);
}

#[test]
fn invalid_config_exits_before_simulating() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, edit("tilde_b0 = 1.0", "tilde_b0 = 0.25")).unwrap();
    let out = dir.path().join("out");
    let status = bin().args(["verify", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(jumpdiff_cli::EXIT_CONFIG));
    assert!(!out.exists());
}

#[test]
fn missing_config_is_an_io_error() {
    let status = bin().args(["verify", "--config", "/nonexistent/run.toml"]).status().unwrap();
    assert_eq!(status.code(), Some(jumpdiff_cli::EXIT_IO));
}

#[test]
fn simulate_dumps_paths() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["simulate", "--paths", "4", "--measure", "q", "--config"])
        .arg(repo_root().join("configs/example.toml"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let paths = fs::read_to_string(out.path().join("paths.csv")).unwrap();
    assert!(paths.starts_with("path_id,t,x,status\n0,0e0,1e0,alive\n"));
    assert_eq!(paths.lines().count(), 1 + 4 * 1025);
    let summary = fs::read_to_string(out.path().join("path_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
}

#[test]
fn scan_writes_grid_and_summary() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["scan", "--config"])
        .arg(repo_root().join("configs/example.toml"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let scan = fs::read_to_string(out.path().join("scan.csv")).unwrap();
    assert_eq!(scan.lines().count(), 201);
    let mut rdr = csv::Reader::from_path(out.path().join("scan.csv")).unwrap();
    for r in rdr.records() {
        let r = r.unwrap();
        let v: Vec<f64> = (0..5).map(|i| r[i].parse().unwrap()).collect();
        assert!((0.5 * v[1] + v[2] + v[3] - v[4]).abs() <= 1e-12 * v[4].abs().max(1.0));
        assert!(v[1] >= 0.0 && v[2] >= 0.0 && v[3] >= 0.0);
    }
}
