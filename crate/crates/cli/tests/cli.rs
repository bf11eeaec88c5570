use std::path::Path;
use std::process::{Command, Output};

use hodge_verify::config::{self, Suite};
use hodge_verify::emit::CSV_HEADER;
use hodge_verify::{suites, VerifyError};

fn hodge_verify(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hodge-verify"));
    cmd.args(args);
    if let Some(path) = config {
        cmd.arg("--config").arg(path);
    }
    cmd.output().expect("binary runs")
}

#[test]
fn solver_run_writes_table_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("solver.toml");
    std::fs::write(&cfg, "schema = 1\n[[experiment]]\nsuite = \"solver\"\nladder = [0.125, 0.0625]\n").unwrap();
    let out = dir.path().join("out");
    let run = hodge_verify(&["solver", "--out", out.to_str().unwrap()], Some(&cfg));
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("PASS solver"));

    let table = std::fs::read_to_string(out.join("solver.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    assert!(lines.all(|l| l.split(',').count() == CSV_HEADER.len()));
    let svg = std::fs::read_to_string(out.join("solver-convergence.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("slope = "));
}

#[test]
fn subcommand_without_matching_experiment_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("weights.toml");
    std::fs::write(&cfg, "schema = 1\n[[experiment]]\nsuite = \"weights\"\n").unwrap();
    let run = hodge_verify(&["decay", "--quiet"], Some(&cfg));
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("no experiment matches"));
}

#[test]
fn malformed_config_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "schema = 9\n").unwrap();
    let run = hodge_verify(&["all"], Some(&cfg));
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("schema 9 unsupported"));
}

#[test]
fn unknown_suite_is_rejected() {
    let err = config::parse("schema = 1\n[[experiment]]\nsuite = \"spectra\"\n").unwrap_err();
    assert!(matches!(err, VerifyError::Config(_)));
}

#[test]
fn decay_with_too_few_radii_reports_dyadic_range() {
    let mut cfg = hodge_verify::ExperimentConfig::builtin(Suite::Decay);
    cfg.ladder = vec![0.125, 0.0625];
    match suites::run(&cfg) {
        Err(VerifyError::DyadicRange { needed, found }) => assert!(found < needed),
        other => panic!("expected a dyadic range error, got {other:?}"),
    }
}

#[test]
fn lambda_on_the_spectrum_is_rejected() {
    let mut cfg = hodge_verify::ExperimentConfig::builtin(Suite::Apriori);
    cfg.ladder = vec![0.125];
    cfg.lambda = 0.0;
    let base = suites::run(&cfg).unwrap();
    assert!(base.passed());

    // place λ on the smallest tangential eigenvalue of the coarsest grid
    let sig = cfg.degrees.signature();
    let d = suites::build_domain(&cfg.domain, sig.dim, cfg.ladder[0]).unwrap();
    let (a, b) = suites::sample_coefficients(&d, cfg.coefficients, sig).unwrap();
    let mu = hodge_core::HodgeSystem::assemble(&a, &b, 0.0, hodge_core::FaceCondition::Tangential)
        .unwrap()
        .spectrum(1)
        .unwrap()
        .eigenvalues[0];
    cfg.lambda = mu;
    assert!(matches!(suites::run(&cfg), Err(VerifyError::SpectrumProximity { .. })));
}
