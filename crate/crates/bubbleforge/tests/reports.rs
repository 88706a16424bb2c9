use bubbleforge::commands::{cmd_constants, cmd_delta, cmd_verify};
use bubbleforge::exec::PoolExecutor;
use bubbleforge::report::{Check, Provenance, Report};
use bubbleforge::{CliError, RunParams, Suite};
use bubbleforge_core::quadrature::Quadrature;

#[test]
fn check_passes_only_within_tolerance() {
    assert!(Check::new("s", "a", 1e-12, 1e-9, Provenance::Paper).passed);
    assert!(!Check::new("s", "a", 1e-6, 1e-9, Provenance::Paper).passed);
    assert!(!Check::new("s", "a", f64::NAN, 1e-9, Provenance::Paper).passed);
}

#[test]
fn exit_code_prefers_non_convergence() {
    let mut r = Report::new("verify");
    assert_eq!(r.exit_code(), 0);
    r.push_check(Check::new("s", "bad", 2.0, 1.0, Provenance::Fitted));
    assert_eq!(r.exit_code(), 1);
    r.push_check(Check::new("s", "slow", 0.0, 1.0, Provenance::Fitted).converged(false));
    assert_eq!(r.exit_code(), 3);
}

#[test]
fn json_is_stable() {
    let a = cmd_constants(4).unwrap();
    let b = cmd_constants(4).unwrap();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    a.write_json(&mut x).unwrap();
    b.write_json(&mut y).unwrap();
    assert_eq!(x, y);
    let v: serde_json::Value = serde_json::from_slice(&x).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "constants");
}

#[test]
fn quantities_csv() {
    let r = cmd_delta(-10.0).unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("name,value,tolerance,provenance\n"));
    assert!(text.contains("residual,"));
    assert!(text.contains(",derived-oracle"));
}

#[test]
fn out_of_range_inputs_are_usage_errors() {
    assert_eq!(cmd_constants(1).unwrap_err().exit_code(), 2);
    assert!(matches!(cmd_delta(-1.0), Err(CliError::Usage(_))));
    let p = RunParams {
        delta: Some(0.5),
        ..RunParams::default()
    };
    assert!(matches!(p.validate(), Err(CliError::Usage(_))));
}

#[test]
fn pool_and_sequential_agree() {
    let p = RunParams::default();
    let seq = cmd_verify(Suite::Zkt, &p, &Quadrature::new(p.spec)).unwrap();
    let pool = PoolExecutor::new(Some(3)).unwrap();
    let par = cmd_verify(Suite::Zkt, &p, &Quadrature::with_executor(p.spec, &pool)).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn regime_warning_window() {
    assert!(RunParams::regime_warning(-1.4).is_some());
    assert!(RunParams::regime_warning(-1.5).is_none());
    assert!(RunParams::regime_warning(-1.0).is_none());
}
