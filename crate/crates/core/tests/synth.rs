use std::path::PathBuf;

use num::BigInt;
use switchstab::check::replay::replay_vc;
use switchstab::check::{check_all, overall, CheckConfig, Overall};
use switchstab::model::{parse_model, SwitchedModel};
use switchstab::rational::rat;
use switchstab::sdp::SdpStatus;
use switchstab::synth::{
    annotations, candidates, rationalize, synth_common_quadratic, synth_multiple, truncate_small_terms, NumericSolution,
    SynthError,
};
use switchstab::vcgen::{gen_clf, gen_mlf_state, VerificationCondition};

fn fixture(name: &str) -> SwitchedModel {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.ssm"));
    parse_model(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn proved_and_replayed(vcs: &[VerificationCondition]) -> Overall {
    let checked = check_all(vcs, &CheckConfig::default());
    for (vc, c) in vcs.iter().zip(&checked) {
        replay_vc(vc, &c.verdict).unwrap();
    }
    overall(checked.iter().map(|c| &c.verdict))
}

#[test]
fn example7_multiple_candidates_verify_exactly() {
    let m = fixture("example7");
    let a = synth_multiple(&m).expect("candidates");
    assert_eq!(a.functions.len(), 2);
    assert_eq!(proved_and_replayed(&gen_mlf_state(&m, &a).unwrap()), Overall::Proved);
    let text = annotations(&a.functions);
    assert!(text.starts_with("lyapunov p : ") && text.contains("lyapunov q : "));
}

#[test]
fn example7_has_no_common_quadratic() {
    assert!(synth_common_quadratic(&fixture("example7")).is_none());
}

#[test]
fn stable_pair_gets_a_common_quadratic() {
    let m = parse_model(
        "system pair { var x, y; kind arbitrary;
           mode a { ode { x' = -x; y' = -2*y } }
           mode b { ode { x' = -2*x + y; y' = -x - 2*y } } }",
    )
    .unwrap();
    let c = synth_common_quadratic(&m).expect("common candidate");
    let v = c["a"].clone();
    assert_eq!(c["b"], v);
    assert_eq!(proved_and_replayed(&gen_clf(&m, &v).unwrap()), Overall::Proved);
}

#[test]
fn rationalize_rejects_non_finite() {
    let n = NumericSolution {
        vars: vec!["x".into()],
        modes: vec!["a".into()],
        coefficients: vec![f64::NAN],
        status: SdpStatus::Optimal,
        margin: 0.0,
    };
    assert!(matches!(rationalize(&n, &BigInt::from(1000)), Err(SynthError::NonFinite { index: 0, .. })));
    let ok = NumericSolution { coefficients: vec![0.333333333], ..n };
    assert_eq!(candidates(&ok, &BigInt::from(100)).unwrap()["a"].to_string(), "1/3*x^2");
}

#[test]
fn truncation_drops_only_the_float_noise() {
    let m = fixture("cruise_pi");
    let v = m.lyapunov_for("normalPI").unwrap();
    let (t, report) = truncate_small_terms(v, &rat(1, 10_000_000_000)).unwrap();
    assert_eq!(report.kept, 3);
    let dropped: Vec<&str> = report.dropped.iter().map(|(m, _)| m.as_str()).collect();
    assert_eq!(dropped, ["intV", "relV"]);
    assert!(t.is_homogeneous(2));
    let trunc = fixture("cruise_pi_truncated");
    assert_eq!(&t, trunc.lyapunov_for("normalPI").unwrap());
}

#[test]
fn truncation_errors() {
    let m = fixture("example7");
    let v = m.lyapunov_for("p").unwrap();
    assert!(matches!(truncate_small_terms(&(v - v), &rat(1, 10)), Err(SynthError::ZeroPolynomial)));
    assert!(matches!(truncate_small_terms(v, &rat(2, 1)), Err(SynthError::AllTermsDropped)));
}
