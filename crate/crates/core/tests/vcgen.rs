use std::path::PathBuf;

use switchstab::model::{parse_expr, parse_model, SwitchedModel};
use switchstab::rational::{int, rat, Rational};
use switchstab::vcgen::{condition_groups, dwell_exponent, generate, Family, Rule, VcError, VcKind};

fn load(name: &str) -> SwitchedModel {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.ssm"));
    parse_model(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn default_rules_by_kind() {
    assert_eq!(Rule::for_model(&load("example7")), Rule::MlfState);
    assert_eq!(Rule::for_model(&load("brockett_event")), Rule::Restricted);
    assert_eq!(Rule::for_model(&load("timed_demo")), Rule::MlfTimed);
    assert_eq!(Rule::for_model(&load("cruise_pi")), Rule::Controlled);
}

#[test]
fn example7_compatibility_difference() {
    let m = load("example7");
    let vcs = generate(&m, Rule::MlfState).unwrap();
    let compat = vcs.iter().find(|v| v.id == "compat[p,q]+").unwrap();
    let expected = parse_expr("-33/10*x1*x2", &m.state_vars).unwrap();
    assert_eq!(compat.conclusion.poly().unwrap(), expected);
    assert_eq!(compat.hypothesis.to_string(), "x1*x2 = 0");
    assert!(condition_groups(&vcs) >= 5);
}

#[test]
fn ids_are_unique_and_vars_cover_free_variables() {
    for name in ["example7", "brockett_event", "canonical_max_fixed", "cruise_pi", "timed_demo_long"] {
        let m = load(name);
        let vcs = generate(&m, Rule::for_model(&m)).unwrap();
        let mut ids: Vec<&str> = vcs.iter().map(|v| v.id.as_str()).collect();
        ids.sort();
        let n = ids.len();
        ids.dedup();
        assert_eq!(ids.len(), n, "{name}");
        for vc in &vcs {
            for v in vc.hypothesis.used_vars() {
                assert!(vc.vars.contains(&v), "{name} {}: {v}", vc.id);
            }
            for (_, p) in vc.conclusion.expr.parts() {
                for v in p.used_vars() {
                    assert!(vc.vars.contains(&v), "{name} {}: {v}", vc.id);
                }
            }
            assert!(!vc.conclusion.expr.is_zero(), "{name} {}", vc.id);
        }
    }
}

#[test]
fn only_timed_conditions_carry_exponentials() {
    for name in ["example7", "brockett_event", "canonical_max_fixed", "cruise_pi"] {
        let m = load(name);
        assert!(generate(&m, Rule::for_model(&m)).unwrap().iter().all(|v| !v.conclusion.expr.has_exp()), "{name}");
    }
    let m = load("timed_demo_short");
    assert!(generate(&m, Rule::MlfTimed).unwrap().iter().any(|v| v.conclusion.expr.has_exp()));
}

#[test]
fn dwell_exponent_demo_values() {
    let (ls, lu, one) = (int(2), int(-2), int(1));
    let e = |fam, theta: &Rational| dwell_exponent(fam, &ls, &lu, theta, None, Some(&one), &one);
    assert_eq!(e(Family::Stability, &one), int(0));
    assert_eq!(e(Family::Stability, &rat(2, 5)), rat(-6, 5));
    assert_eq!(e(Family::Attractivity, &one), int(-1));
}

#[test]
fn dwell_exponent_is_monotone_in_theta_for_stable_sources() {
    // sigma stays below every stable rate, as the rule requires.
    let sigma = rat(1, 4);
    for lp in [rat(1, 3), int(1), int(5)] {
        for lq in [int(-3), int(-1), int(2)] {
            for fam in [Family::Stability, Family::Attractivity] {
                let mut last = None;
                for k in 0..20 {
                    let theta = rat(k, 4);
                    let e = dwell_exponent(fam, &lp, &lq, &theta, None, Some(&int(1)), &sigma);
                    if let Some(prev) = &last {
                        assert!(&e >= prev);
                    }
                    last = Some(e);
                }
            }
        }
    }
}

#[test]
fn raw_dwell_text_is_kept_for_audit() {
    let m = load("timed_demo_short");
    let vcs = generate(&m, Rule::MlfTimed).unwrap();
    let dwell: Vec<_> = vcs.iter().filter(|v| v.audit.is_some()).collect();
    assert!(!dwell.is_empty());
    assert!(dwell.iter().all(|v| v.audit.as_ref().unwrap().starts_with("forall tau in [")));
}

#[test]
fn unstable_mode_needs_max_dwell() {
    let src = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/timed_demo.ssm"))
        .unwrap()
        .replace("maxdwell 1", "");
    let m = parse_model(&src).unwrap();
    assert!(matches!(generate(&m, Rule::MlfTimed), Err(VcError::UnstableWithoutMaxDwell(u)) if u == "u"));
}

#[test]
fn rule_kind_mismatch_is_an_error() {
    assert!(matches!(generate(&load("timed_demo"), Rule::MlfGuarded), Err(VcError::KindMismatch { .. })));
}

#[test]
fn brockett_invariance_conditions() {
    let m = load("brockett_event");
    let vcs = generate(&m, Rule::Restricted).unwrap();
    let inv: Vec<_> = vcs.iter().filter(|v| matches!(v.kind, VcKind::Invariance { .. })).collect();
    assert!(inv.iter().any(|v| matches!(&v.kind, VcKind::Invariance { mode, .. } if mode == "A")));
}
