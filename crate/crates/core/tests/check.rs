use std::path::PathBuf;

use num::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use switchstab::check::certificate::{Certificate, Verdict};
use switchstab::check::replay::{replay, replay_vc, Statement};
use switchstab::check::{check_all, check_vc, falsify, overall, CheckConfig, Overall};
use switchstab::model::{parse_model, SwitchedModel};
use switchstab::poly::Monomial;
use switchstab::rational::{int, rat, Rational};
use switchstab::vcgen::{gen_mlf_state, generate, LyapunovAssignment, Rule, VerificationCondition};

fn fixture(name: &str) -> SwitchedModel {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.ssm"));
    parse_model(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn verdicts(m: &SwitchedModel) -> (Vec<VerificationCondition>, Vec<Verdict>) {
    let vcs = generate(m, Rule::for_model(m)).unwrap();
    let v = check_all(&vcs, &CheckConfig::default()).into_iter().map(|c| c.verdict).collect();
    (vcs, v)
}

/// Exact sign oracle for `a x² + b xy + c y² > 0` away from the origin, on
/// the whole plane or on the cone `xy ≥ 0`.
fn positive_oracle(a: &Rational, b: &Rational, c: &Rational, cone: bool) -> bool {
    let disc = b * b - int(4) * a * c;
    if !cone {
        return a.is_positive() && disc.is_negative();
    }
    // On xy ≥ 0 the form is even, so the first quadrant decides; along rays
    // (1, t), t > 0, it is a + b t + c t².
    a.is_positive() && c.is_positive() && (!b.is_negative() || disc.is_negative())
}

fn coeffs(p: &switchstab::poly::Poly) -> (Rational, Rational, Rational) {
    let at = |e: [u32; 2]| p.coeff(&Monomial(e.to_vec()));
    (at([2, 0]), at([1, 1]), at([0, 2]))
}

#[test]
fn quadratic_verdicts_agree_with_sign_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    let cfg = CheckConfig::default();
    while checked < 500 {
        let cone = rng.gen_bool(0.5);
        let r = |rng: &mut ChaCha8Rng| rng.gen_range(-4i64..=4);
        let (a, b, c) = (r(&mut rng), r(&mut rng), r(&mut rng));
        let f: Vec<i64> = (0..4).map(|_| r(&mut rng)).collect();
        let src = format!(
            "system q {{ var x, y; kind {}; mode p {{ ode {{ x' = {}*x + {}*y; y' = {}*x + {}*y }} {} }} lyapunov p : {a}*x^2 + {b}*x*y + {c}*y^2; }}",
            if cone { "state" } else { "arbitrary" },
            f[0], f[1], f[2], f[3],
            if cone { "domain x*y >= 0" } else { "" },
        );
        let m = parse_model(&src).unwrap();
        let a = LyapunovAssignment::from_model(&m).unwrap();
        let Ok(vcs) = gen_mlf_state(&m, &a) else { continue };
        for vc in vcs.iter().filter(|v| v.id.starts_with("positivity") || v.id.starts_with("decrease")) {
            let p = vc.conclusion.poly().unwrap();
            if p.is_zero() {
                continue;
            }
            let (qa, qb, qc) = coeffs(&p);
            let expect = positive_oracle(&qa, &qb, &qc, cone);
            let verdict = check_vc(vc, &cfg);
            match (&verdict, expect) {
                (Verdict::Proved { .. }, true) | (Verdict::Refuted { .. }, false) => {}
                _ => panic!("{src}\n{}: oracle {expect}, got {verdict:?}", vc.id),
            }
            replay_vc(vc, &verdict).unwrap();
            checked += 1;
        }
    }
}

#[test]
fn corpus_statuses_and_replay() {
    for (name, want) in [
        ("example7", Overall::Proved),
        ("brockett_event", Overall::Proved),
        ("canonical_max_fixed", Overall::Proved),
        ("cruise_pi", Overall::RefutedPremise),
        ("cruise_pi_truncated", Overall::Proved),
        ("timed_demo_short", Overall::RefutedPremise),
        ("timed_demo_long", Overall::Proved),
    ] {
        let (vcs, v) = verdicts(&fixture(name));
        assert_eq!(overall(&v), want, "{name}");
        for (vc, verdict) in vcs.iter().zip(&v) {
            replay_vc(vc, verdict).unwrap_or_else(|e| panic!("{name} {}: {e}", vc.id));
        }
    }
}

#[test]
fn scaling_the_candidate_keeps_verdicts() {
    let m = fixture("example7");
    let a = LyapunovAssignment::from_model(&m).unwrap();
    let cfg = CheckConfig::default();
    let base: Vec<&str> = check_all(&gen_mlf_state(&m, &a).unwrap(), &cfg).iter().map(|c| c.verdict.label()).collect();
    for s in [rat(1, 1000), rat(7, 3), int(250)] {
        let scaled: Vec<&str> =
            check_all(&gen_mlf_state(&m, &a.scaled(&s)).unwrap(), &cfg).iter().map(|c| c.verdict.label()).collect();
        assert_eq!(base, scaled, "scale {s}");
    }
}

#[test]
fn falsify_is_deterministic_per_seed() {
    let m = fixture("cruise_pi");
    let vcs = generate(&m, Rule::Controlled).unwrap();
    let pos = vcs.iter().find(|v| v.id.starts_with("positivity")).unwrap();
    let a = falsify(pos, 100_000, 5).unwrap();
    let b = falsify(pos, 100_000, 5).unwrap();
    assert_eq!(a, b);
    assert!(a.value[0].is_negative());
    replay_vc(pos, &Verdict::Refuted { counterexample: a }).unwrap();
}

#[test]
fn falsify_finds_nothing_on_true_premises() {
    let m = fixture("example7");
    for vc in generate(&m, Rule::MlfState).unwrap() {
        assert!(falsify(&vc, 20_000, 1).is_none(), "{}", vc.id);
    }
}

fn proved(vcs: &[VerificationCondition], v: &[Verdict], pick: impl Fn(&Certificate) -> bool) -> (Statement, Certificate) {
    vcs.iter()
        .zip(v)
        .find_map(|(vc, v)| match v {
            Verdict::Proved { certificate } if pick(certificate) => Some((Statement::of(vc), certificate.clone())),
            _ => None,
        })
        .expect("a matching certificate")
}

#[test]
fn replay_rejects_tampered_pd_factorization() {
    let (vcs, v) = verdicts(&fixture("example7"));
    let (st, cert) = proved(&vcs, &v, |c| matches!(c, Certificate::PdFactorization { .. }));
    replay(&st, &Verdict::Proved { certificate: cert.clone() }).unwrap();
    let Certificate::PdFactorization { vars, l, mut d, strict } = cert.clone() else { unreachable!() };
    d[1] += rat(1, 1_000_000);
    let bad = Certificate::PdFactorization { vars, l, d, strict };
    assert!(replay(&st, &Verdict::Proved { certificate: bad }).is_err());
    let mut other = st.clone();
    other.conclusion[0].poly = "x1^2 - 2*x1*x2 + x2^2".into();
    assert!(replay(&other, &Verdict::Proved { certificate: cert }).is_err());
}

#[test]
fn replay_rejects_tampered_sos_gram() {
    let (vcs, v) = verdicts(&fixture("brockett_event"));
    let (st, cert) = proved(&vcs, &v, |c| matches!(c, Certificate::SosDecomposition(_)));
    let Certificate::SosDecomposition(mut s) = cert else { unreachable!() };
    let i = s.gram.iter().position(|row| row.iter().any(|x| !x.is_zero())).unwrap();
    s.gram[i][i] += rat(1, 3);
    assert!(replay(&st, &Verdict::Proved { certificate: Certificate::SosDecomposition(s) }).is_err());
}

#[test]
fn replay_rejects_tampered_exp_bounds() {
    let (vcs, v) = verdicts(&fixture("timed_demo_long"));
    let (st, cert) = proved(&vcs, &v, |c| matches!(c, Certificate::ExpComparison { .. }));
    let Certificate::ExpComparison { mut bounds, directions, coefficients, main } = cert else { unreachable!() };
    bounds[0].lower = &bounds[0].lower * rat(2, 1);
    bounds[0].upper = &bounds[0].upper * rat(2, 1);
    let bad = Certificate::ExpComparison { bounds, directions, coefficients, main };
    assert!(replay(&st, &Verdict::Proved { certificate: bad }).is_err());
}

#[test]
fn replay_rejects_wrong_counterexample_and_vacuity() {
    let (vcs, v) = verdicts(&fixture("cruise_pi"));
    let (vc, cex) = vcs
        .iter()
        .zip(&v)
        .find_map(|(vc, v)| v.counterexample().map(|c| (vc, c.clone())))
        .unwrap();
    let mut moved = cex.clone();
    for x in moved.point.values_mut() {
        *x = int(1);
    }
    assert!(replay_vc(vc, &Verdict::Refuted { counterexample: moved }).is_err());
    let mut lied = cex;
    lied.value = vec![int(-1)];
    assert!(replay_vc(vc, &Verdict::Refuted { counterexample: lied }).is_err());
    assert!(replay_vc(vc, &Verdict::Proved { certificate: Certificate::Vacuous }).is_err());
}

#[test]
fn replayer_uses_no_floating_point() {
    let src = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("src/check/replay.rs")).unwrap();
    let body = src.split("#[cfg(test)]").next().unwrap();
    for word in ["f64", "f32", "as_f64", "to_f64"] {
        assert!(!body.contains(word), "replay.rs mentions {word}");
    }
    assert!(!body.contains("use crate::check::sos") && !body.contains("super::sos"));
}
