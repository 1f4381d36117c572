//! Deciding verification conditions with exact certificates.

pub mod certificate;
pub mod expcheck;
pub mod falsify;
pub mod invariance;
pub mod ldl;
pub mod quadratic;
pub mod replay;
pub mod sos;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::time::Instant;

use num::{Signed, Zero};

use crate::model::predicate::Cmp;
use crate::poly::{Poly, VarList};
use crate::rational::{pow2, Rational};
use crate::vcgen::{VcKind, VerificationCondition};
use certificate::{Certificate, Counterexample, Verdict};

pub use expcheck::check_exp_vc;
pub use falsify::falsify;
pub use invariance::check_set_invariance;
pub use quadratic::check_pd_quadratic;

pub const MAX_SOS_DEGREE: u32 = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckConfig {
    /// Multiplier degree bound for the S-procedure.
    pub sos_degree: u32,
    pub falsify_budget: usize,
    pub seed: u64,
    pub exp_terms: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { sos_degree: 2, falsify_budget: 20_000, seed: 0, exp_terms: crate::expo::DEFAULT_EXP_TERMS }
    }
}

impl CheckConfig {
    fn degree(&self) -> u32 {
        self.sos_degree.min(MAX_SOS_DEGREE)
    }

    /// Per-VC seed, so results do not depend on checking order.
    pub fn seed_for(&self, id: &str) -> u64 {
        let mut h = DefaultHasher::new();
        id.hash(&mut h);
        self.seed ^ h.finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum Overall {
    Proved,
    #[serde(rename = "Refuted-Premise")]
    RefutedPremise,
    Inconclusive,
}

impl Overall {
    pub fn label(self) -> &'static str {
        match self {
            Overall::Proved => "Proved",
            Overall::RefutedPremise => "Refuted-Premise",
            Overall::Inconclusive => "Inconclusive",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Overall::Proved => 0,
            Overall::RefutedPremise => 1,
            Overall::Inconclusive => 2,
        }
    }
}

impl std::fmt::Display for Overall {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

pub fn overall<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> Overall {
    let mut out = Overall::Proved;
    for v in verdicts {
        match v {
            Verdict::Refuted { .. } => return Overall::RefutedPremise,
            Verdict::Inconclusive { .. } => out = Overall::Inconclusive,
            Verdict::Proved { .. } => {}
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct CheckedVc {
    pub verdict: Verdict,
    pub millis: u128,
}

/// Checks every VC, fanning out over the available cores. Output order
/// matches input order.
pub fn check_all(vcs: &[VerificationCondition], cfg: &CheckConfig) -> Vec<CheckedVc> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(vcs.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<CheckedVc>>> = vcs.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= vcs.len() {
                    break;
                }
                let t = Instant::now();
                let verdict = check_vc(&vcs[i], cfg);
                *slots[i].lock().expect("slot") = Some(CheckedVc { verdict, millis: t.elapsed().as_millis() });
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot").expect("checked")).collect()
}

/// Origin fast check, quadratic fast path, SOS, exponential comparison, then
/// falsification.
pub fn check_vc(vc: &VerificationCondition, cfg: &CheckConfig) -> Verdict {
    match &vc.kind {
        VcKind::OriginZero => check_origin(vc),
        VcKind::Radial => check_radial(vc, cfg),
        VcKind::Invariance { field, .. } => {
            let Some(p) = vc.conclusion.poly() else {
                return Verdict::inconclusive("invariance of a non-polynomial set");
            };
            invariance::invariance_verdict(field, &vc.hypothesis, &p, vc.conclusion.cmp, cfg)
        }
        VcKind::Implication => check_implication(vc, cfg),
    }
}

fn check_origin(vc: &VerificationCondition) -> Verdict {
    let Some(p) = vc.conclusion.poly() else {
        return Verdict::inconclusive("origin check of a non-polynomial expression");
    };
    let point = vc.origin_point();
    match p.evaluate(&point) {
        Ok(v) if v.is_zero() => Verdict::Proved {
            certificate: Certificate::Evaluation {
                point: point.keys().map(|k| (k.clone(), "0".to_string())).collect(),
                value: v,
            },
        },
        Ok(v) => Verdict::Refuted { counterexample: Counterexample { vc: vc.id.clone(), point, value: vec![v] } },
        Err(e) => Verdict::inconclusive(e.to_string()),
    }
}

/// Sufficient criterion: the top homogeneous part is positive definite.
fn check_radial(vc: &VerificationCondition, cfg: &CheckConfig) -> Verdict {
    let Some(p) = vc.conclusion.poly() else {
        return Verdict::inconclusive("radial unboundedness of a non-polynomial expression");
    };
    let d = p.total_degree();
    let top = p.homogeneous_part(d);
    let inconclusive = || Verdict::inconclusive(format!("top-degree part of {p} is not certified positive definite"));
    if d == 0 || d % 2 == 1 || top.used_vars().iter().any(|v| !vc.state_vars.contains(v)) {
        return inconclusive();
    }
    let vars = vc.state_vars.clone();
    if d == 2 {
        let Some(q) = quadratic::quadratic_matrix(&top, &vars) else { return inconclusive() };
        return match quadratic::pd_verdict(&vc.id, &vars, &q, true) {
            Ok(Verdict::Proved { certificate }) => {
                Verdict::Proved { certificate: Certificate::Radial { degree: d, top: Box::new(certificate) } }
            }
            _ => inconclusive(),
        };
    }
    if !sphere_positive(&top, &vars) {
        return inconclusive();
    }
    let mut q = sos::SosQuery::new(vars.clone().into(), top.clone());
    q.strict = Some(vars);
    match sos::search(&q, cfg.degree()) {
        Some(c) => Verdict::Proved {
            certificate: Certificate::Radial { degree: d, top: Box::new(Certificate::SosDecomposition(c)) },
        },
        None => inconclusive(),
    }
}

/// Deterministic sampling of the unit sphere.
fn sphere_positive(p: &Poly, vars: &[String]) -> bool {
    use rand::{Rng, SeedableRng};
    let f = p.compile(vars);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    (0..2000).all(|_| {
        let mut x: Vec<f64> = (0..vars.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n < 1e-9 {
            return true;
        }
        x.iter_mut().for_each(|v| *v /= n);
        f.eval(&x) > 0.0
    })
}

fn check_implication(vc: &VerificationCondition, cfg: &CheckConfig) -> Verdict {
    if vc.hypothesis.is_false() {
        return Verdict::Proved { certificate: Certificate::Vacuous };
    }
    if vc.conclusion.expr.has_exp() {
        return exp_verdict(vc, cfg);
    }
    if let Some(v) = quadratic_fast_path(vc) {
        return v;
    }
    if let Some(c) = sos_certificate(vc, cfg.degree()) {
        return Verdict::Proved { certificate: c };
    }
    refute_or(vc, cfg, || format!("no certificate with multiplier degree <= {} and no counterexample found", cfg.degree()))
}

fn refute_or(vc: &VerificationCondition, cfg: &CheckConfig, reason: impl FnOnce() -> String) -> Verdict {
    match falsify::falsify(vc, cfg.falsify_budget, cfg.seed_for(&vc.id)) {
        Some(counterexample) => Verdict::Refuted { counterexample },
        None => Verdict::inconclusive(reason()),
    }
}

fn exp_verdict(vc: &VerificationCondition, cfg: &CheckConfig) -> Verdict {
    match expcheck::check_exp_vc(vc, cfg.degree(), cfg.exp_terms) {
        Some(certificate) => Verdict::Proved { certificate },
        None => refute_or(vc, cfg, || {
            format!("enclosure comparison failed up to {} terms and no counterexample found", 4 * cfg.exp_terms)
        }),
    }
}

/// Putinar-style certificate per hypothesis disjunct.
pub fn check_sos_certificate(vc: &VerificationCondition, degree: u32) -> Verdict {
    match sos_certificate(vc, degree.min(MAX_SOS_DEGREE)) {
        Some(certificate) => Verdict::Proved { certificate },
        None => Verdict::inconclusive(format!("no certificate with multiplier degree <= {degree}")),
    }
}

fn sos_certificate(vc: &VerificationCondition, degree: u32) -> Option<Certificate> {
    let target = vc.conclusion.poly()?;
    if vc.conclusion.cmp == Cmp::Eq {
        return None;
    }
    let vars: VarList = vc.vars.clone().into();
    let strict = vc.conclusion.strict().then(|| if vc.excluded_origin { vc.state_vars.clone() } else { Vec::new() });
    let mut cases = Vec::new();
    for clause in vc.hypothesis.clauses() {
        let q = expcheck::query(&vars, &target, clause, strict.clone());
        cases.push(Certificate::SosDecomposition(sos::search(&q, degree)?));
    }
    Some(if cases.len() == 1 { cases.pop().expect("one") } else { Certificate::Cases { cases } })
}

/// A quadratic form in the state variables: definiteness decides the VC when
/// it holds globally; an indefinite witness is scaled into the hypothesis.
fn quadratic_fast_path(vc: &VerificationCondition) -> Option<Verdict> {
    let p = vc.conclusion.poly()?;
    if vc.conclusion.cmp == Cmp::Eq || !p.is_homogeneous(2) || p.is_zero() {
        return None;
    }
    let vars = vc.state_vars.clone();
    if p.used_vars().iter().any(|v| !vars.contains(v)) {
        return None;
    }
    let strict = vc.conclusion.strict();
    if strict && !vc.excluded_origin {
        return None;
    }
    let q = quadratic::quadratic_matrix(&p, &vars)?;
    match quadratic::pd_verdict(&vc.id, &vars, &q, strict).ok()? {
        v @ Verdict::Proved { .. } => Some(v),
        Verdict::Refuted { counterexample } => {
            // Homogeneity: scaling the witness keeps the sign of p.
            for k in 0..64 {
                let s: Rational = pow2(-k);
                let mut point = counterexample.point.clone();
                point.values_mut().for_each(|x| *x *= &s);
                for v in &vc.vars {
                    point.entry(v.clone()).or_insert_with(Rational::zero);
                }
                if vc.hypothesis.holds(&point).unwrap_or(false) {
                    let value = p.evaluate(&point).ok()?;
                    let violated = if strict { !value.is_positive() } else { value.is_negative() };
                    if violated && point.iter().any(|(k, x)| vars.contains(k) && !x.is_zero()) {
                        return Some(Verdict::Refuted {
                            counterexample: Counterexample { vc: vc.id.clone(), point, value: vec![value] },
                        });
                    }
                }
            }
            None
        }
        Verdict::Inconclusive { .. } => None,
    }
}
