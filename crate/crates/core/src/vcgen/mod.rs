//! Verification-condition generation for the Lyapunov proof rules.
//!
//! Every premise is emitted as `hypothesis → conclusion ⋈ 0` over the
//! model's variables. Strict premises that only need to hold away from the
//! origin carry `excluded_origin`; their value at the origin is emitted as a
//! separate [`VcKind::OriginZero`] condition when the origin can be reached.

mod timed;

use std::collections::BTreeMap;
use std::fmt;

use num::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::expo::ExpPoly;
use crate::model::predicate::{Atom, Cmp, Predicate};
use crate::model::{to_program, Kind, SwitchedModel};
use crate::poly::{lie_derivative, Poly, PolyError, VectorField};
use crate::rational::Rational;

pub use timed::{dwell_exponent, Family};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Clf,
    MlfState,
    MlfGuarded,
    MlfTimed,
    Controlled,
    Restricted,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Clf => "clf",
            Rule::MlfState => "mlf-state",
            Rule::MlfGuarded => "mlf-guarded",
            Rule::MlfTimed => "mlf-timed",
            Rule::Controlled => "controlled",
            Rule::Restricted => "restricted",
        }
    }

    pub fn from_name(s: &str) -> Option<Rule> {
        [Rule::Clf, Rule::MlfState, Rule::MlfGuarded, Rule::MlfTimed, Rule::Controlled, Rule::Restricted]
            .into_iter()
            .find(|r| r.name() == s)
    }

    /// Default rule for a model: its kind, a common candidate, a region.
    pub fn for_model(m: &SwitchedModel) -> Rule {
        match m.kind {
            Kind::Arbitrary => Rule::Clf,
            Kind::StateDependent if m.region.is_some() => Rule::Restricted,
            Kind::StateDependent if m.lyapunov.is_empty() && m.common_lyapunov.is_some() => Rule::Clf,
            Kind::StateDependent => Rule::MlfState,
            Kind::Guarded => Rule::MlfGuarded,
            Kind::Timed => Rule::MlfTimed,
            Kind::Controlled => Rule::Controlled,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Origin {
    pub rule: Rule,
    pub premise: String,
    pub modes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum VcKind {
    /// `hypothesis → conclusion`.
    Implication,
    /// The conclusion polynomial vanishes at the origin.
    OriginZero,
    /// The conclusion polynomial is radially unbounded.
    Radial,
    /// `{conclusion ⋈ 0}` is invariant under `field` within `hypothesis`.
    Invariance { mode: String, field: VectorField },
}

impl VcKind {
    pub fn label(&self) -> &'static str {
        match self {
            VcKind::Implication => "implication",
            VcKind::OriginZero => "origin-zero",
            VcKind::Radial => "radial",
            VcKind::Invariance { .. } => "invariance",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Conclusion {
    pub expr: ExpPoly,
    pub cmp: Cmp,
}

impl Conclusion {
    pub fn poly(&self) -> Option<Poly> {
        self.expr.as_poly()
    }

    pub fn strict(&self) -> bool {
        self.cmp == Cmp::Gt
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationCondition {
    pub id: String,
    pub origin: Origin,
    pub kind: VcKind,
    /// Quantified variables.
    pub vars: Vec<String>,
    /// Variables whose joint vanishing is excluded (`‖x‖ > 0`).
    pub state_vars: Vec<String>,
    pub hypothesis: Predicate,
    pub conclusion: Conclusion,
    pub excluded_origin: bool,
    /// Unsimplified premise text, kept for dwell conditions.
    pub audit: Option<String>,
}

impl VerificationCondition {
    fn new(
        id: String,
        origin: Origin,
        kind: VcKind,
        state_vars: &[String],
        hypothesis: Predicate,
        expr: ExpPoly,
        cmp: Cmp,
        excluded_origin: bool,
    ) -> Self {
        let mut vars: Vec<String> = Vec::new();
        let mut add = |v: String| {
            if !vars.contains(&v) {
                vars.push(v);
            }
        };
        if excluded_origin || matches!(kind, VcKind::OriginZero) {
            state_vars.iter().cloned().for_each(&mut add);
        }
        hypothesis.used_vars().into_iter().for_each(&mut add);
        for (_, p) in expr.parts() {
            p.used_vars().into_iter().for_each(&mut add);
        }
        if let VcKind::Invariance { field, .. } = &kind {
            for (v, p) in field.entries() {
                add(v.clone());
                p.used_vars().into_iter().for_each(&mut add);
            }
        }
        VerificationCondition {
            id,
            origin,
            kind,
            vars,
            state_vars: state_vars.to_vec(),
            hypothesis,
            conclusion: Conclusion { expr, cmp },
            excluded_origin,
            audit: None,
        }
    }

    /// Points where the premise must hold: origin excluded when flagged.
    pub fn origin_point(&self) -> BTreeMap<String, Rational> {
        self.vars.iter().map(|v| (v.clone(), Rational::zero())).collect()
    }

    pub fn group(&self) -> (String, Vec<String>) {
        (self.origin.premise.clone(), self.origin.modes.clone())
    }
}

impl fmt::Display for VerificationCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let guard = if self.excluded_origin { " & |x| > 0" } else { "" };
        match &self.kind {
            VcKind::OriginZero => write!(f, "[{}] ({})(0) = 0", self.id, self.conclusion.expr),
            VcKind::Radial => write!(f, "[{}] {} radially unbounded", self.id, self.conclusion.expr),
            VcKind::Invariance { mode, .. } => write!(
                f,
                "[{}] {} {} 0 invariant in mode {mode} on {}",
                self.id,
                self.conclusion.expr,
                self.conclusion.cmp.symbol(),
                self.hypothesis
            ),
            VcKind::Implication => write!(
                f,
                "[{}] {}{guard} -> {} {} 0",
                self.id,
                self.hypothesis,
                self.conclusion.expr,
                self.conclusion.cmp.symbol()
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VcError {
    #[error("rule {rule} does not apply to {kind} models")]
    KindMismatch { rule: Rule, kind: Kind },
    #[error("no Lyapunov candidate for mode `{0}`")]
    MissingLyapunov(String),
    #[error("no rate for mode `{0}` (timed models need `rate` annotations)")]
    MissingRate(String),
    #[error("mode `{0}` has rate <= 0 and needs a max dwell time")]
    UnstableWithoutMaxDwell(String),
    #[error("no stable mode to default sigma from; give `sigma` explicitly")]
    NoStableMode,
    #[error("sigma must be positive and below every stable rate")]
    BadSigma,
    #[error("a region is required for the restricted rule")]
    MissingRegion,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Per-mode candidates with optional rates and attractivity constant.
#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovAssignment {
    pub functions: BTreeMap<String, Poly>,
    pub rates: BTreeMap<String, Rational>,
    pub sigma: Option<Rational>,
}

impl LyapunovAssignment {
    pub fn common(m: &SwitchedModel, v: &Poly) -> Self {
        LyapunovAssignment {
            functions: m.modes.iter().map(|p| (p.id.clone(), v.clone())).collect(),
            rates: m.rates.clone(),
            sigma: m.sigma.clone(),
        }
    }

    /// From the model's annotations; every mode needs a candidate.
    pub fn from_model(m: &SwitchedModel) -> Result<Self, VcError> {
        let mut functions = BTreeMap::new();
        for p in &m.modes {
            let v = m.lyapunov_for(&p.id).ok_or_else(|| VcError::MissingLyapunov(p.id.clone()))?;
            functions.insert(p.id.clone(), v.clone());
        }
        Ok(LyapunovAssignment { functions, rates: m.rates.clone(), sigma: m.sigma.clone() })
    }

    pub fn get(&self, mode: &str) -> Result<&Poly, VcError> {
        self.functions.get(mode).ok_or_else(|| VcError::MissingLyapunov(mode.to_string()))
    }

    pub fn scaled(&self, s: &Rational) -> Self {
        LyapunovAssignment {
            functions: self.functions.iter().map(|(k, v)| (k.clone(), v.scale(s))).collect(),
            rates: self.rates.clone(),
            sigma: self.sigma.clone(),
        }
    }
}

struct Emitter<'a> {
    m: &'a SwitchedModel,
    rule: Rule,
    out: Vec<VerificationCondition>,
}

impl<'a> Emitter<'a> {
    fn new(m: &'a SwitchedModel, rule: Rule) -> Self {
        Emitter { m, rule, out: Vec::new() }
    }

    fn origin(&self, premise: &str, modes: &[&str]) -> Origin {
        Origin {
            rule: self.rule,
            premise: premise.to_string(),
            modes: modes.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        id: String,
        premise: &str,
        modes: &[&str],
        kind: VcKind,
        hypothesis: Predicate,
        expr: ExpPoly,
        cmp: Cmp,
        excluded_origin: bool,
    ) {
        if cmp != Cmp::Gt && kind == VcKind::Implication && expr.is_zero() {
            return;
        }
        let origin = self.origin(premise, modes);
        self.out.push(VerificationCondition::new(
            id,
            origin,
            kind,
            &self.m.state_vars,
            hypothesis,
            expr,
            cmp,
            excluded_origin,
        ));
    }

    fn origin_in(&self, p: &Predicate) -> bool {
        let zero: BTreeMap<String, Rational> =
            self.m.all_vars().into_iter().map(|v| (v, Rational::zero())).collect();
        p.closure().holds(&zero).unwrap_or(false)
    }

    fn origin_hypothesis(&self) -> Predicate {
        let vars = self.m.var_list();
        self.m.state_vars.iter().fold(Predicate::truth(), |acc, v| {
            acc.and(&Predicate::atom(Atom::eq(Poly::var(vars.clone(), v))))
        })
    }

    /// `V(0) = 0` (when the origin is in `hyp`) and `hyp ∧ ‖x‖>0 → V > 0`.
    fn positivity(&mut self, tag: &str, modes: &[&str], v: &Poly, hyp: &Predicate) {
        let hyp = hyp.closure();
        if self.origin_in(&hyp) {
            let oh = self.origin_hypothesis();
            self.push(
                format!("origin{tag}"),
                "positivity",
                modes,
                VcKind::OriginZero,
                oh,
                ExpPoly::from_poly(v.clone()),
                Cmp::Eq,
                false,
            );
        }
        self.push(
            format!("positivity{tag}"),
            "positivity",
            modes,
            VcKind::Implication,
            hyp,
            ExpPoly::from_poly(v.clone()),
            Cmp::Gt,
            true,
        );
    }

    fn radial(&mut self, tag: &str, modes: &[&str], v: &Poly) {
        self.push(
            format!("radial{tag}"),
            "radial",
            modes,
            VcKind::Radial,
            Predicate::truth(),
            ExpPoly::from_poly(v.clone()),
            Cmp::Gt,
            false,
        );
    }

    /// `L V(0) = 0` and `hyp ∧ ‖x‖>0 → L V < 0` (emitted as `-L V > 0`).
    fn decrease(&mut self, premise: &str, tag: &str, modes: &[&str], v: &Poly, field: &VectorField, hyp: &Predicate) -> Result<(), VcError> {
        let lie = lie_derivative(v, field)?;
        let hyp = hyp.closure();
        if self.origin_in(&hyp) {
            let oh = self.origin_hypothesis();
            self.push(
                format!("lie-origin{tag}"),
                premise,
                modes,
                VcKind::OriginZero,
                oh,
                ExpPoly::from_poly(lie.clone()),
                Cmp::Eq,
                false,
            );
        }
        self.push(
            format!("{premise}{tag}"),
            premise,
            modes,
            VcKind::Implication,
            hyp,
            ExpPoly::from_poly(-&lie),
            Cmp::Gt,
            true,
        );
        Ok(())
    }

    /// `hyp → lhs ≥ rhs`.
    fn compare(&mut self, id: String, premise: &str, modes: &[&str], hyp: Predicate, lhs: &Poly, rhs: &Poly) {
        self.push(
            id,
            premise,
            modes,
            VcKind::Implication,
            hyp,
            ExpPoly::from_poly(lhs - rhs),
            Cmp::Ge,
            false,
        );
    }

    fn per_mode_mlf(&mut self, a: &LyapunovAssignment) -> Result<(), VcError> {
        for p in &self.m.modes {
            let v = a.get(&p.id)?;
            let tag = format!("[{}]", p.id);
            self.positivity(&tag, &[&p.id], v, &p.domain);
            self.radial(&tag, &[&p.id], v);
            self.decrease("decrease", &tag, &[&p.id], v, &p.field, &p.domain)?;
        }
        Ok(())
    }
}

fn require(rule: Rule, m: &SwitchedModel, kinds: &[Kind]) -> Result<(), VcError> {
    if kinds.contains(&m.kind) {
        Ok(())
    } else {
        Err(VcError::KindMismatch { rule, kind: m.kind })
    }
}

/// Common Lyapunov function premises.
pub fn gen_clf(m: &SwitchedModel, v: &Poly) -> Result<Vec<VerificationCondition>, VcError> {
    require(Rule::Clf, m, &[Kind::Arbitrary, Kind::StateDependent])?;
    let mut e = Emitter::new(m, Rule::Clf);
    e.positivity("", &[], v, &Predicate::truth());
    e.radial("", &[], v);
    for p in &m.modes {
        e.decrease("decrease", &format!("[{}]", p.id), &[&p.id], v, &p.field, &p.domain)?;
    }
    Ok(e.out)
}

/// Multiple Lyapunov functions under state-dependent switching.
pub fn gen_mlf_state(m: &SwitchedModel, a: &LyapunovAssignment) -> Result<Vec<VerificationCondition>, VcError> {
    require(Rule::MlfState, m, &[Kind::StateDependent])?;
    let mut e = Emitter::new(m, Rule::MlfState);
    e.per_mode_mlf(a)?;
    for (i, p) in m.modes.iter().enumerate() {
        for q in &m.modes[i + 1..] {
            let hyp = p.domain.closure().and(&q.domain.closure());
            let (vp, vq) = (a.get(&p.id)?, a.get(&q.id)?);
            let modes = [p.id.as_str(), q.id.as_str()];
            e.compare(format!("compat[{},{}]+", p.id, q.id), "compatibility", &modes, hyp.clone(), vp, vq);
            e.compare(format!("compat[{},{}]-", p.id, q.id), "compatibility-rev", &modes, hyp, vq, vp);
        }
    }
    Ok(e.out)
}

/// Multiple Lyapunov functions under guarded switching.
pub fn gen_mlf_guarded(m: &SwitchedModel, a: &LyapunovAssignment) -> Result<Vec<VerificationCondition>, VcError> {
    require(Rule::MlfGuarded, m, &[Kind::Guarded])?;
    let mut e = Emitter::new(m, Rule::MlfGuarded);
    e.per_mode_mlf(a)?;
    for (k, t) in m.transitions.iter().enumerate() {
        let (vp, vq) = (a.get(&t.from)?, a.get(&t.to)?);
        e.compare(
            format!("descent[{}->{}]#{k}", t.from, t.to),
            "descent",
            &[&t.from, &t.to],
            t.guard.closure(),
            vp,
            vq,
        );
    }
    Ok(e.out)
}

/// Multiple Lyapunov functions with dwell-time switching.
pub fn gen_mlf_timed(m: &SwitchedModel, a: &LyapunovAssignment) -> Result<Vec<VerificationCondition>, VcError> {
    require(Rule::MlfTimed, m, &[Kind::Timed])?;
    let mut rates = BTreeMap::new();
    for p in &m.modes {
        let r = a.rates.get(&p.id).ok_or_else(|| VcError::MissingRate(p.id.clone()))?;
        if !r.is_positive() && p.max_dwell.is_none() {
            return Err(VcError::UnstableWithoutMaxDwell(p.id.clone()));
        }
        rates.insert(p.id.clone(), r.clone());
    }
    let sigma = match &a.sigma {
        Some(s) => s.clone(),
        None => rates
            .values()
            .filter(|r| r.is_positive())
            .min()
            .map(|r| r / Rational::from_integer(2.into()))
            .ok_or(VcError::NoStableMode)?,
    };
    if !sigma.is_positive() || rates.values().any(|r| r.is_positive() && *r <= sigma) {
        return Err(VcError::BadSigma);
    }
    let mut e = Emitter::new(m, Rule::MlfTimed);
    for p in &m.modes {
        let v = a.get(&p.id)?;
        let tag = format!("[{}]", p.id);
        e.positivity(&tag, &[&p.id], v, &p.domain);
        e.radial(&tag, &[&p.id], v);
        // L V ≤ -λ V, i.e. -λ V - L V ≥ 0.
        let lie = lie_derivative(v, &p.field)?;
        let target = &v.scale(&-&rates[&p.id]) - &lie;
        e.push(
            format!("rate{tag}"),
            "rate",
            &[&p.id],
            VcKind::Implication,
            p.domain.closure(),
            ExpPoly::from_poly(target),
            Cmp::Ge,
            false,
        );
    }
    for t in &m.transitions {
        let p = m.mode(&t.from).expect("well-formed");
        let q = m.mode(&t.to).expect("well-formed");
        let theta = t.min_dwell.clone().unwrap_or_else(Rational::zero);
        let (vp, vq) = (a.get(&p.id)?, a.get(&q.id)?);
        let hyp = p.domain.closure().and(&t.guard.closure());
        for fam in [Family::Stability, Family::Attractivity] {
            let exponent = dwell_exponent(
                fam,
                &rates[&p.id],
                &rates[&q.id],
                &theta,
                p.max_dwell.as_ref(),
                q.max_dwell.as_ref(),
                &sigma,
            );
            // V_p e^E - V_q ≥ 0.
            let mut expr = ExpPoly::from_poly(-vq);
            expr.add_part(exponent.clone(), vp);
            let id = format!("dwell-{}[{}->{}]", fam.tag(), p.id, q.id);
            e.push(id, &format!("dwell-{}", fam.tag()), &[&p.id, &q.id], VcKind::Implication, hyp.clone(), expr, Cmp::Ge, false);
            let last = e.out.last_mut().expect("just pushed");
            last.audit = Some(timed::raw_premise(fam, p, q, &rates, &theta, &sigma));
        }
    }
    Ok(e.out)
}

/// Unfolds the controller IR into one descent condition per path.
pub fn gen_controlled_unfold(m: &SwitchedModel, a: &LyapunovAssignment) -> Result<Vec<VerificationCondition>, VcError> {
    require(Rule::Controlled, m, &[Kind::Controlled])?;
    let mut e = Emitter::new(m, Rule::Controlled);
    e.per_mode_mlf(a)?;
    let ir = to_program(m);
    let modes: Vec<String> = m.modes.iter().map(|p| p.id.clone()).collect();
    for (k, path) in ir.paths(&modes).into_iter().enumerate() {
        let vp = a.get(&path.from)?;
        let vq = a.get(&path.to)?.substitute(&path.assigns);
        e.compare(
            format!("descent[{}->{}]#{k}", path.from, path.to),
            "descent",
            &[&path.from, &path.to],
            path.hypothesis().closure(),
            vp,
            &vq,
        );
    }
    Ok(e.out)
}

/// Conjunctive normal form of a DNF predicate by distribution, with
/// tautological and subsumed clauses removed.
fn cnf_clauses(p: &Predicate) -> Vec<Vec<Atom>> {
    let mut acc: Vec<Vec<Atom>> = vec![Vec::new()];
    for clause in p.clauses() {
        let mut next = Vec::new();
        for c in &acc {
            for lit in clause {
                let mut n = c.clone();
                if !n.contains(lit) {
                    n.push(lit.clone());
                }
                if !tautology(&n) {
                    next.push(n);
                }
            }
        }
        acc = absorb(next);
    }
    acc
}

fn tautology(c: &[Atom]) -> bool {
    c.iter().any(|a| {
        let neg = a.negate();
        neg.iter().all(|n| c.contains(n))
    })
}

fn absorb(mut clauses: Vec<Vec<Atom>>) -> Vec<Vec<Atom>> {
    clauses.sort_by_key(Vec::len);
    let mut out: Vec<Vec<Atom>> = Vec::new();
    for c in clauses {
        if !out.iter().any(|d| d.iter().all(|a| c.contains(a))) {
            out.push(c);
        }
    }
    out
}

/// Region obligations and region-restricted decrease for a common candidate.
pub fn gen_restricted_attractivity(m: &SwitchedModel, v: &Poly, region: &Predicate) -> Result<Vec<VerificationCondition>, VcError> {
    require(Rule::Restricted, m, &[Kind::StateDependent, Kind::Arbitrary])?;
    let mut e = Emitter::new(m, Rule::Restricted);
    for p in &m.modes {
        let dom = p.domain.closure();
        let mut singles: Vec<Atom> = Vec::new();
        let mut multis: Vec<Vec<Atom>> = Vec::new();
        let mut empty = false;
        for clause in cnf_clauses(region) {
            // Literals contradicting the domain are dropped; a literal implied
            // by the domain satisfies the clause.
            let mut lits = Vec::new();
            let mut satisfied = false;
            for lit in clause {
                let with = p.domain.and(&Predicate::atom(lit.clone()));
                if with.is_false() {
                    continue;
                }
                if with == p.domain {
                    satisfied = true;
                    break;
                }
                lits.push(lit);
            }
            if satisfied {
                continue;
            }
            match lits.len() {
                0 => empty = true,
                1 => singles.push(lits.pop().expect("one literal")),
                _ => multis.push(lits),
            }
        }
        if empty {
            continue;
        }
        multis.retain(|c| !c.iter().any(|l| singles.contains(l)));
        singles.dedup();
        for (k, s) in singles.iter().enumerate() {
            e.push(
                format!("invariance[{}]#{k}", p.id),
                "region-invariance",
                &[&p.id],
                VcKind::Invariance { mode: p.id.clone(), field: p.field.clone() },
                dom.clone(),
                ExpPoly::from_poly(s.poly.clone()),
                s.cmp,
                false,
            );
        }
        // Within the domain, the single-literal clauses imply the others.
        let base = singles
            .iter()
            .fold(dom.clone(), |acc, s| acc.and(&Predicate::atom(s.closure())));
        for (k, lits) in multis.iter_mut().enumerate() {
            // Strict literals are negated exactly; a non-strict one is the conclusion.
            lits.sort_by_key(|l| l.cmp != Cmp::Gt);
            let (last, rest) = lits.split_last().expect("two or more literals");
            let hyp = rest.iter().fold(base.clone(), |acc, l| {
                acc.and(&Predicate::from_clauses(l.negate().into_iter().map(|a| vec![a.closure()]).collect()))
            });
            e.push(
                format!("region-clause[{}]#{k}", p.id),
                "region-invariance",
                &[&p.id],
                VcKind::Implication,
                hyp,
                ExpPoly::from_poly(last.poly.clone()),
                last.cmp,
                false,
            );
        }
        e.decrease("decrease", &format!("[{}]", p.id), &[&p.id], v, &p.field, &region.closure().and(&dom))?;
    }
    Ok(e.out)
}

/// Non-strict decrease of a common candidate on every mode domain.
fn gen_nonstrict_decrease(e: &mut Emitter, v: &Poly) -> Result<(), VcError> {
    for p in &e.m.modes {
        let lie = lie_derivative(v, &p.field)?;
        e.push(
            format!("stability-decrease[{}]", p.id),
            "stability-decrease",
            &[&p.id],
            VcKind::Implication,
            p.domain.closure(),
            ExpPoly::from_poly(-&lie),
            Cmp::Ge,
            false,
        );
    }
    Ok(())
}

/// All premises for a rule, candidates taken from the model annotations.
pub fn generate(m: &SwitchedModel, rule: Rule) -> Result<Vec<VerificationCondition>, VcError> {
    match rule {
        Rule::Clf => {
            let v = common_candidate(m)?;
            gen_clf(m, &v)
        }
        Rule::MlfState => gen_mlf_state(m, &LyapunovAssignment::from_model(m)?),
        Rule::MlfGuarded => gen_mlf_guarded(m, &LyapunovAssignment::from_model(m)?),
        Rule::MlfTimed => gen_mlf_timed(m, &LyapunovAssignment::from_model(m)?),
        Rule::Controlled => gen_controlled_unfold(m, &LyapunovAssignment::from_model(m)?),
        Rule::Restricted => {
            let v = common_candidate(m)?;
            let region = m.region.clone().ok_or(VcError::MissingRegion)?;
            gen_restricted(m, &v, &region)
        }
    }
}

/// Stability part (positivity, radial, non-strict decrease) plus the
/// region-restricted attractivity conditions.
pub fn gen_restricted(m: &SwitchedModel, v: &Poly, region: &Predicate) -> Result<Vec<VerificationCondition>, VcError> {
    require(Rule::Restricted, m, &[Kind::StateDependent, Kind::Arbitrary])?;
    let mut e = Emitter::new(m, Rule::Restricted);
    e.positivity("", &[], v, &Predicate::truth());
    e.radial("", &[], v);
    gen_nonstrict_decrease(&mut e, v)?;
    let mut out = e.out;
    out.extend(gen_restricted_attractivity(m, v, region)?);
    Ok(out)
}

fn common_candidate(m: &SwitchedModel) -> Result<Poly, VcError> {
    if let Some(v) = &m.common_lyapunov {
        return Ok(v.clone());
    }
    let first = m.modes.first().map(|p| p.id.clone()).unwrap_or_default();
    let v = m.lyapunov.get(&first).ok_or_else(|| VcError::MissingLyapunov(first.clone()))?;
    if m.modes.iter().all(|p| m.lyapunov.get(&p.id) == Some(v)) {
        Ok(v.clone())
    } else {
        Err(VcError::MissingLyapunov("(common)".into()))
    }
}

/// Number of distinct (premise, modes) groups.
pub fn condition_groups(vcs: &[VerificationCondition]) -> usize {
    let mut g: Vec<_> = vcs.iter().map(|v| v.group()).collect();
    g.sort();
    g.dedup();
    g.len()
}

/// JSON dump of the conditions.
pub fn dump_json(vcs: &[VerificationCondition]) -> serde_json::Value {
    use serde_json::json;
    serde_json::Value::Array(
        vcs.iter()
            .map(|vc| {
                let exp_terms: Vec<_> = vc
                    .conclusion
                    .expr
                    .parts()
                    .filter(|(e, _)| !e.is_zero())
                    .map(|(e, p)| json!({"exponent": crate::rational::format_rational(e), "poly": p.to_string()}))
                    .collect();
                let plain = vc
                    .conclusion
                    .expr
                    .parts()
                    .find(|(e, _)| e.is_zero())
                    .map(|(_, p)| p.to_string())
                    .unwrap_or_else(|| "0".into());
                let mut o = json!({
                    "id": vc.id,
                    "origin": vc.origin,
                    "kind": vc.kind.label(),
                    "vars": vc.vars,
                    "hypothesis": vc.hypothesis,
                    "conclusion": {
                        "poly": plain,
                        "cmp": vc.conclusion.cmp.symbol(),
                        "strict": vc.conclusion.strict(),
                        "exp_terms": exp_terms,
                    },
                    "excluded_origin": vc.excluded_origin,
                });
                if let Some(a) = &vc.audit {
                    o["audit"] = json!(a);
                }
                o
            })
            .collect(),
    )
}
