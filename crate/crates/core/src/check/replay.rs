//! Independent re-verification of certificates and counterexamples.
//!
//! Works from the textual statement of a condition and uses only exact
//! polynomial arithmetic: no solver, no shared factorization code, and its
//! own series bounds for exponentials.

use std::collections::BTreeMap;

use num::{BigInt, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::certificate::{Certificate, Counterexample, InvarianceMethod, SosCertificate, Verdict};
use crate::model::parse_expr;
use crate::model::predicate::{Atom, Cmp};
use crate::poly::{lie_derivative, Monomial, Poly, VarList, VectorField};
use crate::rational::{format_rational, parse_rational, Rational};
use crate::vcgen::{VcKind, VerificationCondition};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReplayError {
    #[error("malformed statement: {0}")]
    Statement(String),
    #[error("certificate of kind `{0}` does not apply to a {1} condition")]
    WrongKind(&'static str, String),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ReplayError {
    ReplayError::Invalid(msg.into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub exponent: String,
    pub poly: String,
}

/// Self-contained text form of a condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub field: Vec<(String, String)>,
    pub vars: Vec<String>,
    pub state_vars: Vec<String>,
    /// Disjunction of conjunctions of `(poly, cmp)`.
    pub hypothesis: Vec<Vec<(String, String)>>,
    /// `Σ poly·e^exponent`.
    pub conclusion: Vec<ExpTerm>,
    pub cmp: String,
    pub excluded_origin: bool,
}

impl Statement {
    pub fn of(vc: &VerificationCondition) -> Statement {
        let (mode, field) = match &vc.kind {
            VcKind::Invariance { mode, field } => {
                (Some(mode.clone()), field.entries().iter().map(|(v, p)| (v.clone(), p.to_string())).collect())
            }
            _ => (None, Vec::new()),
        };
        Statement {
            kind: vc.kind.label().to_string(),
            mode,
            field,
            vars: vc.vars.clone(),
            state_vars: vc.state_vars.clone(),
            hypothesis: vc
                .hypothesis
                .clauses()
                .iter()
                .map(|c| c.iter().map(|a| (a.poly.to_string(), a.cmp.symbol().to_string())).collect())
                .collect(),
            conclusion: vc
                .conclusion
                .expr
                .parts()
                .map(|(e, p)| ExpTerm { exponent: format_rational(e), poly: p.to_string() })
                .collect(),
            cmp: vc.conclusion.cmp.symbol().to_string(),
            excluded_origin: vc.excluded_origin,
        }
    }
}

enum ClaimKind {
    Implication,
    OriginZero,
    Radial,
    Invariance(VectorField),
}

struct Claim {
    kind: ClaimKind,
    vars: Vec<String>,
    state_vars: Vec<String>,
    clauses: Vec<Vec<Atom>>,
    parts: Vec<(Rational, Poly)>,
    cmp: Cmp,
    excluded_origin: bool,
}

fn parse_cmp(s: &str) -> Result<Cmp, ReplayError> {
    match s {
        ">=" => Ok(Cmp::Ge),
        ">" => Ok(Cmp::Gt),
        "=" => Ok(Cmp::Eq),
        _ => Err(ReplayError::Statement(format!("unknown comparison `{s}`"))),
    }
}

fn parse_poly(s: &str, vars: &[String]) -> Result<Poly, ReplayError> {
    parse_expr(s, vars).map_err(|d| ReplayError::Statement(format!("`{s}`: {d}")))
}

fn parse_rat(s: &str) -> Result<Rational, ReplayError> {
    parse_rational(s).ok_or_else(|| ReplayError::Statement(format!("bad rational `{s}`")))
}

impl Claim {
    fn parse(st: &Statement) -> Result<Claim, ReplayError> {
        let vars = &st.vars;
        let kind = match st.kind.as_str() {
            "implication" => ClaimKind::Implication,
            "origin-zero" => ClaimKind::OriginZero,
            "radial" => ClaimKind::Radial,
            "invariance" => {
                let entries = st
                    .field
                    .iter()
                    .map(|(v, p)| Ok((v.clone(), parse_poly(p, vars)?)))
                    .collect::<Result<Vec<_>, ReplayError>>()?;
                ClaimKind::Invariance(VectorField::new(entries))
            }
            k => return Err(ReplayError::Statement(format!("unknown kind `{k}`"))),
        };
        let clauses = st
            .hypothesis
            .iter()
            .map(|c| c.iter().map(|(p, cmp)| Ok(Atom::new(parse_poly(p, vars)?, parse_cmp(cmp)?))).collect())
            .collect::<Result<Vec<Vec<Atom>>, ReplayError>>()?;
        let parts = st
            .conclusion
            .iter()
            .map(|t| Ok((parse_rat(&t.exponent)?, parse_poly(&t.poly, vars)?)))
            .collect::<Result<Vec<_>, ReplayError>>()?;
        Ok(Claim {
            kind,
            vars: vars.clone(),
            state_vars: st.state_vars.clone(),
            clauses,
            parts,
            cmp: parse_cmp(&st.cmp)?,
            excluded_origin: st.excluded_origin,
        })
    }

    fn plain(&self) -> Option<Poly> {
        let vl: VarList = self.vars.clone().into();
        let mut out = Poly::zero(vl);
        for (e, p) in &self.parts {
            if !e.is_zero() {
                return None;
            }
            out = &out + p;
        }
        Some(out)
    }

    fn kind_name(&self) -> String {
        match self.kind {
            ClaimKind::Implication => "implication",
            ClaimKind::OriginZero => "origin-zero",
            ClaimKind::Radial => "radial",
            ClaimKind::Invariance(_) => "invariance",
        }
        .to_string()
    }
}

pub fn replay_vc(vc: &VerificationCondition, verdict: &Verdict) -> Result<(), ReplayError> {
    replay(&Statement::of(vc), verdict)
}

/// Inconclusive verdicts replay trivially.
pub fn replay(st: &Statement, verdict: &Verdict) -> Result<(), ReplayError> {
    let claim = Claim::parse(st)?;
    match verdict {
        Verdict::Proved { certificate } => replay_proof(&claim, certificate),
        Verdict::Refuted { counterexample } => replay_counterexample(&claim, counterexample),
        Verdict::Inconclusive { .. } => Ok(()),
    }
}

fn same(a: &Poly, b: &Poly) -> bool {
    (a - b).is_zero()
}

fn replay_proof(c: &Claim, cert: &Certificate) -> Result<(), ReplayError> {
    let wrong = || ReplayError::WrongKind(cert.kind_name(), c.kind_name());
    match &c.kind {
        ClaimKind::OriginZero => match cert {
            Certificate::Evaluation { value, .. } => {
                let p = c.plain().ok_or_else(wrong)?;
                let zero: BTreeMap<String, Rational> = c.vars.iter().map(|v| (v.clone(), Rational::zero())).collect();
                let v = p.evaluate(&zero).map_err(|e| invalid(e.to_string()))?;
                if v.is_zero() && value.is_zero() {
                    Ok(())
                } else {
                    Err(invalid(format!("value at the origin is {v}")))
                }
            }
            _ => Err(wrong()),
        },
        ClaimKind::Radial => match cert {
            Certificate::Radial { degree, top } => {
                let p = c.plain().ok_or_else(wrong)?;
                if p.total_degree() != *degree {
                    return Err(invalid("degree mismatch"));
                }
                let top_part = p.homogeneous_part(*degree);
                strict_positive_form(c, &top_part, top)
            }
            _ => Err(wrong()),
        },
        ClaimKind::Invariance(field) => match cert {
            Certificate::Vacuous if c.clauses.is_empty() => Ok(()),
            Certificate::Invariance { method, proof, .. } => {
                let p = c.plain().ok_or_else(wrong)?;
                let lie = lie_derivative(&p, field).map_err(|e| invalid(e.to_string()))?;
                let proofs = per_clause(c, proof)?;
                for (clause, pr) in c.clauses.iter().zip(proofs) {
                    let Certificate::SosDecomposition(s) = pr else {
                        return Err(invalid("invariance proof must be an SOS decomposition"));
                    };
                    let mut eqs: Vec<Poly> = clause.iter().filter(|a| a.cmp == Cmp::Eq).map(|a| a.poly.clone()).collect();
                    eqs.push(p.clone());
                    let ineqs: Vec<Poly> = clause.iter().filter(|a| a.cmp != Cmp::Eq).map(|a| a.poly.clone()).collect();
                    let need = match method {
                        InvarianceMethod::Darboux => Strictness::None,
                        InvarianceMethod::Barrier => Strictness::Constant,
                    };
                    sos_identity(s, &lie, &ineqs, &eqs, need, &c.state_vars)?;
                }
                Ok(())
            }
            _ => Err(wrong()),
        },
        ClaimKind::Implication => implication_proof(c, cert),
    }
}

fn per_clause<'a>(c: &Claim, cert: &'a Certificate) -> Result<Vec<&'a Certificate>, ReplayError> {
    let certs: Vec<&Certificate> = match cert {
        Certificate::Cases { cases } => cases.iter().collect(),
        other => vec![other],
    };
    if certs.len() != c.clauses.len() {
        return Err(invalid(format!("{} case certificates for {} hypothesis disjuncts", certs.len(), c.clauses.len())));
    }
    Ok(certs)
}

/// What the certificate's `ε` term must establish.
#[derive(Clone, Copy, PartialEq)]
enum Strictness {
    None,
    /// Positive away from the origin of the state variables.
    Norm,
    /// Positive everywhere on the constraint set.
    Constant,
}

fn required_strictness(c: &Claim) -> Strictness {
    match (c.cmp, c.excluded_origin) {
        (Cmp::Gt, true) => Strictness::Norm,
        (Cmp::Gt, false) => Strictness::Constant,
        _ => Strictness::None,
    }
}

fn implication_proof(c: &Claim, cert: &Certificate) -> Result<(), ReplayError> {
    if c.cmp == Cmp::Eq {
        return Err(invalid("equality conclusions are not certified"));
    }
    match cert {
        Certificate::Vacuous => {
            if c.clauses.is_empty() || c.clauses.iter().all(|cl| cl.iter().any(atom_false)) {
                Ok(())
            } else {
                Err(invalid("hypothesis is not syntactically false"))
            }
        }
        Certificate::PdFactorization { .. } => {
            let p = c.plain().ok_or_else(|| invalid("exponential conclusion with a quadratic certificate"))?;
            match required_strictness(c) {
                Strictness::Constant => Err(invalid("quadratic form cannot be strictly positive at the origin")),
                Strictness::Norm => strict_positive_form(c, &p, cert),
                Strictness::None => pd_form(&p, cert, false),
            }
        }
        _ => {
            let certs = per_clause(c, cert)?;
            for (clause, pr) in c.clauses.iter().zip(certs) {
                clause_proof(c, clause, pr)?;
            }
            Ok(())
        }
    }
}

fn atom_false(a: &Atom) -> bool {
    a.poly.is_constant() && !a.cmp.holds(&a.poly.constant_term())
}

fn clause_proof(c: &Claim, clause: &[Atom], cert: &Certificate) -> Result<(), ReplayError> {
    let ineqs: Vec<Poly> = clause.iter().filter(|a| a.cmp != Cmp::Eq).map(|a| a.poly.clone()).collect();
    let eqs: Vec<Poly> = clause.iter().filter(|a| a.cmp == Cmp::Eq).map(|a| a.poly.clone()).collect();
    let need = required_strictness(c);
    match cert {
        Certificate::SosDecomposition(s) => {
            let p = c.plain().ok_or_else(|| invalid("exponential conclusion with a plain SOS certificate"))?;
            sos_identity(s, &p, &ineqs, &eqs, need, &c.state_vars)
        }
        Certificate::ExpComparison { bounds, directions, coefficients, main } => {
            let vl: VarList = c.vars.clone().into();
            let mut bounded = Poly::zero(vl.clone());
            let exp_parts: Vec<&(Rational, Poly)> = c.parts.iter().filter(|(e, _)| !e.is_zero()).collect();
            for (e, p) in c.parts.iter().filter(|(e, _)| e.is_zero()) {
                let _ = e;
                bounded = &bounded + p;
            }
            if bounds.len() != exp_parts.len() || directions.len() != exp_parts.len() || coefficients.len() != exp_parts.len() {
                return Err(invalid("one bound, direction and sign certificate per exponential term"));
            }
            for (i, (e, p)) in exp_parts.iter().enumerate() {
                let b = &bounds[i];
                if &b.exponent != e {
                    return Err(invalid("bound exponent does not match the conclusion"));
                }
                let (value, sign) = match directions[i].as_str() {
                    "lower" => (&b.lower, true),
                    "upper" => (&b.upper, false),
                    d => return Err(invalid(format!("unknown direction `{d}`"))),
                };
                if sign {
                    check_exp_lower(e, value)?;
                } else {
                    check_exp_upper(e, value)?;
                }
                // The coefficient's sign on the clause justifies the direction.
                let signed = if sign { p.clone() } else { -p };
                match &coefficients[i] {
                    Certificate::Evaluation { value, .. } => {
                        if !(signed.is_constant() && !signed.constant_term().is_negative() && *value == p.constant_term()) {
                            return Err(invalid("constant coefficient has the wrong sign"));
                        }
                    }
                    Certificate::SosDecomposition(s) => sos_identity(s, &signed, &ineqs, &eqs, Strictness::None, &c.state_vars)?,
                    _ => return Err(invalid("unsupported coefficient certificate")),
                }
                bounded = &bounded + &p.scale(value);
            }
            match main.as_ref() {
                Certificate::SosDecomposition(s) => sos_identity(s, &bounded, &ineqs, &eqs, need, &c.state_vars),
                _ => Err(invalid("unsupported main certificate")),
            }
        }
        Certificate::Vacuous if clause.iter().any(atom_false) => Ok(()),
        other => Err(ReplayError::WrongKind(other.kind_name(), c.kind_name())),
    }
}

/// `p` is positive away from the origin of the state variables.
fn strict_positive_form(c: &Claim, p: &Poly, cert: &Certificate) -> Result<(), ReplayError> {
    if p.used_vars().iter().any(|v| !c.state_vars.contains(v)) {
        return Err(invalid("form depends on variables outside the state"));
    }
    match cert {
        Certificate::PdFactorization { vars, .. } => {
            let mut sv = c.state_vars.clone();
            let mut vv = vars.clone();
            sv.sort();
            vv.sort();
            if sv != vv {
                return Err(invalid("definiteness must range over every state variable"));
            }
            pd_form(p, cert, true)
        }
        Certificate::SosDecomposition(s) => sos_identity(s, p, &[], &[], Strictness::Norm, &c.state_vars),
        _ => Err(invalid("unsupported top-degree certificate")),
    }
}

fn pd_form(p: &Poly, cert: &Certificate, need_strict: bool) -> Result<(), ReplayError> {
    let Certificate::PdFactorization { vars, l, d, strict } = cert else {
        return Err(invalid("expected a factorization"));
    };
    let n = vars.len();
    if l.len() != n || d.len() != n || l.iter().any(|r| r.len() != n) {
        return Err(invalid("factor dimensions"));
    }
    for i in 0..n {
        if !l[i][i].is_one() || (i + 1..n).any(|j| !l[i][j].is_zero()) {
            return Err(invalid("L is not unit lower triangular"));
        }
    }
    if need_strict && !strict {
        return Err(invalid("strict positivity needs a strict factorization"));
    }
    if d.iter().any(|x| x.is_negative() || (*strict && x.is_zero())) {
        return Err(invalid("pivot sign"));
    }
    // x^T L D L^T x = Σ d_k (Σ_i l_ik x_i)².
    let vl: VarList = vars.clone().into();
    let mut sum = Poly::zero(vl.clone());
    for k in 0..n {
        let mut lin = Poly::zero(vl.clone());
        for i in 0..n {
            if !l[i][k].is_zero() {
                lin = &lin + &Poly::var(vl.clone(), &vars[i]).scale(&l[i][k]);
            }
        }
        sum = &sum + &(&lin * &lin).scale(&d[k]);
    }
    if same(&sum, p) {
        Ok(())
    } else {
        Err(invalid(format!("factorization gives {sum}, expected {p}")))
    }
}

fn monomial_poly(vars: &VarList, e: &[u32]) -> Result<Poly, ReplayError> {
    if e.len() != vars.len() {
        return Err(invalid("basis exponent length"));
    }
    Ok(Poly::monomial(vars.clone(), Monomial(e.to_vec()), Rational::one()))
}

fn gram_form(vars: &VarList, basis: &[Vec<u32>], g: &[Vec<Rational>]) -> Result<Poly, ReplayError> {
    if g.len() != basis.len() || g.iter().any(|r| r.len() != basis.len()) {
        return Err(invalid("Gram dimensions"));
    }
    if !psd(g) {
        return Err(invalid("Gram matrix is not positive semidefinite"));
    }
    let mons = basis.iter().map(|e| monomial_poly(vars, e)).collect::<Result<Vec<_>, _>>()?;
    let mut out = Poly::zero(vars.clone());
    for i in 0..g.len() {
        for j in 0..g.len() {
            if !g[i][j].is_zero() {
                out = &out + &(&mons[i] * &mons[j]).scale(&g[i][j]);
            }
        }
    }
    Ok(out)
}

/// Exact positive semidefiniteness by Bareiss-style elimination with
/// diagonal pivots on an integer-scaled copy.
pub fn psd(g: &[Vec<Rational>]) -> bool {
    let n = g.len();
    if (0..n).any(|i| (0..i).any(|j| g[i][j] != g[j][i])) {
        return false;
    }
    let den = g.iter().flatten().fold(BigInt::one(), |acc, x| num::integer::lcm(acc, x.denom().clone()));
    let mut a: Vec<Vec<BigInt>> = g.iter().map(|r| r.iter().map(|x| (x * Rational::from_integer(den.clone())).to_integer()).collect()).collect();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut prev = BigInt::one();
    loop {
        for &i in &alive {
            if a[i][i].is_negative() || (a[i][i].is_zero() && alive.iter().any(|&j| !a[i][j].is_zero())) {
                return false;
            }
        }
        let Some(pos) = alive.iter().position(|&i| !a[i][i].is_zero()) else { return true };
        let k = alive.remove(pos);
        let piv = a[k][k].clone();
        for &i in &alive {
            for &j in &alive {
                a[i][j] = (&piv * &a[i][j] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = piv;
    }
}

/// `scale·target − ε·N − Σ σ g − Σ λ h` equals the Gram form.
fn sos_identity(
    s: &SosCertificate,
    target: &Poly,
    ineqs: &[Poly],
    eqs: &[Poly],
    need: Strictness,
    state_vars: &[String],
) -> Result<(), ReplayError> {
    let vl: VarList = s.vars.clone().into();
    let stated = parse_poly(&s.target, &s.vars)?;
    if !same(&stated, target) {
        return Err(invalid(format!("certificate target {stated} differs from {target}")));
    }
    if !s.scale.is_positive() || s.epsilon.is_negative() {
        return Err(invalid("scale must be positive and epsilon nonnegative"));
    }
    match need {
        Strictness::None => {}
        Strictness::Constant => {
            if !(s.epsilon.is_positive() && (s.norm_vars.is_empty() || s.norm_power == 0)) {
                return Err(invalid("strict conclusion needs a positive constant margin"));
            }
        }
        Strictness::Norm => {
            let ok_norm = {
                let mut a = s.norm_vars.clone();
                let mut b = state_vars.to_vec();
                a.sort();
                b.sort();
                a == b && s.norm_power > 0
            };
            let ok_const = s.norm_vars.is_empty() || s.norm_power == 0;
            if !(s.epsilon.is_positive() && (ok_norm || ok_const)) {
                return Err(invalid("strict conclusion needs a positive margin over the state norm"));
            }
        }
    }
    let mut allowed: Vec<Poly> = ineqs.to_vec();
    for i in 0..ineqs.len() {
        for j in i + 1..ineqs.len() {
            allowed.push(&ineqs[i] * &ineqs[j]);
        }
    }
    let mut lhs = target.scale(&s.scale);
    if s.epsilon.is_positive() {
        let mut sq = Poly::zero(vl.clone());
        for v in &s.norm_vars {
            let x = Poly::var(vl.clone(), v);
            sq = &sq + &(&x * &x);
        }
        let norm = if s.norm_vars.is_empty() || s.norm_power == 0 {
            Poly::constant(vl.clone(), Rational::one())
        } else {
            sq.pow(s.norm_power)
        };
        lhs = &lhs - &norm.scale(&s.epsilon);
    }
    for m in &s.multipliers {
        let g = parse_poly(&m.constraint, &s.vars)?;
        if !allowed.iter().any(|a| same(a, &g)) {
            return Err(invalid(format!("constraint {g} is not a hypothesis atom or a product of two")));
        }
        let sigma = gram_form(&vl, &m.basis, &m.gram)?;
        lhs = &lhs - &(&sigma * &g);
    }
    for e in &s.equalities {
        let h = parse_poly(&e.constraint, &s.vars)?;
        if !eqs.iter().any(|a| same(a, &h)) {
            return Err(invalid(format!("equality {h} is not in the hypothesis")));
        }
        let lambda = parse_poly(&e.multiplier, &s.vars)?;
        lhs = &lhs - &(&lambda * &h);
    }
    let q = gram_form(&vl, &s.basis, &s.gram)?;
    if same(&lhs, &q) {
        Ok(())
    } else {
        Err(invalid(format!("identity fails: residual {}", &lhs - &q)))
    }
}

/// `Σ_{k<n} x^k/k!` for `x ≥ 0`, plus the tail bound when `n > 2x`.
fn series(x: &Rational, n: usize) -> (Rational, Rational) {
    let mut term = Rational::one();
    let mut sum = Rational::zero();
    for k in 0..n {
        sum += &term;
        term = term * x / Rational::from_integer(BigInt::from(k + 1));
    }
    // Tail ≤ term·(1 + x/(n+1) + ...) ≤ 2·term when x ≤ (n+1)/2.
    let tail = term * Rational::from_integer(2.into());
    (sum, tail)
}

fn exp_interval(e: &Rational) -> (Rational, Rational) {
    let x = e.abs();
    let m = x.ceil().to_integer().to_usize().unwrap_or(1 << 20);
    let (s, t) = series(&x, 4 * m + 60);
    let (lo, hi) = (s.clone(), s + t);
    if e.is_negative() {
        (hi.recip(), lo.recip())
    } else {
        (lo, hi)
    }
}

fn check_exp_lower(e: &Rational, lower: &Rational) -> Result<(), ReplayError> {
    if !lower.is_positive() || lower <= &exp_interval(e).0 {
        Ok(())
    } else {
        Err(invalid(format!("lower bound {lower} for e^{e} is not justified")))
    }
}

fn check_exp_upper(e: &Rational, upper: &Rational) -> Result<(), ReplayError> {
    if upper >= &exp_interval(e).1 {
        Ok(())
    } else {
        Err(invalid(format!("upper bound {upper} for e^{e} is not justified")))
    }
}

fn replay_counterexample(c: &Claim, cx: &Counterexample) -> Result<(), ReplayError> {
    let mut point = cx.point.clone();
    for v in &c.vars {
        point.entry(v.clone()).or_insert_with(Rational::zero);
    }
    match c.kind {
        ClaimKind::OriginZero => {
            let p = c.plain().ok_or_else(|| invalid("non-polynomial origin check"))?;
            let v = p.evaluate(&point).map_err(|e| invalid(e.to_string()))?;
            return if point.values().all(Zero::is_zero) && !v.is_zero() {
                Ok(())
            } else {
                Err(invalid("not a nonzero value at the origin"))
            };
        }
        ClaimKind::Implication => {}
        _ => return Err(invalid("counterexamples apply to implications only")),
    }
    let holds = |a: &Atom| a.poly.evaluate(&point).map(|v| a.cmp.holds(&v));
    let mut inside = false;
    for clause in &c.clauses {
        let mut all = true;
        for a in clause {
            all &= holds(a).map_err(|e| invalid(e.to_string()))?;
        }
        inside |= all;
    }
    if !inside {
        return Err(invalid("point does not satisfy the hypothesis"));
    }
    if c.excluded_origin && c.state_vars.iter().all(|v| point[v].is_zero()) {
        return Err(invalid("point is the excluded origin"));
    }
    let mut lo = Rational::zero();
    let mut hi = Rational::zero();
    for (e, p) in &c.parts {
        let v = p.evaluate(&point).map_err(|err| invalid(err.to_string()))?;
        if e.is_zero() {
            lo += &v;
            hi += &v;
        } else {
            let (a, b) = exp_interval(e);
            if v.is_negative() {
                lo += &v * &b;
                hi += &v * &a;
            } else {
                lo += &v * &a;
                hi += &v * &b;
            }
        }
    }
    // The stated value must agree: exactly, or as an overlapping enclosure.
    let consistent = match cx.value.as_slice() {
        [v] => lo == hi && *v == lo,
        [a, b] => a <= b && a <= &hi && &lo <= b,
        _ => false,
    };
    if !consistent {
        return Err(invalid("stated conclusion value does not match the point"));
    }
    let violated = match c.cmp {
        Cmp::Ge => hi.is_negative(),
        Cmp::Gt => !hi.is_positive(),
        Cmp::Eq => lo.is_positive() || hi.is_negative(),
    };
    if violated {
        Ok(())
    } else {
        Err(invalid(format!("conclusion value in [{lo}, {hi}] is not a violation")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn psd_examples() {
        assert!(psd(&[vec![int(1), int(1)], vec![int(1), int(1)]]));
        assert!(!psd(&[vec![int(0), int(1)], vec![int(1), int(0)]]));
        assert!(psd(&[vec![int(0), int(0)], vec![int(0), int(2)]]));
        assert!(!psd(&[vec![int(1), int(2)], vec![int(2), int(3)]]));
        assert!(psd(&[vec![int(1), rat(-33, 40)], vec![rat(-33, 40), int(1)]]));
    }

    #[test]
    fn exp_interval_brackets() {
        let (lo, hi) = exp_interval(&rat(-6, 5));
        let t = (-1.2f64).exp();
        assert!(crate::rational::to_f64(&lo) <= t + 1e-15 && t - 1e-15 <= crate::rational::to_f64(&hi));
        assert!(&hi - &lo < rat(1, 1_000_000_000_000));
    }
}
