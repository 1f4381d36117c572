//! Conclusions with exponential coefficients: each `e^E` is replaced by a
//! rational enclosure bound chosen by the sign of its polynomial factor, and
//! the resulting polynomial implication is proved by SOS.

use num::{Signed, Zero};

use super::certificate::Certificate;
use super::sos::{search, SosQuery};
use crate::expo::{exp_enclosure, ExpBound};
use crate::model::predicate::{Atom, Cmp};
use crate::poly::{Poly, VarList};
use crate::vcgen::VerificationCondition;

/// `Some(true)` when `p ≥ 0` holds on the clause, `Some(false)` when `p ≤ 0`.
fn sign_on(vars: &VarList, p: &Poly, clause: &[Atom], degree: u32) -> Option<(bool, Certificate)> {
    if p.is_constant() {
        let c = p.constant_term();
        let cert = Certificate::Evaluation { point: Default::default(), value: c.clone() };
        return Some((!c.is_negative(), cert));
    }
    for positive in [true, false] {
        let target = if positive { p.clone() } else { -p };
        let q = query(vars, &target, clause, None);
        if let Some(c) = search(&q, degree) {
            return Some((positive, Certificate::SosDecomposition(c)));
        }
    }
    None
}

pub(crate) fn query(vars: &VarList, target: &Poly, clause: &[Atom], strict: Option<Vec<String>>) -> SosQuery {
    let mut q = SosQuery::new(vars.clone(), target.clone());
    for a in clause {
        match a.cmp {
            Cmp::Eq => q.eqs.push(a.poly.clone()),
            _ => q.ineqs.push(a.poly.clone()),
        }
    }
    q.strict = strict;
    q
}

/// Tries enclosure budgets `terms`, `2·terms`, `4·terms`.
pub fn check_exp_vc(vc: &VerificationCondition, degree: u32, terms: usize) -> Option<Certificate> {
    let vars: VarList = vc.vars.clone().into();
    let strict = vc.conclusion.strict().then(|| if vc.excluded_origin { vc.state_vars.clone() } else { Vec::new() });
    let mut cases = Vec::new();
    for clause in vc.hypothesis.clauses() {
        let mut signs = Vec::new();
        for (e, p) in vc.conclusion.expr.parts() {
            if e.is_zero() {
                continue;
            }
            signs.push((e.clone(), p.clone(), sign_on(&vars, p, clause, degree)?));
        }
        let mut done = None;
        for mult in [1, 2, 4] {
            let budget = terms * mult;
            let mut bounded = Poly::zero(vars.clone());
            let mut bounds: Vec<ExpBound> = Vec::new();
            let mut directions = Vec::new();
            for (e, p) in vc.conclusion.expr.parts() {
                if e.is_zero() {
                    bounded = &bounded + p;
                }
            }
            for (e, p, (positive, _)) in &signs {
                let b = exp_enclosure(e, budget);
                let c = if *positive { &b.lower } else { &b.upper };
                bounded = &bounded + &p.scale(c);
                directions.push(if *positive { "lower" } else { "upper" }.to_string());
                bounds.push(b);
            }
            let q = query(&vars, &bounded, clause, strict.clone());
            if let Some(c) = search(&q, degree) {
                done = Some(Certificate::ExpComparison {
                    bounds,
                    directions,
                    coefficients: signs.iter().map(|(_, _, (_, c))| c.clone()).collect(),
                    main: Box::new(Certificate::SosDecomposition(c)),
                });
                break;
            }
        }
        cases.push(done?);
    }
    Some(if cases.len() == 1 { cases.pop().expect("one") } else { Certificate::Cases { cases } })
}
