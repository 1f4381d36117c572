//! Set invariance `{p ⋈ 0}` under a mode's flow, by the Darboux inequality
//! `L_f p ≥ g·p` or the barrier condition `L_f p > 0` on `p = 0`, both
//! restricted to the closed mode domain.

use super::certificate::{Certificate, InvarianceMethod, Verdict};
use super::sos::{search, SosQuery};
use super::CheckConfig;
use crate::model::predicate::{Cmp, Predicate};
use crate::model::SwitchedModel;
use crate::poly::{lie_derivative, Poly, VectorField};

/// `sense` is `Cmp::Ge` or `Cmp::Gt`.
pub fn check_set_invariance(m: &SwitchedModel, mode_id: &str, p: &Poly, sense: Cmp, cfg: &CheckConfig) -> Verdict {
    let Some(mode) = m.mode(mode_id) else {
        return Verdict::inconclusive(format!("unknown mode `{mode_id}`"));
    };
    invariance_verdict(&mode.field, &mode.domain.closure(), p, sense, cfg)
}

pub(crate) fn invariance_verdict(field: &VectorField, domain: &Predicate, p: &Poly, sense: Cmp, cfg: &CheckConfig) -> Verdict {
    let _ = sense;
    let lie = match lie_derivative(p, field) {
        Ok(l) => l,
        Err(e) => return Verdict::inconclusive(e.to_string()),
    };
    if domain.is_false() {
        return Verdict::Proved { certificate: Certificate::Vacuous };
    }
    let mut vars: Vec<String> = Vec::new();
    for v in field.entries().iter().map(|(v, _)| v.clone()).chain(p.used_vars()).chain(lie.used_vars()).chain(domain.used_vars()) {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let vl: crate::poly::VarList = vars.into();
    let mut darboux = Vec::new();
    for clause in domain.clauses() {
        match clause_proof(&vl, &lie, p, clause, None, cfg) {
            Some(c) => darboux.push(c),
            None => break,
        }
    }
    if darboux.len() == domain.clauses().len() {
        let cofactors: Vec<String> = darboux
            .iter()
            .filter_map(|c| match c {
                Certificate::SosDecomposition(s) => s.equalities.last().map(|e| e.multiplier.clone()),
                _ => None,
            })
            .collect();
        return Verdict::Proved {
            certificate: Certificate::Invariance {
                method: InvarianceMethod::Darboux,
                cofactor: (cofactors.len() == 1).then(|| cofactors[0].clone()),
                proof: Box::new(cases(darboux)),
            },
        };
    }
    let mut barrier = Vec::new();
    for clause in domain.clauses() {
        match clause_proof(&vl, &lie, p, clause, Some(Vec::new()), cfg) {
            Some(c) => barrier.push(c),
            None => {
                return Verdict::inconclusive(format!(
                    "neither a Darboux cofactor nor a barrier certificate found for {p} (multiplier degree <= {})",
                    cfg.sos_degree
                ))
            }
        }
    }
    Verdict::Proved {
        certificate: Certificate::Invariance { method: InvarianceMethod::Barrier, cofactor: None, proof: Box::new(cases(barrier)) },
    }
}

fn cases(mut v: Vec<Certificate>) -> Certificate {
    if v.len() == 1 {
        v.pop().expect("one")
    } else {
        Certificate::Cases { cases: v }
    }
}

/// `L p − g p` nonnegative (Darboux, `strict = None`) or `L p > 0` on `p = 0`
/// (barrier) over one domain disjunct. The constraint `p` is listed last
/// among the equalities so its multiplier is the cofactor.
fn clause_proof(
    vars: &crate::poly::VarList,
    lie: &Poly,
    p: &Poly,
    clause: &[crate::model::predicate::Atom],
    strict: Option<Vec<String>>,
    cfg: &CheckConfig,
) -> Option<Certificate> {
    let mut q = SosQuery::new(vars.clone(), lie.clone());
    for a in clause {
        match a.cmp {
            Cmp::Eq => q.eqs.push(a.poly.clone()),
            _ => q.ineqs.push(a.poly.clone()),
        }
    }
    if !p.is_constant() {
        q.eqs.push(p.clone());
    }
    q.strict = strict;
    if lie.is_zero() && q.strict.is_none() {
        // L p = 0 = 0·p.
        let mut q0 = SosQuery::new(vars.clone(), lie.clone());
        q0.eqs = q.eqs.clone();
        return search(&q0, 0).map(Certificate::SosDecomposition);
    }
    search(&q, cfg.sos_degree).map(Certificate::SosDecomposition)
}
