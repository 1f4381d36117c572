//! Ghost switching: split a mode into two copies with identical dynamics.

use super::predicate::{Atom, Predicate};
use super::{Kind, ModelError, SwitchedModel};
use crate::poly::Poly;

/// Names of the two halves of a split mode: `A1`/`A2`, or `p3_1`/`p3_2`
/// when the id already ends in a digit.
pub fn ghost_names(id: &str) -> [String; 2] {
    if id.chars().last().is_some_and(|c| c.is_ascii_digit()) {
        [format!("{id}_1"), format!("{id}_2")]
    } else {
        [format!("{id}1"), format!("{id}2")]
    }
}

/// Replaces `mode_id` by two modes whose domains are conjoined with
/// `split <= 0` and `split >= 0`.
pub fn ghost_split(m: &SwitchedModel, mode_id: &str, split: &Poly) -> Result<SwitchedModel, ModelError> {
    if m.kind != Kind::StateDependent {
        return Err(ModelError::Unsupported(format!(
            "ghost split needs a state-dependent model, `{}` is {}",
            m.name, m.kind
        )));
    }
    let idx = m
        .mode_index(mode_id)
        .ok_or_else(|| ModelError::UnknownMode(mode_id.to_string()))?;
    let old = &m.modes[idx];
    let [n1, n2] = ghost_names(mode_id);
    let mut lo = old.clone();
    lo.id = n1.clone();
    lo.domain = old.domain.and(&Predicate::atom(Atom::le(split.clone())));
    let mut hi = old.clone();
    hi.id = n2.clone();
    hi.domain = old.domain.and(&Predicate::atom(Atom::ge(split.clone())));
    let mut out = m.clone();
    out.modes.splice(idx..=idx, [lo, hi]);
    if let Some(v) = out.lyapunov.remove(mode_id) {
        out.lyapunov.insert(n1.clone(), v.clone());
        out.lyapunov.insert(n2.clone(), v);
    }
    if let Some(r) = out.rates.remove(mode_id) {
        out.rates.insert(n1, r.clone());
        out.rates.insert(n2, r);
    }
    Ok(out)
}
