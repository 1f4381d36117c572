//! Kind-specific shape checks.

use std::collections::{BTreeMap, BTreeSet};

use num::{Signed, Zero};

use super::{Diagnostic, Diagnostics, Kind, Severity, SwitchedModel, TIMER};
use crate::rational::Rational;

/// Errors only; an empty result means the model is accepted.
pub fn well_formed(m: &SwitchedModel) -> Diagnostics {
    let mut d = Diagnostics::default();
    if m.modes.is_empty() {
        d.error("no-modes", "at least one mode required");
        return d;
    }
    let mut seen = BTreeSet::new();
    for mode in &m.modes {
        if !seen.insert(mode.id.as_str()) {
            d.error("duplicate-mode", format!("duplicate mode `{}`", mode.id));
        }
    }
    for t in &m.transitions {
        for end in [&t.from, &t.to] {
            if m.mode(end).is_none() {
                d.error("unknown-mode", format!("transition endpoint `{end}` is not a mode"));
            }
        }
    }

    let declared: BTreeSet<String> = m.all_vars().into_iter().collect();
    for mode in &m.modes {
        for v in &m.state_vars {
            if mode.field.get(v).is_none() {
                d.error("missing-equation", format!("mode `{}` has no equation for `{v}'`", mode.id));
            }
        }
        for (v, e) in mode.field.entries() {
            if !declared.contains(v) {
                d.error("unknown-variable", format!("mode `{}` defines `{v}'` for an undeclared variable", mode.id));
            }
            for u in e.used_vars() {
                if !declared.contains(&u) {
                    d.error("unknown-variable", format!("mode `{}` uses undeclared `{u}`", mode.id));
                }
            }
            if m.kind != Kind::Controlled && !m.is_state_var(v) {
                d.error("kind-shape", format!("only {} models may evolve auxiliary variable `{v}`", Kind::Controlled));
            }
        }
        if let Some(t) = &mode.max_dwell {
            if !t.is_positive() {
                d.error("bad-dwell", format!("max dwell of `{}` must be positive", mode.id));
            }
            if m.kind != Kind::Timed {
                d.error("kind-shape", format!("max dwell on `{}` is only allowed in timed models", mode.id));
            }
        }
    }

    match m.kind {
        Kind::Arbitrary | Kind::StateDependent => {
            if !m.transitions.is_empty() {
                d.error("kind-shape", format!("{} models have no transitions", m.kind));
            }
            if m.kind == Kind::Arbitrary && m.modes.iter().any(|x| !x.domain.is_true()) {
                d.error("kind-shape", "arbitrary switching has no mode domains");
            }
        }
        Kind::Guarded => {
            for t in &m.transitions {
                if t.min_dwell.is_some() {
                    d.error("kind-shape", format!("guarded transition {} -> {} carries a dwell time", t.from, t.to));
                }
                if !t.reset.is_empty() {
                    d.error("kind-shape", format!("guarded transition {} -> {} carries resets", t.from, t.to));
                }
            }
        }
        Kind::Timed => {
            let any = m.transitions.iter().any(|t| t.min_dwell.is_some())
                || m.modes.iter().any(|x| x.max_dwell.is_some());
            if !any {
                d.error("timed-dwell", "Timed kind requires dwell data");
            }
            for t in &m.transitions {
                if t.min_dwell.as_ref().is_some_and(|r| r.is_negative()) {
                    d.error("bad-dwell", format!("min dwell of {} -> {} must be nonnegative", t.from, t.to));
                }
                if !t.reset.is_empty() {
                    d.error("kind-shape", format!("timed transition {} -> {} carries resets", t.from, t.to));
                }
            }
        }
        Kind::Controlled => {
            for t in &m.transitions {
                if t.min_dwell.is_some() {
                    d.error("kind-shape", format!("controlled transition {} -> {} carries a dwell time", t.from, t.to));
                }
            }
        }
    }

    for t in &m.transitions {
        for (v, _) in &t.reset {
            if m.is_state_var(v) {
                d.error(
                    "reset-writes-state",
                    format!(
                        "transition {} -> {} writes state variable `{v}`; the switching controller may only assign auxiliary variables",
                        t.from, t.to
                    ),
                );
            } else if v == TIMER && m.kind == Kind::Timed {
                d.error("reset-writes-state", format!("transition {} -> {} writes the implicit timer", t.from, t.to));
            }
        }
    }

    for v in m.lyapunov.keys().chain(m.rates.keys()) {
        if m.mode(v).is_none() {
            d.error("unknown-mode", format!("annotation for unknown mode `{v}`"));
        }
    }

    let origin: BTreeMap<String, Rational> =
        m.all_vars().into_iter().map(|v| (v, Rational::zero())).collect();
    let covered = m
        .modes
        .iter()
        .any(|x| x.domain.closure().holds(&origin).unwrap_or(false));
    if !covered {
        d.error("origin-uncovered", "the origin lies in no mode's domain closure");
    }
    d
}

/// Domains whose syntactic closure may over-approximate the true closure.
pub fn closure_warnings(m: &SwitchedModel) -> Diagnostics {
    let mut out = Vec::new();
    for mode in &m.modes {
        if mode.domain.closure_is_approximate() {
            out.push(Diagnostic {
                severity: Severity::Warning,
                code: "closure-approximate",
                line: 0,
                column: 0,
                message: format!(
                    "domain of `{}` has an equality inside a disjunction; its closure is over-approximated",
                    mode.id
                ),
            });
        }
    }
    Diagnostics(out)
}
