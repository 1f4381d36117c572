//! Pretty-printer producing `.ssm` text that parses back to the same model.

use std::fmt::Write;

use super::SwitchedModel;
use crate::rational::format_rational;

pub fn print_model(m: &SwitchedModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "system {} {{", m.name);
    for (name, v) in &m.constants {
        let _ = writeln!(s, "  const {name} = {};", format_rational(v));
    }
    if !m.state_vars.is_empty() {
        let _ = writeln!(s, "  var {};", m.state_vars.join(", "));
    }
    if !m.aux_vars.is_empty() {
        let _ = writeln!(s, "  aux {};", m.aux_vars.join(", "));
    }
    let _ = writeln!(s, "  kind {};", m.kind);
    for mode in &m.modes {
        let _ = writeln!(s, "  mode {} {{", mode.id);
        let eqs: Vec<String> = mode
            .field
            .entries()
            .iter()
            .map(|(v, e)| format!("{v}' = {e}"))
            .collect();
        let _ = writeln!(s, "    ode {{ {} }}", eqs.join("; "));
        if !mode.domain.is_true() {
            let _ = writeln!(s, "    domain {}", mode.domain);
        }
        if let Some(d) = &mode.max_dwell {
            let _ = writeln!(s, "    maxdwell {}", format_rational(d));
        }
        let _ = writeln!(s, "  }}");
    }
    for t in &m.transitions {
        let _ = write!(s, "  transition {} -> {}", t.from, t.to);
        if !t.guard.is_true() {
            let _ = write!(s, " when {}", t.guard);
        }
        if !t.reset.is_empty() {
            let r: Vec<String> = t.reset.iter().map(|(v, e)| format!("{v} := {e}")).collect();
            let _ = write!(s, " reset {}", r.join(", "));
        }
        if let Some(d) = &t.min_dwell {
            let _ = write!(s, " mindwell {}", format_rational(d));
        }
        let _ = writeln!(s, ";");
    }
    if let Some(v) = &m.common_lyapunov {
        let _ = writeln!(s, "  lyapunov : {v};");
    }
    for (mode, v) in &m.lyapunov {
        let _ = writeln!(s, "  lyapunov {mode} : {v};");
    }
    for (mode, r) in &m.rates {
        let _ = writeln!(s, "  rate {mode} : {};", format_rational(r));
    }
    if let Some(sig) = &m.sigma {
        let _ = writeln!(s, "  sigma {};", format_rational(sig));
    }
    if let Some(r) = &m.region {
        let _ = writeln!(s, "  region {r};");
    }
    s.push_str("}\n");
    s
}
