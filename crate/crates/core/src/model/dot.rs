//! Graphviz rendering of the mode automaton.

use std::fmt::Write;

use super::SwitchedModel;
use crate::rational::format_rational;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn emit_dot(m: &SwitchedModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digraph \"{}\" {{", escape(&m.name));
    let _ = writeln!(s, "  node [shape=box];");
    for mode in &m.modes {
        let mut label: Vec<String> = mode
            .field
            .entries()
            .iter()
            .map(|(v, e)| format!("{v}' = {e}"))
            .collect();
        if !mode.domain.is_true() {
            label.push(format!("& {}", mode.domain));
        }
        if let Some(d) = &mode.max_dwell {
            label.push(format!("tau <= {}", format_rational(d)));
        }
        let _ = writeln!(s, "  \"{}\" [label=\"{}\\n{}\"];", escape(&mode.id), escape(&mode.id), label.iter().map(|l| escape(l)).collect::<Vec<_>>().join("\\n"));
    }
    for t in &m.transitions {
        let mut parts = Vec::new();
        if !t.guard.is_true() {
            parts.push(format!("?{}", t.guard));
        }
        for (v, e) in &t.reset {
            parts.push(format!("{v} := {e}"));
        }
        if let Some(d) = &t.min_dwell {
            parts.push(format!("tau >= {}", format_rational(d)));
        }
        let _ = writeln!(
            s,
            "  \"{}\" -> \"{}\" [label=\"{}\"];",
            escape(&t.from),
            escape(&t.to),
            escape(&parts.join("; "))
        );
    }
    s.push_str("}\n");
    s
}
