//! Switched-system models: data types, `.ssm` parsing and printing,
//! well-formedness, ghost splitting, controller IR and DOT output.

mod dot;
mod ghost;
mod parse;
pub mod predicate;
mod print;
pub mod program;
mod wellformed;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::poly::{var_list, Poly, VarList, VectorField};
use crate::rational::Rational;

pub use dot::emit_dot;
pub use ghost::{ghost_split, ghost_names};
pub use parse::{parse_expr, parse_model, parse_predicate};
pub use predicate::{Atom, Cmp, Predicate};
pub use print::print_model;
pub use program::{to_program, ControllerIR};
pub use wellformed::{closure_warnings, well_formed};

/// Name of the implicit dwell timer of timed models.
pub const TIMER: &str = "tau";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Kind {
    Arbitrary,
    StateDependent,
    Guarded,
    Timed,
    Controlled,
}

impl Kind {
    pub fn keyword(self) -> &'static str {
        match self {
            Kind::Arbitrary => "arbitrary",
            Kind::StateDependent => "state",
            Kind::Guarded => "guarded",
            Kind::Timed => "timed",
            Kind::Controlled => "controlled",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Kind> {
        Some(match s {
            "arbitrary" => Kind::Arbitrary,
            "state" => Kind::StateDependent,
            "guarded" => Kind::Guarded,
            "timed" => Kind::Timed,
            "controlled" => Kind::Controlled,
            _ => return None,
        })
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub id: String,
    pub field: VectorField,
    pub domain: Predicate,
    pub max_dwell: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub from: String,
    pub to: String,
    pub guard: Predicate,
    pub reset: Vec<(String, Poly)>,
    pub min_dwell: Option<Rational>,
}

impl Transition {
    pub fn reset_map(&self) -> BTreeMap<String, Poly> {
        self.reset.iter().cloned().collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwitchedModel {
    pub name: String,
    pub kind: Kind,
    pub state_vars: Vec<String>,
    pub aux_vars: Vec<String>,
    pub constants: Vec<(String, Rational)>,
    pub modes: Vec<Mode>,
    pub transitions: Vec<Transition>,
    /// Per-mode Lyapunov candidates from `lyapunov p : ...`.
    pub lyapunov: BTreeMap<String, Poly>,
    /// Common candidate from `lyapunov : ...`.
    pub common_lyapunov: Option<Poly>,
    pub rates: BTreeMap<String, Rational>,
    pub sigma: Option<Rational>,
    pub region: Option<Predicate>,
}

impl SwitchedModel {
    /// State variables, then auxiliaries (the timer included for timed models).
    pub fn all_vars(&self) -> Vec<String> {
        let mut v = self.state_vars.clone();
        v.extend(self.aux_vars.iter().cloned());
        if self.kind == Kind::Timed && !v.iter().any(|n| n == TIMER) {
            v.push(TIMER.to_string());
        }
        v
    }

    pub fn var_list(&self) -> VarList {
        var_list(&self.all_vars())
    }

    pub fn state_var_list(&self) -> VarList {
        var_list(&self.state_vars)
    }

    pub fn mode(&self, id: &str) -> Option<&Mode> {
        self.modes.iter().find(|m| m.id == id)
    }

    pub fn mode_index(&self, id: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.id == id)
    }

    pub fn is_state_var(&self, v: &str) -> bool {
        self.state_vars.iter().any(|s| s == v)
    }

    /// Per-mode candidates, falling back to the common one.
    pub fn lyapunov_for(&self, mode: &str) -> Option<&Poly> {
        self.lyapunov.get(mode).or(self.common_lyapunov.as_ref())
    }

    pub fn is_linear(&self) -> bool {
        self.modes.iter().all(|m| m.field.is_linear())
    }

    /// Same model with all domains and transitions removed (arbitrary switching).
    pub fn without_domains(&self) -> SwitchedModel {
        let mut m = self.clone();
        m.kind = Kind::Arbitrary;
        m.transitions.clear();
        for mode in &mut m.modes {
            mode.domain = Predicate::truth();
            mode.max_dwell = None;
        }
        m.region = None;
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        if self.line > 0 {
            write!(f, "{}:{}: {sev}[{}]: {}", self.line, self.column, self.code, self.message)
        } else {
            write!(f, "{sev}[{}]: {}", self.code, self.message)
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl Diagnostics {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn error(&mut self, code: &'static str, message: impl Into<String>) {
        self.0.push(Diagnostic { severity: Severity::Error, code, line: 0, column: 0, message: message.into() });
    }

    pub fn error_at(&mut self, code: &'static str, line: usize, column: usize, message: impl Into<String>) {
        self.0.push(Diagnostic { severity: Severity::Error, code, line, column, message: message.into() });
    }

    pub fn has_code(&self, code: &str) -> bool {
        self.0.iter().any(|d| d.code == code)
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.0 {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostics {}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("{0}")]
    Unsupported(String),
}
