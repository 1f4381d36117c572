//! Discrete controller intermediate representation.
//!
//! Every model becomes a loop `{controller; plant}*`. The controller is a
//! choice over the active mode, then a choice over that mode's outgoing
//! transitions (tests, resets, mode assignment) or staying put.

use std::collections::BTreeMap;
use std::fmt;

use super::predicate::{Atom, Predicate};
use super::{Kind, SwitchedModel, TIMER};
use crate::poly::Poly;
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Seq(Vec<Stmt>),
    Choice(Vec<Stmt>),
    Test(Predicate),
    /// `?u = p`
    ModeIs(String),
    Assign(String, Poly),
    /// `u := q`
    SetMode(String),
    Skip,
    /// Continuous evolution of the active mode within its domain.
    Evolve { mode: String, domain: Predicate },
    Loop(Box<Stmt>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControllerIR {
    pub controller: Stmt,
    pub plant: Stmt,
}

/// One root-to-leaf route through the controller, in pre-state terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub from: String,
    pub tests: Vec<Predicate>,
    pub assigns: BTreeMap<String, Poly>,
    pub to: String,
}

impl Path {
    pub fn hypothesis(&self) -> Predicate {
        self.tests.iter().fold(Predicate::truth(), |acc, t| acc.and(t))
    }
}

pub fn to_program(m: &SwitchedModel) -> ControllerIR {
    let vars = m.var_list();
    let controller = match m.kind {
        Kind::Arbitrary | Kind::StateDependent => {
            Stmt::Choice(m.modes.iter().map(|p| Stmt::SetMode(p.id.clone())).collect())
        }
        _ => Stmt::Choice(
            m.modes
                .iter()
                .map(|p| {
                    let mut branches: Vec<Stmt> = m
                        .transitions
                        .iter()
                        .filter(|t| t.from == p.id)
                        .map(|t| {
                            let mut body = Vec::new();
                            if let Some(theta) = &t.min_dwell {
                                let tau = Poly::var(vars.clone(), TIMER);
                                let c = Poly::constant(vars.clone(), theta.clone());
                                body.push(Stmt::Test(Predicate::atom(Atom::ge(&tau - &c))));
                            }
                            if !t.guard.is_true() {
                                body.push(Stmt::Test(t.guard.clone()));
                            }
                            for (v, e) in &t.reset {
                                body.push(Stmt::Assign(v.clone(), e.clone()));
                            }
                            if m.kind == Kind::Timed {
                                body.push(Stmt::Assign(TIMER.into(), Poly::zero(vars.clone())));
                            }
                            body.push(Stmt::SetMode(t.to.clone()));
                            Stmt::Seq(body)
                        })
                        .collect();
                    branches.push(Stmt::Skip);
                    Stmt::Seq(vec![Stmt::ModeIs(p.id.clone()), Stmt::Choice(branches)])
                })
                .collect(),
        ),
    };
    let plant = Stmt::Choice(
        m.modes
            .iter()
            .map(|p| {
                let mut domain = p.domain.clone();
                if let Some(big) = &p.max_dwell {
                    let tau = Poly::var(vars.clone(), TIMER);
                    let c = Poly::constant(vars.clone(), big.clone());
                    domain = domain.and(&Predicate::atom(Atom::le(&tau - &c)));
                }
                Stmt::Seq(vec![
                    Stmt::ModeIs(p.id.clone()),
                    Stmt::Evolve { mode: p.id.clone(), domain },
                ])
            })
            .collect(),
    );
    ControllerIR { controller, plant }
}

#[derive(Clone)]
struct SymState {
    mode: Option<String>,
    from: Option<String>,
    tests: Vec<Predicate>,
    subst: BTreeMap<String, Poly>,
    to: Option<String>,
}

impl ControllerIR {
    pub fn program(&self) -> Stmt {
        Stmt::Loop(Box::new(Stmt::Seq(vec![self.controller.clone(), self.plant.clone()])))
    }

    /// Forward symbolic execution of the controller; only paths that end in a
    /// mode assignment are returned.
    pub fn paths(&self, modes: &[String]) -> Vec<Path> {
        let mut out = Vec::new();
        for p in modes {
            let start = SymState {
                mode: Some(p.clone()),
                from: Some(p.clone()),
                tests: Vec::new(),
                subst: BTreeMap::new(),
                to: None,
            };
            for s in sym_exec(&self.controller, vec![start]) {
                if let (Some(from), Some(to)) = (s.from, s.to) {
                    out.push(Path { from, tests: s.tests, assigns: s.subst, to });
                }
            }
        }
        out
    }

    /// Concrete interpretation: every reachable `(mode, valuation)` after one
    /// controller pass from `mode` at `env`.
    pub fn step(&self, mode: &str, env: &BTreeMap<String, Rational>) -> Vec<(String, BTreeMap<String, Rational>)> {
        run(&self.controller, vec![(mode.to_string(), env.clone())])
    }
}

fn sym_exec(s: &Stmt, states: Vec<SymState>) -> Vec<SymState> {
    match s {
        Stmt::Seq(items) => items.iter().fold(states, |acc, st| sym_exec(st, acc)),
        Stmt::Choice(items) => items.iter().flat_map(|st| sym_exec(st, states.clone())).collect(),
        Stmt::Test(p) => states
            .into_iter()
            .filter_map(|mut st| {
                let t = p.substitute(&st.subst);
                if t.is_false() {
                    return None;
                }
                if !t.is_true() {
                    st.tests.push(t);
                }
                Some(st)
            })
            .collect(),
        Stmt::ModeIs(p) => states
            .into_iter()
            .filter(|st| st.mode.as_deref() == Some(p.as_str()))
            .collect(),
        Stmt::Assign(v, e) => states
            .into_iter()
            .map(|mut st| {
                let val = e.substitute(&st.subst);
                st.subst.insert(v.clone(), val);
                st
            })
            .collect(),
        Stmt::SetMode(q) => states
            .into_iter()
            .map(|mut st| {
                st.mode = Some(q.clone());
                st.to = Some(q.clone());
                st
            })
            .collect(),
        Stmt::Skip | Stmt::Evolve { .. } | Stmt::Loop(_) => states,
    }
}

type Config = (String, BTreeMap<String, Rational>);

fn run(s: &Stmt, states: Vec<Config>) -> Vec<Config> {
    match s {
        Stmt::Seq(items) => items.iter().fold(states, |acc, st| run(st, acc)),
        Stmt::Choice(items) => items.iter().flat_map(|st| run(st, states.clone())).collect(),
        Stmt::Test(p) => states
            .into_iter()
            .filter(|(_, env)| p.holds(env).unwrap_or(false))
            .collect(),
        Stmt::ModeIs(p) => states.into_iter().filter(|(m, _)| m == p).collect(),
        Stmt::Assign(v, e) => states
            .into_iter()
            .filter_map(|(m, mut env)| {
                let val = e.evaluate(&env).ok()?;
                env.insert(v.clone(), val);
                Some((m, env))
            })
            .collect(),
        Stmt::SetMode(q) => states.into_iter().map(|(_, env)| (q.clone(), env)).collect(),
        Stmt::Skip | Stmt::Evolve { .. } | Stmt::Loop(_) => states,
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::Seq(items) => {
                for (i, s) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{s}")?;
                    if !matches!(s, Stmt::Seq(_) | Stmt::Choice(_) | Stmt::Loop(_)) {
                        write!(f, ";")?;
                    }
                }
                Ok(())
            }
            Stmt::Choice(items) => {
                write!(f, "{{")?;
                for (i, s) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ++ ")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, "}}")
            }
            Stmt::Test(p) => write!(f, "?{p}"),
            Stmt::ModeIs(p) => write!(f, "?mode={p}"),
            Stmt::Assign(v, e) => write!(f, "{v} := {e}"),
            Stmt::SetMode(q) => write!(f, "mode:={q}"),
            Stmt::Skip => write!(f, "mode:=mode"),
            Stmt::Evolve { mode, domain } => write!(f, "{{ode({mode}) & {domain}}}"),
            Stmt::Loop(body) => write!(f, "{{{body}}}*"),
        }
    }
}

impl fmt::Display for ControllerIR {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.program())
    }
}
