//! Quantifier-free polynomial predicates in disjunctive normal form.

use std::collections::BTreeMap;
use std::fmt;

use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::poly::Poly;
use crate::rational::Rational;

/// Comparison against zero after canonicalization (`<`, `<=` are flipped).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Cmp {
    Ge,
    Gt,
    Eq,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
            Cmp::Eq => "=",
        }
    }

    pub fn holds(self, v: &Rational) -> bool {
        match self {
            Cmp::Ge => !v.is_negative(),
            Cmp::Gt => v.is_positive(),
            Cmp::Eq => v.is_zero(),
        }
    }

    pub fn holds_f64(self, v: f64, tol: f64) -> bool {
        match self {
            Cmp::Ge => v >= -tol,
            Cmp::Gt => v > -tol,
            Cmp::Eq => v.abs() <= tol,
        }
    }
}

/// `poly ⋈ 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub poly: Poly,
    pub cmp: Cmp,
}

impl Atom {
    pub fn new(poly: Poly, cmp: Cmp) -> Self {
        let poly = if cmp == Cmp::Eq && poly.leading_coeff().is_negative() {
            -&poly
        } else {
            poly
        };
        Atom { poly, cmp }
    }

    pub fn ge(p: Poly) -> Self {
        Atom::new(p, Cmp::Ge)
    }

    pub fn gt(p: Poly) -> Self {
        Atom::new(p, Cmp::Gt)
    }

    pub fn eq(p: Poly) -> Self {
        Atom::new(p, Cmp::Eq)
    }

    pub fn le(p: Poly) -> Self {
        Atom::new(-&p, Cmp::Ge)
    }

    pub fn lt(p: Poly) -> Self {
        Atom::new(-&p, Cmp::Gt)
    }

    /// Truth value when the polynomial is constant.
    pub fn constant_truth(&self) -> Option<bool> {
        self.poly
            .is_constant()
            .then(|| self.cmp.holds(&self.poly.constant_term()))
    }

    pub fn closure(&self) -> Atom {
        match self.cmp {
            Cmp::Gt => Atom { poly: self.poly.clone(), cmp: Cmp::Ge },
            _ => self.clone(),
        }
    }

    /// Disjunction of atoms equivalent to the negation.
    pub fn negate(&self) -> Vec<Atom> {
        match self.cmp {
            Cmp::Ge => vec![Atom::gt(-&self.poly)],
            Cmp::Gt => vec![Atom::ge(-&self.poly)],
            Cmp::Eq => vec![Atom::gt(self.poly.clone()), Atom::gt(-&self.poly)],
        }
    }

    pub fn holds(&self, point: &BTreeMap<String, Rational>) -> Result<bool, crate::poly::PolyError> {
        Ok(self.cmp.holds(&self.poly.evaluate(point)?))
    }

    fn key(&self) -> (Cmp, String) {
        (self.cmp, self.poly.to_string())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} 0", self.poly, self.cmp.symbol())
    }
}

/// Disjunction of conjunctions. No clauses is `false`; one empty clause is `true`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Predicate {
    clauses: Vec<Vec<Atom>>,
}

impl Predicate {
    pub fn truth() -> Self {
        Predicate { clauses: vec![Vec::new()] }
    }

    pub fn falsity() -> Self {
        Predicate { clauses: Vec::new() }
    }

    pub fn atom(a: Atom) -> Self {
        Predicate::from_clauses(vec![vec![a]])
    }

    pub fn from_clauses(clauses: Vec<Vec<Atom>>) -> Self {
        let mut out: Vec<Vec<Atom>> = Vec::new();
        for c in clauses {
            if let Some(c) = normalize_clause(c) {
                if c.is_empty() {
                    return Predicate::truth();
                }
                out.push(c);
            }
        }
        out.sort_by_key(|a| clause_key(a));
        out.dedup();
        // Absorption: a clause containing another clause is redundant.
        let absorbed: Vec<bool> = (0..out.len())
            .map(|i| {
                (0..out.len()).any(|j| {
                    j != i
                        && out[j].len() < out[i].len()
                        && out[j].iter().all(|a| out[i].contains(a))
                })
            })
            .collect();
        let out = out
            .into_iter()
            .zip(absorbed)
            .filter(|(_, a)| !a)
            .map(|(c, _)| c)
            .collect();
        Predicate { clauses: out }
    }

    pub fn clauses(&self) -> &[Vec<Atom>] {
        &self.clauses
    }

    pub fn is_true(&self) -> bool {
        self.clauses.len() == 1 && self.clauses[0].is_empty()
    }

    pub fn is_false(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn and(&self, other: &Predicate) -> Predicate {
        let mut clauses = Vec::new();
        for a in &self.clauses {
            for b in &other.clauses {
                clauses.push(a.iter().chain(b).cloned().collect());
            }
        }
        Predicate::from_clauses(clauses)
    }

    pub fn or(&self, other: &Predicate) -> Predicate {
        Predicate::from_clauses(self.clauses.iter().chain(&other.clauses).cloned().collect())
    }

    pub fn not(&self) -> Predicate {
        let mut acc = Predicate::truth();
        for clause in &self.clauses {
            let negated = Predicate::from_clauses(
                clause.iter().flat_map(|a| a.negate()).map(|a| vec![a]).collect(),
            );
            acc = acc.and(&negated);
        }
        acc
    }

    pub fn implies(&self, other: &Predicate) -> Predicate {
        self.not().or(other)
    }

    /// Syntactic closure: strict comparisons relaxed.
    pub fn closure(&self) -> Predicate {
        Predicate::from_clauses(
            self.clauses
                .iter()
                .map(|c| c.iter().map(Atom::closure).collect())
                .collect(),
        )
    }

    /// True when an equality atom sits in one of several disjuncts, where the
    /// syntactic closure may over-approximate.
    pub fn closure_is_approximate(&self) -> bool {
        self.clauses.len() > 1
            && self
                .clauses
                .iter()
                .any(|c| c.iter().any(|a| a.cmp == Cmp::Eq))
    }

    pub fn holds(&self, point: &BTreeMap<String, Rational>) -> Result<bool, crate::poly::PolyError> {
        for c in &self.clauses {
            let mut all = true;
            for a in c {
                if !a.holds(point)? {
                    all = false;
                    break;
                }
            }
            if all {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn holds_f64(&self, point: &BTreeMap<String, f64>, tol: f64) -> bool {
        self.clauses.iter().any(|c| {
            c.iter().all(|a| {
                let x: Vec<f64> = a
                    .poly
                    .vars()
                    .iter()
                    .map(|v| point.get(v).copied().unwrap_or(0.0))
                    .collect();
                a.cmp.holds_f64(a.poly.eval_f64(&x), tol)
            })
        })
    }

    pub fn map_polys(&self, f: impl Fn(&Poly) -> Poly) -> Predicate {
        Predicate::from_clauses(
            self.clauses
                .iter()
                .map(|c| c.iter().map(|a| Atom::new(f(&a.poly), a.cmp)).collect())
                .collect(),
        )
    }

    pub fn substitute(&self, bindings: &BTreeMap<String, Poly>) -> Predicate {
        self.map_polys(|p| p.substitute(bindings))
    }

    pub fn used_vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.clauses {
            for a in c {
                for v in a.poly.used_vars() {
                    if !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }
}

fn clause_key(c: &[Atom]) -> Vec<(Cmp, String)> {
    c.iter().map(Atom::key).collect()
}

/// Drops true atoms, detects false ones, merges `p >= 0 & -p >= 0` into `p = 0`.
fn normalize_clause(atoms: Vec<Atom>) -> Option<Vec<Atom>> {
    let mut kept: Vec<Atom> = Vec::new();
    for a in atoms {
        match a.constant_truth() {
            Some(true) => continue,
            Some(false) => return None,
            None => kept.push(a),
        }
    }
    let mut merged: Vec<Atom> = Vec::new();
    let mut used = vec![false; kept.len()];
    for i in 0..kept.len() {
        if used[i] {
            continue;
        }
        if kept[i].cmp == Cmp::Ge {
            let neg = -&kept[i].poly;
            if let Some(j) = (i + 1..kept.len())
                .find(|&j| !used[j] && kept[j].cmp == Cmp::Ge && kept[j].poly == neg)
            {
                used[j] = true;
                merged.push(Atom::eq(kept[i].poly.clone()));
                continue;
            }
        }
        merged.push(kept[i].clone());
    }
    // p > 0 together with -p >= 0 or p = 0 is contradictory.
    for a in &merged {
        if a.cmp == Cmp::Gt {
            let neg = -&a.poly;
            if merged.iter().any(|b| {
                (b.cmp != Cmp::Eq && b.poly == neg) || (b.cmp == Cmp::Eq && (b.poly == a.poly || b.poly == neg))
            }) {
                return None;
            }
        }
    }
    // p = 0 makes p >= 0 and -p >= 0 redundant.
    let eqs: Vec<Poly> = merged.iter().filter(|a| a.cmp == Cmp::Eq).map(|a| a.poly.clone()).collect();
    merged.retain(|a| a.cmp != Cmp::Ge || !eqs.iter().any(|e| *e == a.poly || *e == -&a.poly));
    merged.sort_by_key(Atom::key);
    merged.dedup();
    Some(merged)
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_false() {
            return write!(f, "false");
        }
        if self.is_true() {
            return write!(f, "true");
        }
        let many = self.clauses.len() > 1;
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            let paren = many && c.len() > 1;
            if paren {
                write!(f, "(")?;
            }
            for (j, a) in c.iter().enumerate() {
                if j > 0 {
                    write!(f, " & ")?;
                }
                write!(f, "{a}")?;
            }
            if paren {
                write!(f, ")")?;
            }
        }
        Ok(())
    }
}

/// Predicate JSON form: a list of clauses, each a list of `[poly, cmp]` strings.
impl Serialize for Predicate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Vec<(String, &str)>> = self
            .clauses
            .iter()
            .map(|c| c.iter().map(|a| (a.poly.to_string(), a.cmp.symbol())).collect())
            .collect();
        v.serialize(s)
    }
}

pub fn is_zero_poly(p: &Poly) -> bool {
    p.is_zero() || (p.is_constant() && p.constant_term().is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::var_list;
    use crate::rational::int;

    #[test]
    fn opposite_inequalities_merge_to_equality() {
        let v = var_list(&["x1", "x2"]);
        let p = &Poly::var(v.clone(), "x1") * &Poly::var(v, "x2");
        let pred = Predicate::atom(Atom::ge(p.clone())).and(&Predicate::atom(Atom::le(p.clone())));
        assert_eq!(pred.clauses().len(), 1);
        assert_eq!(pred.clauses()[0], vec![Atom::eq(p)]);
    }

    #[test]
    fn negation_round_trip() {
        let v = var_list(&["x"]);
        let x = Poly::var(v.clone(), "x");
        let a = Predicate::atom(Atom::ge(&x - &Poly::constant(v, int(1))));
        assert_eq!(a.not().not(), a);
        assert!(a.and(&a.not()).is_false());
    }

    #[test]
    fn constants_fold() {
        let v = var_list(&["x"]);
        assert!(Predicate::atom(Atom::ge(Poly::constant(v.clone(), int(0)))).is_true());
        assert!(Predicate::atom(Atom::gt(Poly::zero(v))).is_false());
    }
}
