//! Multivariate polynomials with exact rational coefficients.
//!
//! A [`Poly`] carries its ordered variable list; monomials are exponent vectors
//! aligned with that list and ordered graded-lexicographically. Binary
//! operations on polynomials over different variable lists first embed both
//! operands into the union of the lists (left operand's order first).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{format_rational, to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("no value bound for variable `{0}`")]
    MissingBinding(String),
}

pub type VarList = Arc<[String]>;

pub fn var_list<S: AsRef<str>>(names: &[S]) -> VarList {
    names.iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>().into()
}

/// Exponent vector aligned with a variable list.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn div(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// All monomials in `n` variables with total degree in `lo..=hi`, ascending grlex.
    pub fn all_up_to(n: usize, lo: u32, hi: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        for d in lo..=hi {
            let mut cur = vec![0u32; n];
            Self::fill(&mut out, &mut cur, 0, d);
        }
        out.sort();
        out
    }

    fn fill(out: &mut Vec<Monomial>, cur: &mut Vec<u32>, i: usize, left: u32) {
        if cur.is_empty() {
            if left == 0 {
                out.push(Monomial(Vec::new()));
            }
            return;
        }
        if i == cur.len() - 1 {
            cur[i] = left;
            out.push(Monomial(cur.clone()));
            cur[i] = 0;
            return;
        }
        for e in (0..=left).rev() {
            cur[i] = e;
            Self::fill(out, cur, i + 1, left - e);
        }
        cur[i] = 0;
    }

    pub fn render(&self, vars: &[String]) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .zip(vars)
            .filter(|(e, _)| **e > 0)
            .map(|(e, v)| if *e == 1 { v.clone() } else { format!("{v}^{e}") })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug)]
pub struct Poly {
    vars: VarList,
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero(vars: VarList) -> Self {
        Poly { vars, terms: BTreeMap::new() }
    }

    pub fn constant(vars: VarList, c: Rational) -> Self {
        let mut p = Poly::zero(vars);
        let n = p.vars.len();
        p.add_term(Monomial::one(n), c);
        p
    }

    /// The polynomial `name`; panics if `name` is not in `vars`.
    pub fn var(vars: VarList, name: &str) -> Self {
        let i = vars
            .iter()
            .position(|v| v == name)
            .unwrap_or_else(|| panic!("variable `{name}` not in list"));
        let n = vars.len();
        let mut p = Poly::zero(vars);
        p.add_term(Monomial::unit(n, i), Rational::one());
        p
    }

    pub fn monomial(vars: VarList, m: Monomial, c: Rational) -> Self {
        let mut p = Poly::zero(vars);
        p.add_term(m, c);
        p
    }

    pub fn from_terms(vars: VarList, terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Poly::zero(vars);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn vars(&self) -> &VarList {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        debug_assert_eq!(m.0.len(), self.vars.len());
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get() + &c;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.degree() == 0)
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&Monomial::one(self.nvars()))
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Lowest total degree of a nonzero term (0 for the zero polynomial).
    pub fn min_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).min().unwrap_or(0)
    }

    pub fn degree_in(&self, var: &str) -> u32 {
        match self.index_of(var) {
            Some(i) => self.terms.keys().map(|m| m.0[i]).max().unwrap_or(0),
            None => 0,
        }
    }

    pub fn index_of(&self, var: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == var)
    }

    /// Variables with a nonzero exponent in some term, in list order.
    pub fn used_vars(&self) -> Vec<String> {
        let mut used = vec![false; self.nvars()];
        for m in self.terms.keys() {
            for (i, e) in m.0.iter().enumerate() {
                if *e > 0 {
                    used[i] = true;
                }
            }
        }
        self.vars
            .iter()
            .zip(used)
            .filter(|(_, u)| *u)
            .map(|(v, _)| v.clone())
            .collect()
    }

    pub fn max_abs_coeff(&self) -> Rational {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Re-embeds this polynomial over another variable list.
    pub fn with_vars(&self, vars: &VarList) -> Result<Poly, PolyError> {
        if Arc::ptr_eq(&self.vars, vars) || self.vars[..] == vars[..] {
            return Ok(Poly { vars: vars.clone(), terms: self.terms.clone() });
        }
        let mut map = Vec::with_capacity(self.nvars());
        for v in self.vars.iter() {
            map.push(vars.iter().position(|w| w == v));
        }
        let mut out = Poly::zero(vars.clone());
        for (m, c) in &self.terms {
            let mut e = vec![0u32; vars.len()];
            for (i, exp) in m.0.iter().enumerate() {
                if *exp == 0 {
                    continue;
                }
                match map[i] {
                    Some(j) => e[j] = *exp,
                    None => return Err(PolyError::UndeclaredVariable(self.vars[i].clone())),
                }
            }
            out.add_term(Monomial(e), c.clone());
        }
        Ok(out)
    }

    fn aligned(&self, other: &Poly) -> (Poly, Poly) {
        if Arc::ptr_eq(&self.vars, &other.vars) || self.vars[..] == other.vars[..] {
            return (self.clone(), other.with_vars(&self.vars).expect("same variables"));
        }
        let mut names: Vec<String> = self.vars.to_vec();
        for v in other.vars.iter() {
            if !names.contains(v) {
                names.push(v.clone());
            }
        }
        let vars: VarList = names.into();
        (
            self.with_vars(&vars).expect("union contains all"),
            other.with_vars(&vars).expect("union contains all"),
        )
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.vars.clone());
        }
        Poly {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::constant(self.vars.clone(), Rational::one());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn derivative(&self, var: &str) -> Poly {
        let mut out = Poly::zero(self.vars.clone());
        let Some(i) = self.index_of(var) else {
            return out;
        };
        for (m, c) in &self.terms {
            if m.0[i] == 0 {
                continue;
            }
            let mut e = m.0.clone();
            e[i] -= 1;
            out.add_term(Monomial(e), c * Rational::from_integer(m.0[i].into()));
        }
        out
    }

    /// Exact value at a point; every variable the polynomial uses must be bound.
    pub fn evaluate(&self, point: &BTreeMap<String, Rational>) -> Result<Rational, PolyError> {
        let mut values = Vec::with_capacity(self.nvars());
        let used = self.used_vars();
        for v in self.vars.iter() {
            match point.get(v) {
                Some(x) => values.push(Some(x.clone())),
                None if used.contains(v) => return Err(PolyError::MissingBinding(v.clone())),
                None => values.push(None),
            }
        }
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, e) in m.0.iter().enumerate() {
                if *e > 0 {
                    let x = values[i].as_ref().expect("bound");
                    t *= num::pow(x.clone(), *e as usize);
                }
            }
            total += t;
        }
        Ok(total)
    }

    /// Evaluation at a float point aligned with this polynomial's variables.
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                m.0.iter()
                    .zip(x)
                    .fold(to_f64(c), |acc, (e, xi)| acc * xi.powi(*e as i32))
            })
            .sum()
    }

    /// Simultaneous substitution `var ↦ poly`; unbound variables stay.
    pub fn substitute(&self, bindings: &BTreeMap<String, Poly>) -> Poly {
        let mut names: Vec<String> = self.vars.to_vec();
        for p in bindings.values() {
            for v in p.vars.iter() {
                if !names.contains(v) {
                    names.push(v.clone());
                }
            }
        }
        let vars: VarList = names.into();
        let images: Vec<Poly> = self
            .vars
            .iter()
            .map(|v| match bindings.get(v) {
                Some(p) => p.with_vars(&vars).expect("union"),
                None => Poly::var(vars.clone(), v),
            })
            .collect();
        let mut out = Poly::zero(vars.clone());
        for (m, c) in &self.terms {
            let mut t = Poly::constant(vars.clone(), c.clone());
            for (i, e) in m.0.iter().enumerate() {
                if *e > 0 {
                    t = &t * &images[i].pow(*e);
                }
            }
            out = &out + &t;
        }
        if vars.len() != self.vars.len() {
            // Drop helper variables that no longer occur.
            let keep: Vec<String> = vars
                .iter()
                .filter(|v| self.vars.contains(v) || out.used_vars().contains(v))
                .cloned()
                .collect();
            if keep.len() == self.vars.len() {
                return out.with_vars(&self.vars).expect("kept original variables");
            }
            return out.with_vars(&keep.into()).expect("kept used variables");
        }
        out
    }

    /// Terms of exact total degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> Poly {
        Poly {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() == d)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn is_homogeneous(&self, d: u32) -> bool {
        self.terms.keys().all(|m| m.degree() == d)
    }

    /// Leading coefficient under the graded-lex order (zero for the zero poly).
    pub fn leading_coeff(&self) -> Rational {
        self.terms
            .iter()
            .next_back()
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn leading_monomial(&self) -> Option<&Monomial> {
        self.terms.keys().next_back()
    }

    /// Multivariate division by `divisor` (graded-lex leading terms):
    /// returns `(quotient, remainder)` with `self = quotient*divisor + remainder`.
    pub fn divide(&self, divisor: &Poly) -> (Poly, Poly) {
        let (p, d) = self.aligned(divisor);
        let mut quotient = Poly::zero(p.vars.clone());
        let mut remainder = Poly::zero(p.vars.clone());
        let Some(lm) = d.leading_monomial().cloned() else {
            return (quotient, p);
        };
        let lc = d.leading_coeff();
        let mut rest = p;
        while let Some((m, c)) = rest.terms.iter().next_back().map(|(m, c)| (m.clone(), c.clone())) {
            if lm.divides(&m) {
                let qm = m.div(&lm);
                let qc = &c / &lc;
                let step = Poly::monomial(rest.vars.clone(), qm, qc);
                rest = &rest - &(&step * &d);
                quotient = &quotient + &step;
            } else {
                rest.terms.remove(&m);
                remainder.add_term(m, c);
            }
        }
        (quotient, remainder)
    }

    pub fn to_string_with_precision(&self) -> String {
        self.to_string()
    }

    /// Float-compiled form evaluated against the variable order `order`.
    pub fn compile(&self, order: &[String]) -> FloatPoly {
        let idx: Vec<Option<usize>> =
            self.vars.iter().map(|v| order.iter().position(|w| w == v)).collect();
        FloatPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let factors = m
                        .0
                        .iter()
                        .enumerate()
                        .filter(|(_, e)| **e > 0)
                        .map(|(i, e)| (idx[i].expect("variable present in order"), *e))
                        .collect();
                    (to_f64(c), factors)
                })
                .collect(),
        }
    }
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        if self.vars[..] == other.vars[..] {
            return self.terms == other.terms;
        }
        let (a, b) = self.aligned(other);
        a.terms == b.terms
    }
}

impl Eq for Poly {}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.degree() == 0 {
                write!(f, "{}", format_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "{}", m.render(&self.vars))?;
            } else {
                write!(f, "{}*{}", format_rational(&mag), m.render(&self.vars))?;
            }
        }
        Ok(())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let (mut a, b) = self.aligned(rhs);
        for (m, c) in b.terms {
            a.add_term(m, c);
        }
        a
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let (mut a, b) = self.aligned(rhs);
        for (m, c) in b.terms {
            a.add_term(m, -c);
        }
        a
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let (a, b) = self.aligned(rhs);
        let mut out = Poly::zero(a.vars.clone());
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&-Rational::one())
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(self, rhs: Poly) -> Poly {
        &self + &rhs
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        &self - &rhs
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        &self * &rhs
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

/// Float evaluation form of a polynomial (simulation hot path).
#[derive(Clone, Debug)]
pub struct FloatPoly {
    terms: Vec<(f64, Vec<(usize, u32)>)>,
}

impl FloatPoly {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, fs)| fs.iter().fold(*c, |acc, (i, e)| acc * pow_u(x[*i], *e)))
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

fn pow_u(x: f64, e: u32) -> f64 {
    match e {
        1 => x,
        2 => x * x,
        _ => x.powi(e as i32),
    }
}

/// Right-hand sides of an ODE system `x_i' = f_i(x)`, in declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    rhs: Vec<(String, Poly)>,
}

impl VectorField {
    pub fn new(rhs: Vec<(String, Poly)>) -> Self {
        VectorField { rhs }
    }

    pub fn entries(&self) -> &[(String, Poly)] {
        &self.rhs
    }

    pub fn get(&self, var: &str) -> Option<&Poly> {
        self.rhs.iter().find(|(v, _)| v == var).map(|(_, p)| p)
    }

    pub fn declared(&self) -> BTreeSet<&str> {
        self.rhs.iter().map(|(v, _)| v.as_str()).collect()
    }

    /// True when every right-hand side is a linear form (no constant term).
    pub fn is_linear(&self) -> bool {
        self.rhs.iter().all(|(_, p)| p.is_homogeneous(1) || p.is_zero())
    }
}

/// `∇V · f`, the rate of change of `v` along the field.
pub fn lie_derivative(v: &Poly, field: &VectorField) -> Result<Poly, PolyError> {
    let mut out = Poly::zero(v.vars().clone());
    for name in v.used_vars() {
        let f = field
            .get(&name)
            .ok_or_else(|| PolyError::UndeclaredVariable(name.clone()))?;
        out = &out + &(&v.derivative(&name) * f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn xy() -> VarList {
        var_list(&["x", "y"])
    }

    #[test]
    fn grlex_order_and_printing() {
        let v = xy();
        let x = Poly::var(v.clone(), "x");
        let y = Poly::var(v.clone(), "y");
        let p = &(&(&x * &x) - &(&x * &y).scale(&rat(33, 20))) + &(&y * &y);
        assert_eq!(p.to_string(), "x^2 - 33/20*x*y + y^2");
        let q = &(&x + &Poly::constant(v, int(1))).pow(2) - &x;
        assert_eq!(q.to_string(), "x^2 + x + 1");
    }

    #[test]
    fn constant_has_zero_lie_derivative() {
        let v = xy();
        let c = Poly::constant(v.clone(), int(5));
        let field = VectorField::new(vec![
            ("x".into(), Poly::var(v.clone(), "y")),
            ("y".into(), -Poly::var(v, "x")),
        ]);
        assert!(lie_derivative(&c, &field).unwrap().is_zero());
    }

    #[test]
    fn lie_derivative_rejects_undeclared() {
        let v = var_list(&["x", "w"]);
        let p = Poly::var(v.clone(), "w");
        let field = VectorField::new(vec![("x".into(), Poly::var(v, "x"))]);
        assert_eq!(
            lie_derivative(&p, &field),
            Err(PolyError::UndeclaredVariable("w".into()))
        );
    }

    #[test]
    fn missing_binding_names_variable() {
        let v = xy();
        let p = &Poly::var(v.clone(), "x") * &Poly::var(v, "y");
        let mut pt = BTreeMap::new();
        pt.insert("x".to_string(), int(1));
        assert_eq!(p.evaluate(&pt), Err(PolyError::MissingBinding("y".into())));
    }

    #[test]
    fn substitution_of_absent_variable_is_identity() {
        let v = var_list(&["intV", "relV", "t"]);
        let p = &Poly::var(v.clone(), "intV") * &Poly::var(v.clone(), "relV");
        let mut b = BTreeMap::new();
        b.insert("t".to_string(), Poly::zero(v));
        assert_eq!(p.substitute(&b), p);
    }

    #[test]
    fn binomial_substitution() {
        let v = var_list(&["x"]);
        let x = Poly::var(v.clone(), "x");
        let mut b = BTreeMap::new();
        b.insert("x".to_string(), &x + &Poly::constant(v, int(1)));
        assert_eq!((&x * &x).substitute(&b).to_string(), "x^2 + 2*x + 1");
    }

    #[test]
    fn division_by_linear_form() {
        let v = xy();
        let x = Poly::var(v.clone(), "x");
        let h = &x - &Poly::constant(v.clone(), int(1));
        let p = (&h * &h).scale(&rat(1, 2));
        let (q, r) = p.divide(&h);
        assert!(r.is_zero());
        assert_eq!(&q * &h, p);
        let (_, r2) = Poly::var(v, "y").divide(&h);
        assert_eq!(r2.to_string(), "y");
    }

    #[test]
    fn monomial_enumeration() {
        let ms = Monomial::all_up_to(2, 0, 2);
        assert_eq!(ms.len(), 6);
        assert_eq!(ms[0], Monomial(vec![0, 0]));
        assert_eq!(Monomial::all_up_to(3, 2, 2).len(), 6);
    }
}
