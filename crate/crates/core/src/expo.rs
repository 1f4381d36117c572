//! Rational enclosures of `e^r` and polynomials with symbolic `e^r` coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::poly::{Poly, VarList};
use crate::rational::{format_rational, int, serde_rational, Rational};

pub const DEFAULT_EXP_TERMS: usize = 30;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpBound {
    #[serde(with = "serde_rational")]
    pub exponent: Rational,
    #[serde(with = "serde_rational")]
    pub lower: Rational,
    #[serde(with = "serde_rational")]
    pub upper: Rational,
}

impl ExpBound {
    pub fn width(&self) -> Rational {
        &self.upper - &self.lower
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lower <= x && x <= &self.upper
    }
}

/// Rational interval containing `e^r` built from `budget` series terms.
///
/// Nonpositive exponents use the alternating series while its terms decrease
/// from the truncation point on, intersected with the reciprocal of the
/// positive-side bound. Positive exponents use the Taylor partial sum with a
/// geometric remainder bound, intersected with the square of the enclosure
/// at `r/2`.
pub fn exp_enclosure(r: &Rational, budget: usize) -> ExpBound {
    assert!(budget >= 1, "exp_enclosure needs at least one term");
    let (lower, upper) = enclose(r, budget);
    ExpBound { exponent: r.clone(), lower, upper }
}

fn enclose(r: &Rational, n: usize) -> (Rational, Rational) {
    if r.is_zero() {
        return (Rational::one(), Rational::one());
    }
    let limit = int(n as i64 + 1);
    if r.is_negative() {
        let s = -r;
        let mut best: Option<(Rational, Rational)> = None;
        if s <= limit {
            // P_{n-1}, P_n bracket e^{-s} since terms decrease from index n on.
            let (a, term) = partial_sum(&-&s, n);
            let b = &a + &term * -&s / int(n as i64);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let lo = if lo.is_negative() { Rational::zero() } else { lo };
            best = Some((lo, hi));
        }
        if s >= Rational::one() || best.is_none() {
            let (plo, phi) = enclose(&s, n);
            best = Some(intersect(best, (phi.recip(), plo.recip())));
        }
        return best.expect("some enclosure");
    }
    let mut best: Option<(Rational, Rational)> = None;
    if r < &limit {
        let (sum, last) = partial_sum(r, n);
        let next = &last * r / int(n as i64);
        let ratio = r / &limit;
        let tail = next / (Rational::one() - ratio);
        best = Some((sum.clone(), sum + tail));
    }
    if r >= &Rational::one() || best.is_none() {
        let (lo, hi) = enclose(&(r / int(2)), n);
        best = Some(intersect(best, (&lo * &lo, &hi * &hi)));
    }
    best.expect("some enclosure")
}

// Both enclosures are valid, so their intersection is too; keeping it makes
// the result nested in the budget.
fn intersect(a: Option<(Rational, Rational)>, b: (Rational, Rational)) -> (Rational, Rational) {
    match a {
        None => b,
        Some((lo, hi)) => (lo.max(b.0), hi.min(b.1)),
    }
}

/// Returns `Σ_{k<n} r^k/k!` and the last term `r^{n-1}/(n-1)!`.
fn partial_sum(r: &Rational, n: usize) -> (Rational, Rational) {
    let mut term = Rational::one();
    let mut sum = Rational::one();
    for k in 1..n {
        term = term * r / int(k as i64);
        sum += &term;
    }
    (sum, term)
}

/// `factor · e^{exponent}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaledExpCoeff {
    #[serde(with = "serde_rational")]
    pub factor: Rational,
    #[serde(with = "serde_rational")]
    pub exponent: Rational,
}

impl ScaledExpCoeff {
    pub fn new(factor: Rational, exponent: Rational) -> Self {
        ScaledExpCoeff { factor, exponent }
    }

    pub fn as_rational(&self) -> Option<Rational> {
        if self.exponent.is_zero() {
            Some(self.factor.clone())
        } else {
            None
        }
    }

    pub fn mul(&self, other: &ScaledExpCoeff) -> ScaledExpCoeff {
        ScaledExpCoeff {
            factor: &self.factor * &other.factor,
            exponent: &self.exponent + &other.exponent,
        }
    }

    /// Exact sum when the exponents agree.
    pub fn add(&self, other: &ScaledExpCoeff) -> Option<ScaledExpCoeff> {
        (self.exponent == other.exponent).then(|| ScaledExpCoeff {
            factor: &self.factor + &other.factor,
            exponent: self.exponent.clone(),
        })
    }

    pub fn enclosure(&self, budget: usize) -> (Rational, Rational) {
        let b = exp_enclosure(&self.exponent, budget);
        let lo = &self.factor * &b.lower;
        let hi = &self.factor * &b.upper;
        if lo <= hi {
            (lo, hi)
        } else {
            (hi, lo)
        }
    }
}

/// `Σ_E P_E(x) · e^E`, keeping each exponential symbolic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpPoly {
    vars: VarList,
    parts: BTreeMap<Rational, Poly>,
}

impl ExpPoly {
    pub fn from_poly(p: Poly) -> Self {
        let vars = p.vars().clone();
        let mut parts = BTreeMap::new();
        if !p.is_zero() {
            parts.insert(Rational::zero(), p);
        }
        ExpPoly { vars, parts }
    }

    pub fn zero(vars: VarList) -> Self {
        ExpPoly { vars, parts: BTreeMap::new() }
    }

    pub fn vars(&self) -> &VarList {
        &self.vars
    }

    pub fn add_part(&mut self, exponent: Rational, p: &Poly) {
        let cur = self
            .parts
            .remove(&exponent)
            .unwrap_or_else(|| Poly::zero(self.vars.clone()));
        let sum = &cur + p;
        if sum.vars()[..] != self.vars[..] && sum.vars().len() > self.vars.len() {
            self.vars = sum.vars().clone();
        }
        if !sum.is_zero() {
            self.parts.insert(exponent, sum);
        }
    }

    pub fn parts(&self) -> impl Iterator<Item = (&Rational, &Poly)> {
        self.parts.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    /// The plain polynomial when every exponent is zero.
    pub fn as_poly(&self) -> Option<Poly> {
        match self.parts.len() {
            0 => Some(Poly::zero(self.vars.clone())),
            1 => self.parts.get(&Rational::zero()).cloned(),
            _ => None,
        }
    }

    pub fn has_exp(&self) -> bool {
        self.parts.keys().any(|e| !e.is_zero())
    }

    /// Replaces each `e^E` by its lower (`upper = false`) or upper enclosure.
    pub fn bound(&self, budget: usize, upper: bool) -> (Poly, Vec<ExpBound>) {
        let mut out = Poly::zero(self.vars.clone());
        let mut used = Vec::new();
        for (e, p) in &self.parts {
            if e.is_zero() {
                out = &out + p;
                continue;
            }
            let b = exp_enclosure(e, budget);
            let c = if upper { &b.upper } else { &b.lower };
            out = &out + &p.scale(c);
            used.push(b);
        }
        (out, used)
    }

    /// Exact-as-possible value at a point: an interval for the exponential parts.
    pub fn evaluate(
        &self,
        point: &BTreeMap<String, Rational>,
        budget: usize,
    ) -> Result<(Rational, Rational), crate::poly::PolyError> {
        let mut lo = Rational::zero();
        let mut hi = Rational::zero();
        for (e, p) in &self.parts {
            let v = p.evaluate(point)?;
            if e.is_zero() {
                lo += &v;
                hi += &v;
            } else {
                let (a, b) = ScaledExpCoeff::new(v, e.clone()).enclosure(budget);
                lo += a;
                hi += b;
            }
        }
        Ok((lo, hi))
    }

    pub fn eval_f64(&self, point: &BTreeMap<String, f64>) -> f64 {
        self.parts
            .iter()
            .map(|(e, p)| {
                let x: Vec<f64> = p.vars().iter().map(|v| point.get(v).copied().unwrap_or(0.0)).collect();
                p.eval_f64(&x) * crate::rational::to_f64(e).exp()
            })
            .sum()
    }
}

impl fmt::Display for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, p) in &self.parts {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if e.is_zero() {
                write!(f, "{p}")?;
            } else {
                write!(f, "({p})*exp({})", format_rational(e))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, to_f64};

    #[test]
    fn zero_exponent_is_exact() {
        let b = exp_enclosure(&Rational::zero(), 3);
        assert_eq!(b.lower, Rational::one());
        assert_eq!(b.upper, Rational::one());
    }

    #[test]
    fn e_to_the_one() {
        let b = exp_enclosure(&int(1), 30);
        assert!(b.width() <= rat(1, 1_000_000_000_000));
        assert!(to_f64(&b.lower) <= std::f64::consts::E + 1e-15);
        assert!(to_f64(&b.upper) >= std::f64::consts::E - 1e-15);
    }

    #[test]
    fn width_shrinks_with_budget() {
        for r in [rat(-6, 5), rat(7, 2), rat(-9, 1), rat(40, 1)] {
            let mut last = exp_enclosure(&r, 1).width();
            for n in 2..40 {
                let w = exp_enclosure(&r, n).width();
                assert!(w <= last, "r={r} n={n}");
                last = w;
            }
        }
    }

    #[test]
    fn scaled_coeff_algebra() {
        let a = ScaledExpCoeff::new(rat(1, 2), rat(-1, 3));
        let b = ScaledExpCoeff::new(int(3), rat(-1, 3));
        assert_eq!(a.add(&b).unwrap().factor, rat(7, 2));
        assert_eq!(a.mul(&b).exponent, rat(-2, 3));
        assert_eq!(ScaledExpCoeff::new(int(4), Rational::zero()).as_rational(), Some(int(4)));
    }
}
