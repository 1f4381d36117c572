//! Randomized counterexample search with exact re-checking.

use std::collections::BTreeMap;

use num::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::certificate::Counterexample;
use crate::expo::ExpPoly;
use crate::model::predicate::{Atom, Cmp};
use crate::poly::{FloatPoly, Poly};
use crate::rational::{from_f64_exact, to_f64, Rational};
use crate::vcgen::{VcKind, VerificationCondition};

/// Enclosure budget used when re-checking exponential conclusions.
const RECHECK_TERMS: usize = 60;

/// One disjunct of the hypothesis after eliminating linear equalities.
struct Slice {
    free: Vec<String>,
    /// Eliminated variables, in elimination order, as polynomials of later ones.
    solved: Vec<(String, Poly)>,
    solved_f: Vec<(usize, FloatPoly)>,
    atoms_f: Vec<(Cmp, FloatPoly)>,
}

fn eliminate(clause: &[Atom], vars: &[String]) -> Slice {
    let mut atoms: Vec<Atom> = clause.to_vec();
    let mut solved: Vec<(String, Poly)> = Vec::new();
    loop {
        let mut pick = None;
        'outer: for (k, a) in atoms.iter().enumerate() {
            if a.cmp != Cmp::Eq {
                continue;
            }
            for v in a.poly.used_vars() {
                if a.poly.degree_in(&v) != 1 {
                    continue;
                }
                let d = a.poly.derivative(&v);
                if d.is_constant() && !d.constant_term().is_zero() {
                    let c = d.constant_term();
                    let rest = &a.poly - &Poly::var(a.poly.vars().clone(), &v).scale(&c);
                    pick = Some((k, v, rest.scale(&(-c.recip()))));
                    break 'outer;
                }
            }
        }
        let Some((k, v, image)) = pick else { break };
        atoms.remove(k);
        let b: BTreeMap<String, Poly> = [(v.clone(), image.clone())].into();
        atoms = atoms.iter().map(|a| Atom::new(a.poly.substitute(&b), a.cmp)).collect();
        for (_, p) in solved.iter_mut() {
            *p = p.substitute(&b);
        }
        solved.push((v, image));
    }
    let free: Vec<String> = vars.iter().filter(|v| !solved.iter().any(|(s, _)| s == *v)).cloned().collect();
    let order: Vec<String> = vars.to_vec();
    let solved_f = solved
        .iter()
        .map(|(v, p)| (order.iter().position(|w| w == v).expect("var"), p.compile(&order)))
        .collect();
    let atoms_f = atoms.iter().map(|a| (a.cmp, a.poly.compile(&order))).collect();
    Slice { free, solved, solved_f, atoms_f }
}

struct Target {
    parts: Vec<(f64, FloatPoly)>,
    cmp: Cmp,
}

impl Target {
    fn eval(&self, x: &[f64]) -> f64 {
        self.parts.iter().map(|(k, p)| k * p.eval(x)).sum()
    }

    /// Positive when violated.
    fn violation(&self, x: &[f64]) -> f64 {
        let v = self.eval(x);
        match self.cmp {
            Cmp::Ge => -v,
            Cmp::Gt => -v,
            Cmp::Eq => v.abs(),
        }
    }
}

fn exact_violation(vc: &VerificationCondition, point: &BTreeMap<String, Rational>) -> Option<Vec<Rational>> {
    if !vc.hypothesis.holds(point).ok()? {
        return None;
    }
    if vc.excluded_origin && vc.state_vars.iter().all(|v| point.get(v).is_none_or(|x| x.is_zero())) {
        return None;
    }
    exact_conclusion_violation(&vc.conclusion.expr, vc.conclusion.cmp, point)
}

pub(crate) fn exact_conclusion_violation(
    expr: &ExpPoly,
    cmp: Cmp,
    point: &BTreeMap<String, Rational>,
) -> Option<Vec<Rational>> {
    if let Some(p) = expr.as_poly() {
        let v = p.evaluate(point).ok()?;
        return (!cmp.holds(&v)).then_some(vec![v]);
    }
    let (lo, hi) = expr.evaluate(point, RECHECK_TERMS).ok()?;
    let violated = match cmp {
        Cmp::Ge => hi.is_negative(),
        Cmp::Gt => !hi.is_positive(),
        Cmp::Eq => lo.is_positive() || hi.is_negative(),
    };
    violated.then_some(vec![lo, hi])
}

/// Searches for a point satisfying the hypothesis and violating the
/// conclusion. Deterministic for a given seed and budget.
pub fn falsify(vc: &VerificationCondition, budget: usize, seed: u64) -> Option<Counterexample> {
    if !matches!(vc.kind, VcKind::Implication) || budget == 0 {
        return None;
    }
    let vars = vc.vars.clone();
    if vars.is_empty() {
        let point = BTreeMap::new();
        return exact_violation(vc, &point).map(|value| Counterexample { vc: vc.id.clone(), point, value });
    }
    let target = Target {
        parts: vc
            .conclusion
            .expr
            .parts()
            .map(|(e, p)| (to_f64(e).exp(), p.compile(&vars)))
            .collect(),
        cmp: vc.conclusion.cmp,
    };
    let slices: Vec<Slice> = vc.hypothesis.clauses().iter().map(|c| eliminate(c, &vars)).collect();
    if slices.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state_idx: Vec<usize> = vc.state_vars.iter().filter_map(|v| vars.iter().position(|w| w == v)).collect();
    let radii = [1.0, 10.0, 100.0, 1000.0, 0.1];
    let mut best: Vec<Option<(f64, Vec<f64>)>> = vec![None; slices.len()];

    for i in 0..budget {
        let s_idx = i % slices.len();
        let slice = &slices[s_idx];
        let free_idx: Vec<usize> = slice.free.iter().map(|v| vars.iter().position(|w| w == v).expect("var")).collect();
        let mut x = vec![0.0; vars.len()];
        match (i / slices.len()) % 4 {
            0 => {
                let r = radii[(i / (4 * slices.len())) % radii.len()];
                for &k in &free_idx {
                    x[k] = rng.gen_range(-r..=r);
                }
            }
            1 => {
                for &k in &free_idx {
                    x[k] = log_sample(&mut rng);
                }
            }
            _ => match &best[s_idx] {
                Some((_, b)) => {
                    let rel = 10f64.powf(-rng.gen_range(0.0..8.0));
                    x = b.clone();
                    for &k in &free_idx {
                        if rng.gen_bool(0.5) {
                            let scale = x[k].abs().max(1e-300);
                            x[k] += rng.gen_range(-1.0..=1.0) * rel * scale;
                        }
                        if rng.gen_bool(0.05) {
                            x[k] = 0.0;
                        }
                    }
                }
                None => {
                    for &k in &free_idx {
                        x[k] = log_sample(&mut rng) * 10f64.powi(rng.gen_range(0..4));
                    }
                }
            },
        }
        for (k, p) in &slice.solved_f {
            x[*k] = p.eval(&x);
        }
        if !x.iter().all(|v| v.is_finite()) {
            continue;
        }
        if !slice.atoms_f.iter().all(|(c, p)| c.holds_f64(p.eval(&x), 0.0)) {
            continue;
        }
        if vc.excluded_origin && state_idx.iter().all(|&k| x[k] == 0.0) {
            continue;
        }
        let viol = target.violation(&x);
        if best[s_idx].as_ref().is_none_or(|(b, _)| viol > *b) {
            best[s_idx] = Some((viol, x.clone()));
        }
        if viol >= 0.0 || (viol > -1e-9 && vc.conclusion.cmp == Cmp::Gt) {
            if let Some(cx) = recheck(vc, slice, &vars, &x) {
                return Some(cx);
            }
        }
    }
    None
}

fn log_sample(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.2) {
        return 0.0;
    }
    let u: f64 = rng.gen_range(0.0..=60.0);
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    sign * 2f64.powf(-u)
}

fn recheck(vc: &VerificationCondition, slice: &Slice, vars: &[String], x: &[f64]) -> Option<Counterexample> {
    // Exact free coordinates, then simpler dyadic variants of them.
    let free_idx: Vec<usize> = slice.free.iter().map(|v| vars.iter().position(|w| w == v).expect("var")).collect();
    let candidates: Vec<Vec<f64>> = {
        let mut c = vec![x.to_vec()];
        let mut snapped = x.to_vec();
        for &k in &free_idx {
            let v = snapped[k];
            if v != 0.0 {
                let e = v.abs().log2().round();
                let p = 2f64.powf(e);
                if (p - v.abs()).abs() <= 0.25 * v.abs() {
                    snapped[k] = v.signum() * p;
                }
            }
        }
        c.insert(0, snapped);
        c
    };
    for cand in candidates {
        let mut point: BTreeMap<String, Rational> = BTreeMap::new();
        for &k in &free_idx {
            point.insert(vars[k].clone(), from_f64_exact(cand[k])?);
        }
        for (v, p) in &slice.solved {
            let val = p.evaluate(&point).ok()?;
            point.insert(v.clone(), val);
        }
        for v in vars {
            point.entry(v.clone()).or_insert_with(Rational::zero);
        }
        if let Some(value) = exact_violation(vc, &point) {
            return Some(Counterexample { vc: vc.id.clone(), point, value });
        }
    }
    None
}
