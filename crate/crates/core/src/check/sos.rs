//! Positivstellensatz-style SOS certificates found numerically and verified
//! exactly.
//!
//! For a target `t`, inequality constraints `gᵢ ≥ 0` and equalities `hⱼ = 0`
//! we look for
//!
//! ```text
//! s·t − ε·N = zᵀ Q z + Σ σᵢ gᵢ + Σ λⱼ hⱼ,   Q ⪰ 0, σᵢ SOS, λⱼ free
//! ```
//!
//! where `N = (Σ xₖ²)^d`. Products `gᵢ gⱼ` are added as extra constraints.
//! The numeric solution is rounded to rationals, the residual is projected
//! exactly onto the Gram affine space of `Q`, and `Q` is checked with an
//! exact `LDLᵀ`.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num::{BigInt, One, Signed, ToPrimitive, Zero};

use super::certificate::{EqMultiplier, SosCertificate, SosMultiplier};
use super::ldl::{ldl, Matrix};
use crate::poly::{Monomial, Poly, VarList};
use crate::rational::{approximate, pow2, to_f64, Rational};
use crate::sdp::{self, SdpConstraint, SdpOptions, SdpProblem};

#[derive(Clone, Debug)]
pub struct SosQuery {
    pub vars: VarList,
    pub target: Poly,
    pub ineqs: Vec<Poly>,
    pub eqs: Vec<Poly>,
    /// `Some(vars)`: a positive `ε` is required, with `N` over `vars`
    /// (a constant when empty).
    pub strict: Option<Vec<String>>,
}

impl SosQuery {
    pub fn new(vars: VarList, target: Poly) -> Self {
        SosQuery { vars, target, ineqs: Vec::new(), eqs: Vec::new(), strict: None }
    }
}

/// Denominator bounds tried during rounding, smallest first.
const DENOM_BITS: [u32; 6] = [6, 12, 20, 30, 40, 48];

/// Tries multiplier degrees `0, 2, ..` up to `max_degree`.
pub fn search(q: &SosQuery, max_degree: u32) -> Option<SosCertificate> {
    let mut k = 0;
    loop {
        if let Some(c) = prove(q, k) {
            return Some(c);
        }
        k += 2;
        if k > max_degree {
            return None;
        }
    }
}

fn even_ceil(d: u32) -> u32 {
    d + d % 2
}

/// Power-of-two factor bringing the largest coefficient near 1.
fn normalizer(p: &Poly) -> Rational {
    let m = to_f64(&p.max_abs_coeff());
    if m == 0.0 || !m.is_finite() {
        return Rational::one();
    }
    pow2(-(m.log2().round() as i32))
}

struct Layout {
    main: Vec<Monomial>,
    /// (constraint, normalizer, basis)
    sos: Vec<(Poly, Rational, Vec<Monomial>)>,
    /// (constraint, normalizer, multiplier monomials)
    free: Vec<(Poly, Rational, Vec<Monomial>)>,
    norm: Poly,
    norm_power: u32,
}

fn layout(q: &SosQuery, k: u32) -> Option<Layout> {
    let n = q.vars.len();
    let target = q.target.with_vars(&q.vars).ok()?;
    let mut ineqs: Vec<Poly> = Vec::new();
    for g in &q.ineqs {
        let g = g.with_vars(&q.vars).ok()?;
        if g.is_constant() {
            if g.constant_term().is_negative() {
                // Unsatisfiable hypothesis; handled upstream.
                return None;
            }
            continue;
        }
        if !ineqs.contains(&g) {
            ineqs.push(g);
        }
    }
    let base = ineqs.len();
    for i in 0..base {
        for j in i + 1..base {
            let p = &ineqs[i] * &ineqs[j];
            if !ineqs.contains(&p) {
                ineqs.push(p);
            }
        }
    }
    let eqs: Vec<Poly> = q
        .eqs
        .iter()
        .map(|h| h.with_vars(&q.vars))
        .collect::<Result<Vec<_>, _>>()
        .ok()?
        .into_iter()
        .filter(|h| !h.is_zero())
        .collect();

    let (norm_vars, strict_const) = match &q.strict {
        Some(v) if v.is_empty() => (Vec::new(), true),
        Some(v) => (v.clone(), false),
        None => (q.vars.to_vec(), false),
    };
    let norm_power = if strict_const || norm_vars.is_empty() {
        0
    } else {
        target.min_degree().max(2).div_ceil(2)
    };
    let mut sq = Poly::zero(q.vars.clone());
    for v in &norm_vars {
        let x = Poly::var(q.vars.clone(), v);
        sq = &sq + &(&x * &x);
    }
    let norm = if norm_power == 0 { Poly::constant(q.vars.clone(), Rational::one()) } else { sq.pow(norm_power) };

    let mut d = even_ceil(target.total_degree().max(2 * norm_power));
    if let Some(min_g) = ineqs.iter().map(Poly::total_degree).min() {
        d = d.max(even_ceil(min_g + k));
    }
    let mut lowest = target.min_degree().min(2 * norm_power);
    let mut sos = Vec::new();
    for g in ineqs {
        let dg = g.total_degree();
        if dg > d {
            continue;
        }
        let m = k.min(d - dg) / 2;
        lowest = lowest.min(g.min_degree());
        let s = normalizer(&g);
        sos.push((g, s, Monomial::all_up_to(n, 0, m)));
    }
    let mut free = Vec::new();
    for h in eqs {
        let dh = h.total_degree();
        if dh > d {
            continue;
        }
        lowest = lowest.min(h.min_degree());
        let s = normalizer(&h);
        free.push((h, s, Monomial::all_up_to(n, 0, d - dh)));
    }
    let main = Monomial::all_up_to(n, lowest.div_ceil(2), d / 2);
    Some(Layout { main, sos, free, norm, norm_power })
}

struct Numeric {
    q0: DMatrix<f64>,
    grams: Vec<DMatrix<f64>>,
    lambdas: Vec<f64>,
    epsilon: f64,
}

fn solve_numeric(target: &Poly, lay: &Layout) -> Option<Numeric> {
    let mut rows: HashMap<Monomial, SdpConstraint> = HashMap::new();
    let mut sizes = vec![lay.main.len()];
    for (a, ma) in lay.main.iter().enumerate() {
        for (b, mb) in lay.main.iter().enumerate().skip(a) {
            rows.entry(ma.mul(mb)).or_default().blocks.push((0, a, b, 1.0));
        }
    }
    for (k, (g, s, basis)) in lay.sos.iter().enumerate() {
        sizes.push(basis.len());
        let gs = g.scale(s);
        for (a, ma) in basis.iter().enumerate() {
            for (b, mb) in basis.iter().enumerate().skip(a) {
                let mab = ma.mul(mb);
                for (t, c) in gs.terms() {
                    rows.entry(mab.mul(t)).or_default().blocks.push((k + 1, a, b, to_f64(c)));
                }
            }
        }
    }
    let mut n_free = 0;
    for (h, s, mons) in &lay.free {
        let hs = h.scale(s);
        for m in mons {
            for (t, c) in hs.terms() {
                rows.entry(m.mul(t)).or_default().free.push((n_free, to_f64(c)));
            }
            n_free += 1;
        }
    }
    for (t, c) in lay.norm.terms() {
        rows.entry(t.clone()).or_default().lp.push((0, to_f64(c)));
    }
    for (t, c) in target.terms() {
        rows.entry(t.clone()).or_default().rhs = to_f64(c);
    }
    let mut p = SdpProblem::new(sizes, 2, n_free);
    let mut keys: Vec<Monomial> = rows.keys().cloned().collect();
    keys.sort();
    for m in keys {
        p.constraints.push(rows.remove(&m).expect("key present"));
    }
    p.constraints.push(SdpConstraint { lp: vec![(0, 1.0), (1, 1.0)], rhs: 1.0, ..Default::default() });
    p.c_lp[0] = -1.0;
    let sol = sdp::solve(&p, &SdpOptions::default());
    if sol.x_blocks.iter().any(|b| b.iter().any(|v| !v.is_finite())) {
        return None;
    }
    Some(Numeric {
        q0: sol.x_blocks[0].clone(),
        grams: sol.x_blocks[1..].to_vec(),
        lambdas: sol.x_free.iter().copied().collect(),
        epsilon: sol.x_lp[0],
    })
}

fn round_matrix(m: &DMatrix<f64>, bound: &BigInt) -> Option<Matrix> {
    let n = m.nrows();
    let mut out = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let v = approximate(0.5 * (m[(i, j)] + m[(j, i)]), bound)?;
            out[i][j] = v.clone();
            out[j][i] = v;
        }
    }
    Some(out)
}

/// Rounds a multiplier Gram and shifts it onto the PSD cone if rounding
/// pushed it out.
fn round_psd(m: &DMatrix<f64>, bound: &BigInt) -> Option<Matrix> {
    let mut g = round_matrix(m, bound)?;
    if ldl(&g, false).is_ok() {
        return Some(g);
    }
    let min = m.clone().symmetric_eigenvalues().min();
    let shift = approximate(2.0 * min.abs().max(1e-12), bound)?;
    for (i, row) in g.iter_mut().enumerate() {
        row[i] += &shift;
    }
    ldl(&g, false).ok().map(|_| g)
}

pub fn gram_poly(vars: &VarList, basis: &[Monomial], g: &Matrix) -> Poly {
    let mut terms: BTreeMap<Monomial, Rational> = BTreeMap::new();
    for (a, ma) in basis.iter().enumerate() {
        for (b, mb) in basis.iter().enumerate() {
            if g[a][b].is_zero() {
                continue;
            }
            *terms.entry(ma.mul(mb)).or_insert_with(Rational::zero) += &g[a][b];
        }
    }
    Poly::from_terms(vars.clone(), terms)
}

/// Nearest symmetric matrix (Frobenius) with `zᵀ Q z = p`, if every term of
/// `p` is a product of two basis monomials.
fn project(basis: &[Monomial], q: &Matrix, p: &Poly) -> Option<Matrix> {
    let mut groups: BTreeMap<Monomial, Vec<(usize, usize)>> = BTreeMap::new();
    for (a, ma) in basis.iter().enumerate() {
        for (b, mb) in basis.iter().enumerate() {
            groups.entry(ma.mul(mb)).or_default().push((a, b));
        }
    }
    if p.terms().any(|(m, _)| !groups.contains_key(m)) {
        return None;
    }
    let mut out = q.clone();
    for (m, pairs) in &groups {
        let current: Rational = pairs.iter().map(|&(a, b)| q[a][b].clone()).sum();
        let delta = (p.coeff(m) - current) / Rational::from_integer(BigInt::from(pairs.len()));
        if delta.is_zero() {
            continue;
        }
        for &(a, b) in pairs {
            out[a][b] += &delta;
        }
    }
    Some(out)
}

fn exps(b: &[Monomial]) -> Vec<Vec<u32>> {
    b.iter().map(|m| m.0.clone()).collect()
}

/// One attempt at multiplier degree `k`.
pub fn prove(q: &SosQuery, k: u32) -> Option<SosCertificate> {
    let lay = layout(q, k)?;
    let target = q.target.with_vars(&q.vars).ok()?;
    let scale = normalizer(&target);
    let scaled = target.scale(&scale);
    let num = solve_numeric(&scaled, &lay)?;
    let strict = q.strict.is_some();
    if strict && !(num.epsilon > 1e-10) {
        return None;
    }
    for bits in DENOM_BITS {
        let bound = BigInt::from(2u8).pow(bits);
        let epsilon = if strict {
            match approximate(num.epsilon / 2.0, &bound) {
                Some(e) if e.is_positive() => e,
                _ => continue,
            }
        } else {
            Rational::zero()
        };
        let mut residual = &scaled - &lay.norm.scale(&epsilon);
        let mut multipliers = Vec::new();
        let mut ok = true;
        for ((g, s, basis), gm) in lay.sos.iter().zip(&num.grams) {
            let Some(gram) = round_psd(gm, &bound) else {
                ok = false;
                break;
            };
            // σ·(s g) = (s σ)·g
            let gram: Matrix = gram.iter().map(|r| r.iter().map(|v| v * s).collect()).collect();
            let sigma = gram_poly(&q.vars, basis, &gram);
            residual = &residual - &(&sigma * g);
            multipliers.push(SosMultiplier { constraint: g.to_string(), basis: exps(basis), gram });
        }
        if !ok {
            continue;
        }
        let mut equalities = Vec::new();
        let mut idx = 0;
        for (h, s, mons) in &lay.free {
            let mut lambda = Poly::zero(q.vars.clone());
            for m in mons {
                let Some(c) = approximate(num.lambdas[idx], &bound) else {
                    ok = false;
                    break;
                };
                idx += 1;
                lambda.add_term(m.clone(), c * s);
            }
            if !ok {
                break;
            }
            residual = &residual - &(&lambda * h);
            equalities.push(EqMultiplier { constraint: h.to_string(), multiplier: lambda.to_string() });
        }
        if !ok {
            continue;
        }
        let Some(q0) = round_matrix(&num.q0, &bound) else { continue };
        let Some(q0) = project(&lay.main, &q0, &residual) else { continue };
        if ldl(&q0, false).is_err() {
            continue;
        }
        let norm_vars = match &q.strict {
            Some(v) => v.clone(),
            None => Vec::new(),
        };
        return Some(SosCertificate {
            vars: q.vars.to_vec(),
            target: target.to_string(),
            scale,
            epsilon: epsilon.clone(),
            norm_vars: if epsilon.is_zero() { Vec::new() } else { norm_vars },
            norm_power: if epsilon.is_zero() { 0 } else { lay.norm_power },
            basis: exps(&lay.main),
            gram: q0,
            multipliers,
            equalities,
        });
    }
    None
}

/// Float estimate of the certified margin, for diagnostics.
pub fn epsilon_f64(c: &SosCertificate) -> f64 {
    c.epsilon.to_f64().unwrap_or(0.0)
}
