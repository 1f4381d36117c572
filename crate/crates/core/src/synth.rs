//! Numeric generation of quadratic Lyapunov candidates.
//!
//! Candidates are `V_p = xᵀ P_p x`. Every premise becomes a coefficient
//! matching identity against a Gram block, with S-procedure multipliers on
//! quadratic domain and guard atoms, and the solver maximizes a common margin
//! `t` in `P_p ⪰ t·I` and the decrease conditions. Results are floats until
//! [`rationalize`] turns them into exact candidates; nothing here is trusted.

use std::collections::BTreeMap;

use num::{BigInt, Signed};

use crate::check::ldl::ldl;
use crate::check::quadratic::quadratic_matrix;
use crate::model::predicate::{Atom, Cmp, Predicate};
use crate::model::{Kind, SwitchedModel};
use crate::poly::{lie_derivative, Monomial, Poly, VarList};
use crate::rational::{approximate, format_rational, Rational};
use crate::sdp::{self, SdpConstraint, SdpOptions, SdpProblem, SdpStatus};
use crate::vcgen::LyapunovAssignment;

/// Minimum margin accepted from the numeric solve.
pub const DEFAULT_SLACK: f64 = 1e-3;

/// Denominator bounds tried when rounding, as powers of two.
const ROUND_BITS: [u32; 5] = [8, 12, 16, 24, 32];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("coefficient {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("every term falls below the threshold")]
    AllTermsDropped,
    #[error("polynomial is zero")]
    ZeroPolynomial,
}

/// Output of the numeric solver. Deliberately not serializable, so it
/// cannot end up inside a certificate or report.
///
/// ```compile_fail
/// use switchstab::synth::NumericSolution;
/// fn leak(n: &NumericSolution) -> String {
///     serde_json::to_string(n).unwrap()
/// }
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct NumericSolution {
    pub vars: Vec<String>,
    pub modes: Vec<String>,
    /// Per mode, the coefficients of `x_i x_j` (`i <= j`) in `V`.
    pub coefficients: Vec<f64>,
    pub status: SdpStatus,
    pub margin: f64,
}

impl NumericSolution {
    pub const PROVENANCE: &'static str = "untrusted-numeric";

    fn quad_monomials(&self) -> Vec<Monomial> {
        quad_monomials(self.vars.len())
    }
}

fn quad_monomials(n: usize) -> Vec<Monomial> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            out.push(Monomial::unit(n, i).mul(&Monomial::unit(n, j)));
        }
    }
    out
}

/// Continued-fraction rounding of every coefficient.
pub fn rationalize(n: &NumericSolution, denom_bound: &BigInt) -> Result<Vec<Rational>, SynthError> {
    n.coefficients
        .iter()
        .enumerate()
        .map(|(index, &value)| approximate(value, denom_bound).ok_or(SynthError::NonFinite { index, value }))
        .collect()
}

/// The rounded candidates, one per mode.
pub fn candidates(n: &NumericSolution, denom_bound: &BigInt) -> Result<BTreeMap<String, Poly>, SynthError> {
    let coeffs = rationalize(n, denom_bound)?;
    let vl: VarList = n.vars.clone().into();
    let mons = n.quad_monomials();
    Ok(n.modes
        .iter()
        .zip(coeffs.chunks(mons.len()))
        .map(|(mode, c)| (mode.clone(), Poly::from_terms(vl.clone(), mons.iter().cloned().zip(c.iter().cloned()))))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncationReport {
    pub threshold: Rational,
    pub dropped: Vec<(String, Rational)>,
    pub kept: usize,
}

impl std::fmt::Display for TruncationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "threshold {} (relative), kept {} terms", format_rational(&self.threshold), self.kept)?;
        for (m, c) in &self.dropped {
            writeln!(f, "  dropped {m} with coefficient {}", format_rational(c))?;
        }
        Ok(())
    }
}

/// Drops monomials with `|c| < rel · max |c|`.
pub fn truncate_small_terms(p: &Poly, rel: &Rational) -> Result<(Poly, TruncationReport), SynthError> {
    if p.is_zero() {
        return Err(SynthError::ZeroPolynomial);
    }
    let cut = rel * p.max_abs_coeff();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (m, c) in p.terms() {
        if c.abs() < cut {
            dropped.push((m.render(p.vars()), c.clone()));
        } else {
            kept.push((m.clone(), c.clone()));
        }
    }
    if kept.is_empty() {
        return Err(SynthError::AllTermsDropped);
    }
    let report = TruncationReport { threshold: rel.clone(), kept: kept.len(), dropped };
    Ok((Poly::from_terms(p.vars().clone(), kept), report))
}

/// One polynomial identity `Σ (linear in unknowns) = 0`, by monomial.
#[derive(Default)]
struct Identity(BTreeMap<Monomial, SdpConstraint>);

impl Identity {
    fn row(&mut self, m: &Monomial) -> &mut SdpConstraint {
        self.0.entry(m.clone()).or_default()
    }

    fn add_lp(&mut self, k: usize, g: &Poly, sign: f64) {
        for (m, c) in g.terms() {
            self.row(m).lp.push((k, sign * crate::rational::to_f64(c)));
        }
    }

    fn add_free(&mut self, k: usize, g: &Poly, sign: f64) {
        for (m, c) in g.terms() {
            self.row(m).free.push((k, sign * crate::rational::to_f64(c)));
        }
    }

    fn add_gram(&mut self, block: usize, basis: &[Monomial], sign: f64) {
        for (a, ma) in basis.iter().enumerate() {
            for (b, mb) in basis.iter().enumerate().skip(a) {
                self.row(&ma.mul(mb)).blocks.push((block, a, b, sign));
            }
        }
    }
}

/// The unknown matrices: block `k` is `X_k = P_k − t I`; free variable 0 is `t`.
struct Builder {
    n: usize,
    vl: VarList,
    sizes: Vec<usize>,
    n_lp: usize,
    n_free: usize,
    rows: Vec<SdpConstraint>,
}

impl Builder {
    fn new(vl: VarList, candidates: usize) -> Self {
        let n = vl.len();
        Builder { n, vl, sizes: vec![n; candidates], n_lp: 0, n_free: 1, rows: Vec::new() }
    }

    fn block(&mut self, size: usize) -> usize {
        self.sizes.push(size);
        self.sizes.len() - 1
    }

    fn lp(&mut self) -> usize {
        self.n_lp += 1;
        self.n_lp - 1
    }

    fn free(&mut self) -> usize {
        self.n_free += 1;
        self.n_free - 1
    }

    /// Adds `sign · T(V_k)` where `image[(i,j)] = T(x_i x_j)` for `i <= j`.
    fn add_v(&self, id: &mut Identity, k: usize, image: &[Poly], sign: f64) {
        let mut idx = 0;
        for i in 0..self.n {
            for j in i..self.n {
                for (m, c) in image[idx].terms() {
                    let c = sign * crate::rational::to_f64(c);
                    id.row(m).blocks.push((k, i, j, c));
                    if i == j {
                        id.row(m).free.push((0, c));
                    }
                }
                idx += 1;
            }
        }
    }

    fn squares(&self) -> Vec<Poly> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i..self.n {
                let xi = Poly::var(self.vl.clone(), &self.vl[i]);
                let xj = Poly::var(self.vl.clone(), &self.vl[j]);
                out.push(&xi * &xj);
            }
        }
        out
    }

    fn norm(&self) -> Poly {
        self.vl.iter().map(|v| Poly::var(self.vl.clone(), v).pow(2)).fold(Poly::zero(self.vl.clone()), |a, p| &a + &p)
    }

    /// Closes an identity whose remaining polynomial is matched by a Gram
    /// block over monomials spanning its degrees.
    fn finish(&mut self, mut id: Identity, lo: u32, hi: u32) {
        let basis = Monomial::all_up_to(self.n, lo / 2, hi.div_ceil(2));
        let b = self.block(basis.len());
        id.add_gram(b, &basis, -1.0);
        self.rows.extend(id.0.into_values());
    }
}

/// Quadratic-form atoms usable as S-procedure constraints (others are
/// dropped, which only strengthens the requirement).
fn quadratic_atoms(clause: &[Atom], vl: &VarList) -> (Vec<Poly>, Vec<Poly>) {
    let mut ge = Vec::new();
    let mut eq = Vec::new();
    for a in clause {
        let Ok(p) = a.poly.with_vars(vl) else { continue };
        if !p.is_homogeneous(2) || p.is_zero() {
            continue;
        }
        match a.cmp {
            Cmp::Eq => eq.push(p),
            _ => ge.push(p),
        }
    }
    (ge, eq)
}

fn degree_span(polys: &[Poly]) -> (u32, u32) {
    let nz: Vec<&Poly> = polys.iter().filter(|p| !p.is_zero()).collect();
    let lo = nz.iter().map(|p| p.min_degree()).min().unwrap_or(2);
    let hi = nz.iter().map(|p| p.total_degree()).max().unwrap_or(2);
    (lo.min(2), hi.max(2))
}

/// Decrease of candidate `k` under `field` on each clause of `domain`.
fn add_decrease(b: &mut Builder, k: usize, field: &crate::poly::VectorField, domain: &Predicate) -> Option<()> {
    let squares = b.squares();
    // −L_f(x_i x_j)
    let image: Vec<Poly> = squares.iter().map(|s| lie_derivative(s, field).map(|l| -&l)).collect::<Result<_, _>>().ok()?;
    let norm = b.norm();
    for clause in domain.closure().clauses() {
        let (ge, eq) = quadratic_atoms(clause, &b.vl);
        let mut id = Identity::default();
        b.add_v(&mut id, k, &image, 1.0);
        id.add_free(0, &norm, -1.0);
        for g in &ge {
            let l = b.lp();
            id.add_lp(l, g, -1.0);
        }
        for h in &eq {
            let f = b.free();
            id.add_free(f, h, -1.0);
        }
        let mut span = image.clone();
        span.extend(ge.iter().cloned());
        let (lo, hi) = degree_span(&span);
        b.finish(id, lo, hi);
    }
    Some(())
}

/// `V_p − V_q∘r ≥ 0` on each clause of `on` (both directions when `both`).
fn add_comparison(b: &mut Builder, p: usize, q: usize, reset: &BTreeMap<String, Poly>, on: &Predicate, both: bool) {
    let squares = b.squares();
    let moved: Vec<Poly> = squares.iter().map(|s| s.substitute(reset)).collect();
    for clause in on.clauses() {
        let (ge, eq) = quadratic_atoms(clause, &b.vl);
        let pure_equality = ge.is_empty() && !eq.is_empty() && both && reset.is_empty();
        if pure_equality {
            // V_p − V_q = Σ λ h exactly.
            let mut id = Identity::default();
            b.add_v(&mut id, p, &squares, 1.0);
            b.add_v(&mut id, q, &squares, -1.0);
            for h in &eq {
                let f = b.free();
                id.add_free(f, h, -1.0);
            }
            b.rows.extend(id.0.into_values());
            continue;
        }
        for (a, c, image_a, image_c) in [(p, q, &squares, &moved), (q, p, &moved, &squares)].into_iter().take(if both { 2 } else { 1 }) {
            let mut id = Identity::default();
            b.add_v(&mut id, a, image_a, 1.0);
            b.add_v(&mut id, c, image_c, -1.0);
            for g in &ge {
                let l = b.lp();
                id.add_lp(l, g, -1.0);
            }
            for h in &eq {
                let f = b.free();
                id.add_free(f, h, -1.0);
            }
            let mut span = moved.clone();
            span.extend(ge.iter().cloned());
            let (lo, hi) = degree_span(&span);
            b.finish(id, lo, hi);
        }
    }
}

fn solve(b: Builder, modes: Vec<String>) -> Option<NumericSolution> {
    let n = b.n;
    let candidates = modes.len();
    let mut p = SdpProblem::new(b.sizes.clone(), b.n_lp, b.n_free);
    p.constraints = b.rows;
    // Σ_k tr(P_k) = n·candidates fixes the scale.
    let mut norm = SdpConstraint { rhs: (n * candidates) as f64, ..Default::default() };
    for k in 0..candidates {
        for i in 0..n {
            norm.blocks.push((k, i, i, 1.0));
        }
    }
    norm.free.push((0, (n * candidates) as f64));
    p.constraints.push(norm);
    p.c_free[0] = -1.0;
    let sol = sdp::solve(&p, &SdpOptions::default());
    let t = sol.x_free[0];
    if !t.is_finite() {
        return None;
    }
    let mut coefficients = Vec::new();
    for k in 0..candidates {
        let x = &sol.x_blocks[k];
        for i in 0..n {
            for j in i..n {
                let pij = x[(i, j)] + if i == j { t } else { 0.0 };
                coefficients.push(if i == j { pij } else { 2.0 * pij });
            }
        }
    }
    Some(NumericSolution { vars: b.vl.to_vec(), modes, coefficients, status: sol.status, margin: t })
}

/// Rounds with growing denominators until every candidate is exactly
/// positive definite and `accept` holds.
fn round(n: &NumericSolution, accept: impl Fn(&BTreeMap<String, Poly>) -> bool) -> Option<BTreeMap<String, Poly>> {
    if n.margin < DEFAULT_SLACK {
        return None;
    }
    for bits in ROUND_BITS {
        let Ok(c) = candidates(n, &BigInt::from(2u8).pow(bits)) else { return None };
        let pd = c.values().all(|v| strictly_pd(v, &n.vars));
        if pd && accept(&c) {
            return Some(c);
        }
    }
    None
}

fn strictly_pd(p: &Poly, vars: &[String]) -> bool {
    quadratic_matrix(p, vars).is_some_and(|q| ldl(&q, true).is_ok())
}

/// Numeric common quadratic Lyapunov function for all modes, ignoring
/// domains (arbitrary switching).
pub fn synth_common_numeric(m: &SwitchedModel) -> Option<NumericSolution> {
    let vl = m.state_var_list();
    let mut b = Builder::new(vl, 1);
    for mode in &m.modes {
        add_decrease(&mut b, 0, &mode.field, &Predicate::truth())?;
    }
    solve(b, vec!["*".to_string()])
}

/// A common quadratic candidate, the same polynomial for every mode.
pub fn synth_common_quadratic(m: &SwitchedModel) -> Option<BTreeMap<String, Poly>> {
    let num = synth_common_numeric(m)?;
    let vars = num.vars.clone();
    let linear = m.is_linear();
    let c = round(&num, |c| {
        // Linear fields: the decrease is a quadratic form and is checked here.
        let v = &c["*"];
        !linear
            || m.modes.iter().all(|mode| {
                lie_derivative(v, &mode.field).is_ok_and(|l| strictly_pd(&-&l, &vars))
            })
    })?;
    let v = c["*"].clone();
    Some(m.modes.iter().map(|mode| (mode.id.clone(), v.clone())).collect())
}

pub fn synth_multiple_numeric(m: &SwitchedModel) -> Option<NumericSolution> {
    let vl = m.state_var_list();
    let modes: Vec<String> = m.modes.iter().map(|p| p.id.clone()).collect();
    let mut b = Builder::new(vl.clone(), modes.len());
    for (k, mode) in m.modes.iter().enumerate() {
        add_decrease(&mut b, k, &mode.field, &mode.domain)?;
    }
    match m.kind {
        Kind::StateDependent => {
            for (i, p) in m.modes.iter().enumerate() {
                for (j, q) in m.modes.iter().enumerate().skip(i + 1) {
                    let overlap = p.domain.closure().and(&q.domain.closure());
                    if !overlap.is_false() {
                        add_comparison(&mut b, i, j, &BTreeMap::new(), &overlap, true);
                    }
                }
            }
        }
        Kind::Guarded => {
            for t in &m.transitions {
                let (Some(i), Some(j)) = (m.mode_index(&t.from), m.mode_index(&t.to)) else { continue };
                let on = t.guard.closure().and(&m.modes[i].domain.closure());
                if i != j && !on.is_false() {
                    add_comparison(&mut b, i, j, &t.reset_map(), &on, false);
                }
            }
        }
        _ => return None,
    }
    solve(b, modes)
}

/// Per-mode quadratic candidates for state-dependent and guarded models.
pub fn synth_multiple(m: &SwitchedModel) -> Option<LyapunovAssignment> {
    if !matches!(m.kind, Kind::StateDependent | Kind::Guarded) {
        return None;
    }
    if m.modes.len() == 1 {
        let c = synth_common_quadratic(m)?;
        return Some(assignment(m, c));
    }
    let num = synth_multiple_numeric(m)?;
    let c = round(&num, |_| true)?;
    Some(assignment(m, c))
}

fn assignment(m: &SwitchedModel, functions: BTreeMap<String, Poly>) -> LyapunovAssignment {
    LyapunovAssignment { functions, rates: m.rates.clone(), sigma: m.sigma.clone() }
}

/// Candidates in the model-file annotation syntax.
pub fn annotations(functions: &BTreeMap<String, Poly>) -> String {
    functions.iter().map(|(mode, v)| format!("lyapunov {mode} : {v};\n")).collect()
}
