//! Exact `L D Lᵀ` factorization of symmetric rational matrices.

use num::{One, Signed, Zero};

use crate::rational::Rational;

pub type Matrix = Vec<Vec<Rational>>;

#[derive(Clone, Debug, PartialEq)]
pub struct Ldl {
    /// Unit lower-triangular factor.
    pub l: Matrix,
    pub d: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LdlError {
    NotSymmetric,
    /// `vᵀ Q v` equals `value`, which is negative (or zero where definiteness
    /// was required).
    Witness { vector: Vec<Rational>, value: Rational },
}

pub fn is_symmetric(q: &Matrix) -> bool {
    let n = q.len();
    q.iter().all(|r| r.len() == n) && (0..n).all(|i| (0..i).all(|j| q[i][j] == q[j][i]))
}

pub fn quadratic_value(q: &Matrix, v: &[Rational]) -> Rational {
    let mut s = Rational::zero();
    for (i, row) in q.iter().enumerate() {
        for (j, qij) in row.iter().enumerate() {
            if !qij.is_zero() {
                s += qij * &v[i] * &v[j];
            }
        }
    }
    s
}

/// Factors `q`. With `strict`, every pivot must be positive; otherwise zero
/// pivots are accepted when the rest of their column vanishes.
pub fn ldl(q: &Matrix, strict: bool) -> Result<Ldl, LdlError> {
    if !is_symmetric(q) {
        return Err(LdlError::NotSymmetric);
    }
    let n = q.len();
    let mut s = q.clone();
    let mut l: Matrix = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
        .collect();
    let mut d = vec![Rational::zero(); n];
    for k in 0..n {
        let piv = s[k][k].clone();
        if piv.is_negative() {
            let mut u = vec![Rational::zero(); n];
            u[k] = Rational::one();
            return Err(witness(q, &l, k, u));
        }
        if piv.is_zero() {
            if let Some(j) = (k + 1..n).find(|&j| !s[k][j].is_zero()) {
                // (e_k - c e_j)ᵀ S (e_k - c e_j) = -2 c S_kj + c² S_jj < 0.
                let skj = &s[k][j];
                let two_abs = Rational::from_integer(2.into()) * skj.abs();
                let mag = if s[j][j] < two_abs { Rational::one() } else { skj.abs() / &s[j][j] };
                let c = if skj.is_positive() { mag } else { -mag };
                let mut u = vec![Rational::zero(); n];
                u[k] = Rational::one();
                u[j] = -c;
                return Err(witness(q, &l, k, u));
            }
            if strict {
                let mut u = vec![Rational::zero(); n];
                u[k] = Rational::one();
                return Err(witness(q, &l, k, u));
            }
            continue;
        }
        d[k] = piv.clone();
        for i in k + 1..n {
            l[i][k] = &s[i][k] / &piv;
        }
        for i in k + 1..n {
            if l[i][k].is_zero() {
                continue;
            }
            for j in k + 1..=i {
                let delta = &l[i][k] * &s[k][j];
                s[i][j] -= &delta;
                if i != j {
                    s[j][i] = s[i][j].clone();
                }
            }
        }
        for i in k + 1..n {
            s[i][k] = Rational::zero();
            s[k][i] = Rational::zero();
        }
    }
    Ok(Ldl { l, d })
}

/// Lifts a trailing-block vector `u` (entries `k..`) through the first `k`
/// columns of `l`, so that `vᵀ Q v = uᵀ S u`.
fn witness(q: &Matrix, l: &Matrix, k: usize, u: Vec<Rational>) -> LdlError {
    let n = q.len();
    let mut v = u;
    for i in (0..k).rev() {
        let mut acc = Rational::zero();
        for j in i + 1..n {
            if !l[j][i].is_zero() {
                acc += &l[j][i] * &v[j];
            }
        }
        v[i] = -acc;
    }
    let value = quadratic_value(q, &v);
    LdlError::Witness { vector: v, value }
}

/// `L diag(d) Lᵀ`.
pub fn reconstruct(f: &Ldl) -> Matrix {
    let n = f.d.len();
    let mut out = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = Rational::zero();
            for k in 0..=i.min(j) {
                if !f.d[k].is_zero() {
                    s += &f.l[i][k] * &f.d[k] * &f.l[j][k];
                }
            }
            out[i][j] = s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn m(rows: &[&[Rational]]) -> Matrix {
        rows.iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn saddle_gives_negative_witness() {
        let q = m(&[&[int(0), int(1)], &[int(1), int(0)]]);
        match ldl(&q, true) {
            Err(LdlError::Witness { vector, value }) => {
                assert!(value <= Rational::zero());
                assert_eq!(quadratic_value(&q, &vector), value);
            }
            other => panic!("{other:?}"),
        }
        match ldl(&q, false) {
            Err(LdlError::Witness { value, .. }) => assert!(value.is_negative()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semidefinite_with_zero_column_passes_nonstrict() {
        let q = m(&[&[int(1), int(0), int(1)], &[int(0), int(0), int(0)], &[int(1), int(0), int(1)]]);
        let f = ldl(&q, false).unwrap();
        assert_eq!(reconstruct(&f), q);
        assert!(ldl(&q, true).is_err());
    }

    #[test]
    fn later_negative_pivot_lifted() {
        let q = m(&[&[int(1), int(2)], &[int(2), rat(3, 1)]]);
        match ldl(&q, false) {
            Err(LdlError::Witness { vector, value }) => {
                assert_eq!(value, int(-1));
                assert_eq!(quadratic_value(&q, &vector), int(-1));
            }
            other => panic!("{other:?}"),
        }
    }
}
