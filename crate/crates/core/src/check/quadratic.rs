use std::collections::BTreeMap;

use num::{Signed, Zero};

use super::certificate::{Certificate, Counterexample, Verdict};
use super::ldl::{ldl, LdlError, Matrix};
use crate::poly::{Monomial, Poly};
use crate::rational::Rational;

/// Symmetric matrix `Q` with `p = xᵀ Q x` over `vars`, when `p` is a
/// quadratic form in those variables.
pub fn quadratic_matrix(p: &Poly, vars: &[String]) -> Option<Matrix> {
    if !p.is_homogeneous(2) || p.is_zero() {
        return None;
    }
    let p = p.with_vars(&vars.to_vec().into()).ok()?;
    let n = vars.len();
    let mut q = vec![vec![Rational::zero(); n]; n];
    let two = Rational::from_integer(2.into());
    for (m, c) in p.terms() {
        let idx: Vec<usize> = m.0.iter().enumerate().flat_map(|(i, &e)| std::iter::repeat_n(i, e as usize)).collect();
        let (i, j) = (idx[0], idx[1]);
        if i == j {
            q[i][i] = c.clone();
        } else {
            q[i][j] = c / &two;
            q[j][i] = c / &two;
        }
    }
    Some(q)
}

pub fn quadratic_poly(q: &Matrix, vars: &[String]) -> Poly {
    let vl: crate::poly::VarList = vars.to_vec().into();
    let n = vars.len();
    let mut terms: BTreeMap<Monomial, Rational> = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            if q[i][j].is_zero() {
                continue;
            }
            let m = Monomial::unit(n, i).mul(&Monomial::unit(n, j));
            *terms.entry(m).or_insert_with(Rational::zero) += &q[i][j];
        }
    }
    Poly::from_terms(vl, terms)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("matrix is not symmetric")]
pub struct NotSymmetric;

/// Positive (semi)definiteness of a symmetric rational matrix, with
/// variables named `x1..xn` in the verdict.
pub fn check_pd_quadratic(q: &Matrix, strict: bool) -> Result<Verdict, NotSymmetric> {
    let vars: Vec<String> = (1..=q.len()).map(|i| format!("x{i}")).collect();
    pd_verdict("quadratic", &vars, q, strict)
}

pub(crate) fn pd_verdict(id: &str, vars: &[String], q: &Matrix, strict: bool) -> Result<Verdict, NotSymmetric> {
    match ldl(q, strict) {
        Ok(f) => Ok(Verdict::Proved {
            certificate: Certificate::PdFactorization { vars: vars.to_vec(), l: f.l, d: f.d, strict },
        }),
        Err(LdlError::NotSymmetric) => Err(NotSymmetric),
        Err(LdlError::Witness { vector, value }) => {
            debug_assert!(value.is_negative() || (strict && value.is_zero()));
            Ok(Verdict::Refuted {
                counterexample: Counterexample {
                    vc: id.to_string(),
                    point: vars.iter().cloned().zip(vector).collect(),
                    value: vec![value],
                },
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn example_form_pivots() {
        let q = vec![vec![int(1), rat(-33, 40)], vec![rat(-33, 40), int(1)]];
        match check_pd_quadratic(&q, true).unwrap() {
            Verdict::Proved { certificate: Certificate::PdFactorization { d, .. } } => {
                assert_eq!(d, vec![int(1), rat(511, 1600)]);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn saddle_refuted() {
        let q = vec![vec![int(0), int(1)], vec![int(1), int(0)]];
        let v = check_pd_quadratic(&q, true).unwrap();
        let cx = v.counterexample().unwrap();
        assert_eq!(cx.value, vec![int(-2)]);
        assert_eq!(cx.point["x1"], int(1));
        assert_eq!(cx.point["x2"], int(-1));
    }

    #[test]
    fn asymmetric_rejected() {
        let q = vec![vec![int(1), int(1)], vec![int(0), int(1)]];
        assert_eq!(check_pd_quadratic(&q, true), Err(NotSymmetric));
    }
}
