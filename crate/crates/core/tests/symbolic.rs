use std::collections::BTreeMap;

use proptest::prelude::*;
use switchstab::expo::exp_enclosure;
use switchstab::poly::{lie_derivative, var_list, Monomial, Poly, VarList, VectorField};
use switchstab::rational::{rat, to_f64, Rational};

fn vars() -> VarList {
    var_list(&["x", "y", "z"])
}

fn poly_strategy(max_deg: u32) -> impl Strategy<Value = Poly> {
    let term = ((0..=max_deg), (0..=max_deg), (0..=max_deg), -6i64..=6, 1i64..=4);
    prop::collection::vec(term, 1..6).prop_map(move |ts| {
        let mut p = Poly::zero(vars());
        for (a, b, c, n, d) in ts {
            if a + b + c <= max_deg {
                p.add_term(Monomial(vec![a, b, c]), rat(n, d));
            }
        }
        p
    })
}

fn field_strategy() -> impl Strategy<Value = VectorField> {
    (poly_strategy(2), poly_strategy(2), poly_strategy(2))
        .prop_map(|(a, b, c)| VectorField::new(vec![("x".into(), a), ("y".into(), b), ("z".into(), c)]))
}

/// Directional derivative by Richardson-extrapolated central differences.
fn fd_directional(v: &Poly, f: &VectorField, x: &[f64]) -> f64 {
    let dir: Vec<f64> = f.entries().iter().map(|(_, p)| p.eval_f64(x)).collect();
    let at = |h: f64| {
        let plus: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + h * d).collect();
        let minus: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a - h * d).collect();
        (v.eval_f64(&plus) - v.eval_f64(&minus)) / (2.0 * h)
    };
    let h = 1e-3;
    (4.0 * at(h / 2.0) - at(h)) / 3.0
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn lie_derivative_matches_finite_differences(
        v in poly_strategy(3),
        f in field_strategy(),
        pts in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 10),
    ) {
        let lie = lie_derivative(&v, &f).unwrap();
        for x in &pts {
            let exact = lie.eval_f64(x);
            let fd = fd_directional(&v, &f, x);
            let err = (exact - fd).abs() / exact.abs().max(1.0);
            prop_assert!(err < 1e-6, "lie {} vs fd {} at {:?}", exact, fd, x);
        }
    }

    #[test]
    fn evaluate_substitute_consistency(p in poly_strategy(3), s in poly_strategy(1), a in -5i64..5, b in -5i64..5, c in -5i64..5) {
        let pt: BTreeMap<String, Rational> =
            [("x".to_string(), rat(a, 3)), ("y".to_string(), rat(b, 2)), ("z".to_string(), rat(c, 1))].into();
        let bind: BTreeMap<String, Poly> = [("y".to_string(), s.clone())].into();
        let mut moved = pt.clone();
        moved.insert("y".into(), s.evaluate(&pt).unwrap());
        prop_assert_eq!(p.substitute(&bind).evaluate(&pt).unwrap(), p.evaluate(&moved).unwrap());
    }

    #[test]
    fn ring_laws(p in poly_strategy(2), q in poly_strategy(2), r in poly_strategy(2)) {
        prop_assert_eq!(&(&p * &q) * &r, &p * &(&q * &r));
        prop_assert_eq!(&p * &(&q + &r), &(&p * &q) + &(&p * &r));
        prop_assert!((&p - &p).is_zero());
    }

    #[test]
    fn exp_enclosure_contains_float_exp(n in -80i64..80, d in 1i64..20) {
        let r = rat(n, d);
        let b = exp_enclosure(&r, 30);
        let e = (n as f64 / d as f64).exp();
        // Rounding n/d to f64 perturbs e^r by about |r|·eps relative.
        let slack = (4.0 + (n as f64 / d as f64).abs()) * f64::EPSILON * e;
        prop_assert!(to_f64(&b.lower) <= e + slack && e - slack <= to_f64(&b.upper));
        prop_assert!(b.lower <= b.upper);
    }
}

#[test]
fn exp_minus_six_fifths() {
    let b = exp_enclosure(&rat(-6, 5), 30);
    let oracle = (-1.2f64).exp();
    assert!((to_f64(&b.lower) - oracle).abs() < 1e-15);
    assert!(b.width() <= rat(1, 1_000_000_000_000));
    assert!(b.upper < rat(1, 1));
}

#[test]
fn lie_derivative_of_brockett_energy() {
    let vl = vars();
    let p = |s: &str| switchstab::model::parse_expr(s, &vl).unwrap();
    let f = VectorField::new(vec![
        ("x".into(), p("-x + y")),
        ("y".into(), p("-y - x")),
        ("z".into(), p("-(x^2 + y^2)")),
    ]);
    let lie = lie_derivative(&p("x^2 + y^2 + z^2"), &f).unwrap();
    assert_eq!(lie, p("-2*(x^2 + y^2)*(1 + z)"));
}
