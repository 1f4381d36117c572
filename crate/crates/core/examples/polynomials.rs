//! Exact polynomial arithmetic, Lie derivatives and exponential enclosures.

use switchstab::expo::exp_enclosure;
use switchstab::model::parse_expr;
use switchstab::poly::{lie_derivative, VectorField};
use switchstab::rational::{format_rational, rat};

fn main() {
    let vars: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
    let p = |s: &str| parse_expr(s, &vars).expect("expression");

    let v = p("x^2 + y^2 + z^2");
    let field = VectorField::new(vec![
        ("x".into(), p("-x + y")),
        ("y".into(), p("-y - x")),
        ("z".into(), p("-(x^2 + y^2)")),
    ]);
    let lie = lie_derivative(&v, &field).expect("same variables");
    println!("V        = {v}");
    println!("L_f V    = {lie}");

    let a = p("x + 1/3*y");
    println!("(x + y/3)^3 = {}", a.pow(3));
    println!("d/dx       = {}", a.pow(3).derivative("x"));

    for (e, terms) in [(rat(-6, 5), 30), (rat(2, 1), 30), (rat(-1, 1), 10)] {
        let b = exp_enclosure(&e, terms);
        println!(
            "exp({}) in [{:.15}, {:.15}], width {:.3e} with {terms} terms",
            format_rational(&e),
            switchstab::rational::to_f64(&b.lower),
            switchstab::rational::to_f64(&b.upper),
            switchstab::rational::to_f64(&b.width()),
        );
    }
}
