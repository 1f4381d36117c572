//! Parsing a model, well-formedness diagnostics, pretty printing, Graphviz
//! output and the controller-program view of the switching loop.

use std::collections::BTreeMap;

use switchstab::model::{emit_dot, parse_model, print_model, to_program, well_formed};
use switchstab::rational::int;

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/fixtures/{name}.ssm", env!("CARGO_MANIFEST_DIR"))).expect("fixture")
}

fn main() {
    let m = parse_model(&fixture("timed_demo")).expect("parses");
    println!("{} ({}): {} modes, vars {:?}", m.name, m.kind, m.modes.len(), m.all_vars());
    println!("diagnostics: {}", if well_formed(&m).is_empty() { "none".to_string() } else { well_formed(&m).to_string() });
    println!("\n{}", print_model(&m));
    println!("{}", emit_dot(&m));

    let ir = to_program(&m);
    println!("controller program:\n{}\n", ir.program());
    let env: BTreeMap<String, _> = [("x".to_string(), int(1)), ("tau".to_string(), int(2))].into();
    for (mode, post) in ir.step("s", &env) {
        let post: Vec<String> = post.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("s --> {mode} with {}", post.join(", "));
    }

    match parse_model(&fixture("invalid/timed_no_dwell")) {
        Ok(bad) => print!("\ninvalid fixture:\n{}", well_formed(&bad)),
        Err(d) => print!("\ninvalid fixture:\n{d}"),
    }
}
