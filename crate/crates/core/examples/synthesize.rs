//! Lyapunov synthesis by semidefinite programming, rounded to exact
//! rationals and re-checked with the exact pipeline.

use switchstab::check::{check_all, overall, CheckConfig};
use switchstab::model::parse_model;
use switchstab::synth::{annotations, synth_common_quadratic, synth_multiple, synth_multiple_numeric};
use switchstab::vcgen::gen_mlf_state;

fn main() {
    let path = format!("{}/fixtures/example7.ssm", env!("CARGO_MANIFEST_DIR"));
    let m = parse_model(&std::fs::read_to_string(path).expect("fixture")).expect("parses");

    println!("common quadratic: {}", if synth_common_quadratic(&m).is_some() { "found" } else { "none" });
    if let Some(n) = synth_multiple_numeric(&m) {
        println!("numeric solution ({}): status {:?}, margin {:.4}", switchstab::synth::NumericSolution::PROVENANCE, n.status, n.margin);
    }
    let Some(a) = synth_multiple(&m) else {
        println!("no multiple Lyapunov functions found");
        return;
    };
    print!("{}", annotations(&a.functions));
    let vcs = gen_mlf_state(&m, &a).expect("conditions");
    let checked = check_all(&vcs, &CheckConfig::default());
    println!("exact re-check: {}", overall(checked.iter().map(|c| &c.verdict)));
}
