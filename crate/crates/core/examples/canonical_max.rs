//! Ghost switching: splitting each mode of a piecewise-affine system so that
//! a piecewise quadratic Lyapunov function can be checked mode by mode.

use switchstab::check::{check_all, overall, CheckConfig};
use switchstab::model::parse_model;
use switchstab::vcgen::{generate, Rule};

fn main() {
    let path = format!("{}/fixtures/canonical_max_fixed.ssm", env!("CARGO_MANIFEST_DIR"));
    let m = parse_model(&std::fs::read_to_string(path).expect("fixture")).expect("parses");
    println!("modes after ghost split:");
    for p in &m.modes {
        println!("  {:3} domain {}   V = {}", p.id, p.domain, m.lyapunov_for(&p.id).expect("annotated"));
    }
    let vcs = generate(&m, Rule::MlfState).expect("conditions");
    let cfg = CheckConfig { sos_degree: 4, ..CheckConfig::default() };
    let checked = check_all(&vcs, &cfg);
    for (vc, c) in vcs.iter().zip(&checked) {
        println!("{:24} {}", vc.id, c.verdict.label());
    }
    println!("overall {}", overall(checked.iter().map(|c| &c.verdict)));
}
