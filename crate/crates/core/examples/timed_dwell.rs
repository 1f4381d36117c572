//! Dwell-time switching between a stable and an unstable mode for several
//! minimum dwell times. Premises carry exponential factors that are decided
//! with rational enclosures.

use switchstab::check::certificate::Verdict;
use switchstab::check::{check_all, overall, CheckConfig};
use switchstab::model::parse_model;
use switchstab::vcgen::{generate, Rule};

fn main() {
    for name in ["timed_demo_short", "timed_demo", "timed_demo_long"] {
        let path = format!("{}/fixtures/{name}.ssm", env!("CARGO_MANIFEST_DIR"));
        let m = parse_model(&std::fs::read_to_string(path).expect("fixture")).expect("parses");
        let theta = m.transitions.iter().find_map(|t| t.min_dwell.clone()).expect("dwell");
        let vcs = generate(&m, Rule::MlfTimed).expect("conditions");
        let checked = check_all(&vcs, &CheckConfig::default());
        println!("{name}: min dwell {theta}, overall {}", overall(checked.iter().map(|c| &c.verdict)));
        for (vc, c) in vcs.iter().zip(&checked) {
            if !vc.conclusion.expr.has_exp() {
                continue;
            }
            let note = match &c.verdict {
                Verdict::Refuted { counterexample } => {
                    let pt: Vec<String> = counterexample.point.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    format!("at {}", pt.join(", "))
                }
                _ => String::new(),
            };
            println!("  {} >= 0: {} {note}", vc.conclusion.expr, c.verdict.label());
        }
    }
}
