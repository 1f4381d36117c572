//! A solver-produced Lyapunov candidate with float-noise coefficients is
//! refuted by an exact counterexample; dropping the tiny terms repairs it.

use switchstab::check::certificate::Verdict;
use switchstab::check::quadratic::quadratic_matrix;
use switchstab::check::{check_pd_quadratic, falsify};
use switchstab::model::parse_model;
use switchstab::rational::rat;
use switchstab::synth::truncate_small_terms;
use switchstab::vcgen::{generate, Rule};

fn main() {
    let path = format!("{}/fixtures/cruise_pi.ssm", env!("CARGO_MANIFEST_DIR"));
    let m = parse_model(&std::fs::read_to_string(path).expect("fixture")).expect("parses");
    let vcs = generate(&m, Rule::for_model(&m)).expect("conditions");
    let positivity = vcs.iter().find(|v| v.id.starts_with("positivity")).expect("positivity premise");

    match falsify(positivity, 100_000, 0) {
        Some(cex) => {
            println!("{} refuted at", positivity.id);
            for (k, v) in &cex.point {
                println!("  {k} = {v}");
            }
            println!("  V = {}", cex.value[0]);
        }
        None => println!("no counterexample found"),
    }

    let v = m.lyapunov_for("normalPI").expect("annotated");
    let (trimmed, report) = truncate_small_terms(v, &rat(1, 10_000_000_000)).expect("nonzero");
    print!("{report}");
    let q = quadratic_matrix(&trimmed, &m.state_vars).expect("quadratic");
    match check_pd_quadratic(&q, true).expect("symmetric") {
        Verdict::Proved { certificate } => println!("truncated candidate is positive definite: {}", serde_json::to_string(&certificate).unwrap()),
        other => println!("truncated candidate: {}", other.label()),
    }
}
