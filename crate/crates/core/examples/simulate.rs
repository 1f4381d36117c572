//! Simulating switched executions: a trace with sublevel-set trapping,
//! stability probes, and the divergence seen once domains are ignored.

use switchstab::model::parse_model;
use switchstab::rational::rat;
use switchstab::sim::{audit_trace, check_trace_sublevel, probe_stability, simulate, Policy, SimOptions};
use switchstab::vcgen::LyapunovAssignment;

fn main() {
    let path = format!("{}/fixtures/example7.ssm", env!("CARGO_MANIFEST_DIR"));
    let m = parse_model(&std::fs::read_to_string(path).expect("fixture")).expect("parses");
    let opts = SimOptions::default();

    let x0 = [("x1".to_string(), 0.1), ("x2".to_string(), 0.0)].into();
    let trace = simulate(&m, &x0, None, &Policy::Random { seed: 7 }, &opts);
    println!("{} samples, {} switches, end {}", trace.samples.len(), trace.events.len(), trace.end);
    println!("audit: {:?}", audit_trace(&m, &trace));
    let a = LyapunovAssignment::from_model(&m).expect("annotated");
    println!("active V < 0.012 throughout: {}", check_trace_sublevel(&trace, &a, &rat(12, 1000)).holds);
    for line in trace.to_csv().lines().take(3) {
        println!("  {line}");
    }

    let probe = probe_stability(&m, &[0.5, 0.1], 50, 1, &opts);
    for e in &probe.stability {
        println!("eps {}: delta {:?}, {} violations", e.epsilon, e.delta, e.violations.len());
    }
    let free = probe_stability(&m.without_domains(), &[0.5], 50, 1, &opts);
    let e = &free.stability[0];
    println!("without domains, eps 0.5: delta {:?}, {} violations, max norm {:.3e}", e.delta, e.violations.len(), e.max_norm);
}
