//! End-to-end verification of a state-dependent system with two unstable
//! modes, then an independent replay of the saved report.

use switchstab::check::certificate::Certificate;
use switchstab::check::CheckConfig;
use switchstab::report::{replay_report, verify, CandidateSource, Report};

fn main() {
    let path = format!("{}/fixtures/example7.ssm", env!("CARGO_MANIFEST_DIR"));
    let source = std::fs::read_to_string(path).expect("fixture");
    let report = verify(&source, None, &CandidateSource::Annotation, &CheckConfig::default()).expect("verifies");

    println!("rule {}; overall {}", report.rule, report.overall);
    for vc in &report.vcs {
        let how = vc.certificate.as_ref().map_or("-", Certificate::kind_name);
        println!("  {:16} {:8} {how}", vc.id, vc.verdict);
        if let Some(Certificate::PdFactorization { d, .. }) = &vc.certificate {
            let pivots: Vec<String> = d.iter().map(|p| p.to_string()).collect();
            println!("  {:16} pivots {}", "", pivots.join(", "));
        }
    }

    let json = report.normalized().to_json();
    let back = Report::from_json(&json).expect("round trip");
    match replay_report(&back) {
        Ok(o) => println!("replayed {} conditions: {o}", back.vcs.len()),
        Err(e) => println!("replay failed: {e:?}"),
    }
}
