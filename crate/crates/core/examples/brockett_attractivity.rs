//! Region-restricted attractivity for the event-triggered nonholonomic
//! integrator: exact region invariance and Lie negativity, then a
//! simulation probe from sampled initial states in the region.

use switchstab::check::certificate::{Certificate, Verdict};
use switchstab::check::{check_all, overall, CheckConfig};
use switchstab::model::parse_model;
use switchstab::sim::{probe_attractivity, SimOptions};
use switchstab::vcgen::gen_restricted_attractivity;

fn main() {
    let path = format!("{}/fixtures/brockett_event.ssm", env!("CARGO_MANIFEST_DIR"));
    let m = parse_model(&std::fs::read_to_string(path).expect("fixture")).expect("parses");
    let v = m.common_lyapunov.clone().expect("common candidate");
    let region = m.region.clone().expect("region");

    let vcs = gen_restricted_attractivity(&m, &v, &region).expect("conditions");
    let checked = check_all(&vcs, &CheckConfig::default());
    for (vc, c) in vcs.iter().zip(&checked) {
        let detail = match &c.verdict {
            Verdict::Proved { certificate: Certificate::Invariance { method, cofactor, .. } } => {
                format!("{method:?}, cofactor {}", cofactor.as_deref().unwrap_or("-"))
            }
            Verdict::Proved { certificate } => certificate.kind_name().to_string(),
            other => other.label().to_string(),
        };
        println!("{:40} {:8} {detail}", vc.id, c.verdict.label());
    }
    println!("overall {}", overall(checked.iter().map(|c| &c.verdict)));

    let probe = probe_attractivity(&m, 1.0, 0.1, 100, 1, Some(&region), &SimOptions::default());
    println!(
        "probe: {} samples, {} violations, settle time {:?}",
        probe.samples,
        probe.attractivity_violations.len(),
        probe.settle_time
    );
}
