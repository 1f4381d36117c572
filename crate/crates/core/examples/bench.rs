//! Runs the bundled fixture corpus against its expected statuses.

use switchstab::check::CheckConfig;
use switchstab::report::bench;

fn main() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    match bench(&dir, &CheckConfig::default()) {
        Ok(summary) => {
            print!("{}", summary.table());
            println!("{} mismatch(es)", summary.mismatches);
        }
        Err(e) => eprintln!("{e}"),
    }
}
