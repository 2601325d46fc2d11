//! Finite-difference check of the full training loss on the desk model.

use std::time::Instant;

use tgls::model::ModelConfig;
use tgls::training::{gradcheck, GRADCHECK_TOLERANCE};

fn main() -> tgls::Result<()> {
    let cfg = ModelConfig::desk();
    let start = Instant::now();
    let report = gradcheck(&cfg, 0.25, 0)?;
    println!(
        "checked {} entries in {:.1?}: max relative error {:.3e} (tolerance {:.0e}) at {:?}",
        report.checked,
        start.elapsed(),
        report.max_rel_error,
        GRADCHECK_TOLERANCE,
        report.worst
    );
    println!("{}", if report.passed() { "PASS" } else { "FAIL" });
    Ok(())
}
