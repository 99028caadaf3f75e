// Top-k product spectra of two balls and the majorization between them.

use radial_entanglement::analysis::majorization_report;
use radial_entanglement::{EntanglementConfig, ExactModes, ModelParams, Partition};

pub fn run_example() -> radial_entanglement::Result<()> {
    let params = ModelParams::new(3.0, 0.0, 24);
    let cuts = [
        Partition::new(4, 24)?,
        Partition::new(8, 24)?,
        Partition::new(12, 24)?,
    ];
    let summary = majorization_report(
        &params,
        &cuts,
        50,
        &EntanglementConfig::default(),
        &ExactModes::new(),
    )?;
    for c in &summary.comparisons {
        println!(
            "{} ≺ {}: holds = {}, worst relative margin {:.3e}, truncation bound {:.3e}",
            c.majorized,
            c.majorizing,
            c.holds(),
            c.worst_relative_margin(),
            c.deficit_bound
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> radial_entanglement::Result<()> {
    run_example()
}
