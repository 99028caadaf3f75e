// Entanglement lost along a mass flow: prefactors, modewise ordering of the
// `ξ` parameters and majorization of the reduced spectra.

use radial_entanglement::analysis::rg_report;
use radial_entanglement::{EntanglementConfig, ExactModes, ModelParams, Partition};

pub fn run_example() -> radial_entanglement::Result<()> {
    let params = ModelParams::new(3.0, 0.0, 24);
    let masses = [0.0, 0.5, 1.0, 2.0];
    let report = rg_report(
        &params,
        &masses,
        Partition::new(10, 24)?,
        30,
        &EntanglementConfig::default(),
        &ExactModes::new(),
    )?;
    for (m, k) in report.masses.iter().zip(&report.slopes) {
        println!("μ = {m:<4} k_S = {k:.5}");
    }
    println!("prefactors decrease: {}", report.slopes_decrease.passed);
    println!(
        "modewise ξ(μ′) ≤ ξ(μ): {} ({})",
        report.modewise.passed, report.modewise.detail
    );
    if let Some(m) = &report.majorization {
        println!(
            "spectra majorize along the flow: {} (worst margin {:.3e})",
            m.passed, m.worst_margin
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> radial_entanglement::Result<()> {
    run_example()
}
