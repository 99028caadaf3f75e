// Entropy of a growing ball at D = 3 and the fitted area-law prefactor.
//
// ```text
// cargo run --release --example area_law
// ```

use radial_entanglement::analysis::{sweep, Axis, PartitionRule};
use radial_entanglement::{EntanglementConfig, ExactModes, ModelParams};

pub fn run_example() -> radial_entanglement::Result<()> {
    let params = ModelParams::new(3.0, 0.0, 40);
    let cuts: Vec<f64> = (4..=16).map(|n| n as f64).collect();
    let res = sweep(
        &params,
        Axis::Radius,
        &cuts,
        &PartitionRule::Window,
        &EntanglementConfig::default(),
        &ExactModes::new(),
    )?;

    println!("{:>4} {:>8} {:>12} {:>9}", "n", "R", "S", "l_switch");
    for p in &res.points {
        println!(
            "{:>4} {:>8.2} {:>12.6} {:>9}",
            p.traced_sites, p.radius, p.result.S, p.result.l_switch
        );
    }
    let fit = &res.slopes()?[0].entropy;
    println!(
        "S = {:.5} R^2 + {:.4}   (R² of fit {:.7})",
        fit.slope, fit.intercept, fit.r_squared
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> radial_entanglement::Result<()> {
    run_example()
}
