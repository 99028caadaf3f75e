// The ratio of the entropy and single-copy prefactors as the spatial
// dimension is varied continuously.

use radial_entanglement::analysis::{sweep, Axis, PartitionRule};
use radial_entanglement::{EntanglementConfig, ExactModes, ModelParams};

pub fn run_example() -> radial_entanglement::Result<()> {
    let params = ModelParams::new(3.0, 0.0, 24);
    let rule = PartitionRule::Fixed((3..=12).collect());
    let dims = [1.5, 2.0, 2.5, 3.0, 3.5];
    let res = sweep(
        &params,
        Axis::Dimension,
        &dims,
        &rule,
        &EntanglementConfig::default(),
        &ExactModes::new(),
    )?;
    println!("{:>5} {:>10} {:>10} {:>8}", "D", "k_S", "k_E", "ratio");
    for p in res.slopes()? {
        println!(
            "{:>5} {:>10.5} {:>10.5} {:>8.4}",
            p.axis_value,
            p.entropy.slope,
            p.single_copy.slope,
            p.ratio()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> radial_entanglement::Result<()> {
    run_example()
}
