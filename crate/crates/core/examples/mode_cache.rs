// Reusing exact spectra across runs with the on-disk cache.

use radial_entanglement::{
    total_entanglement_with, EntanglementConfig, ModeCache, ModelParams, Partition,
};

pub fn run_example() -> radial_entanglement::Result<()> {
    let dir = std::env::temp_dir().join(format!("radent-example-{}", std::process::id()));
    let params = ModelParams::new(3.0, 0.5, 30);
    let part = Partition::new(12, 30)?;
    let cfg = EntanglementConfig::default();

    let cold = ModeCache::open(&dir)?;
    let a = total_entanglement_with(&params, part, &cfg, &cold)?;
    println!("cold: S = {:.10}, {} reductions", a.S, cold.reductions());

    let warm = ModeCache::open(&dir)?;
    let b = total_entanglement_with(&params, part, &cfg, &warm)?;
    println!(
        "warm: S = {:.10}, {} reductions, {} hits",
        b.S,
        warm.reductions(),
        warm.hits()
    );
    assert_eq!(a, b);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> radial_entanglement::Result<()> {
    run_example()
}
