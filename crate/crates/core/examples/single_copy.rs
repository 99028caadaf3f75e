// Geometric entropy against single-copy entanglement for one cut, with the
// contribution of each partial wave.

use radial_entanglement::{total_entanglement, EntanglementConfig, ModelParams, Partition};

pub fn run_example() -> radial_entanglement::Result<()> {
    let params = ModelParams::new(3.0, 0.0, 30);
    let r = total_entanglement(
        &params,
        Partition::new(10, 30)?,
        &EntanglementConfig::default(),
    )?;

    println!("{:>4} {:>6} {:>14} {:>14}", "l", "ν", "ν S_l", "ν E1_l");
    for w in r.per_l.iter().take(8) {
        println!(
            "{:>4} {:>6} {:>14.8} {:>14.8}",
            w.l,
            w.nu,
            w.nu * w.s,
            w.nu * w.e1
        );
    }
    println!("...");
    println!(
        "exact part up to l = {}, tail S = {:.6}, tail E1 = {:.6}",
        r.l_switch, r.tail_S, r.tail_E1
    );
    println!("S = {:.6}  E1 = {:.6}  S/E1 = {:.4}", r.S, r.E1, r.S / r.E1);
    Ok(())
}

#[allow(dead_code)]
fn main() -> radial_entanglement::Result<()> {
    run_example()
}
