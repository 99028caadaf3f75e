// Large-`l` modes: the closed-form `ξ` against exact reductions, and the
// directly summed tail of the angular-momentum series.

use radial_entanglement::perturbative::perturbative_mode;
use radial_entanglement::reduction::ModeOmega;
use radial_entanglement::{reduce_mode, tail_direct, ModelParams, Partition};

pub fn run_example() -> radial_entanglement::Result<()> {
    let params = ModelParams::new(3.0, 0.0, 20);
    let n = 8;
    println!(
        "{:>6} {:>14} {:>14} {:>10}",
        "l", "exact ξ", "perturbative", "rel err"
    );
    for l in [20, 50, 100, 200, 400, 800] {
        let exact = reduce_mode(&ModeOmega::new(&params, l)?, Partition::new(n, 20)?)?.largest();
        let pert = perturbative_mode(&params, l, n)?;
        println!(
            "{l:>6} {exact:>14.6e} {:>14.6e} {:>10.2e}",
            pert.xi,
            (pert.xi - exact).abs() / exact
        );
    }
    let tail = tail_direct(&params, n, 200, 1e-10)?;
    println!(
        "tail from l = 200: ΔS = {:.8e}, ΔE1 = {:.8e} ({} terms, integral remainder {:.2e})",
        tail.delta_s, tail.delta_e1, tail.terms, tail.remainder_s
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> radial_entanglement::Result<()> {
    run_example()
}
