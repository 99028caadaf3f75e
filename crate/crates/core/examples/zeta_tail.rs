// The angular-momentum tail resummed with zeta functions, compared with the
// direct sum, across dimensions.

use radial_entanglement::perturbative::{tail_zeta_with, EdgePolicy};
use radial_entanglement::{tail_direct, ModelParams};

pub fn run_example() -> radial_entanglement::Result<()> {
    for dim in [2.0, 2.5, 3.0, 4.0] {
        let params = ModelParams::new(dim, 0.0, 12);
        let (zeta, series) = tail_zeta_with(&params, 6, 100, 5, EdgePolicy::Reject)?;
        let direct = tail_direct(&params, 6, 100, 1e-10)?;
        println!(
            "D = {dim}: ξ l⁴ ≈ {:.6} + {:.4}/l + ...  ΔS zeta = {:.9e}, direct = {:.9e} ({} terms)",
            series.xi_coeffs[0], series.xi_coeffs[1], zeta.delta_s, direct.delta_s, direct.terms
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> radial_entanglement::Result<()> {
    run_example()
}
