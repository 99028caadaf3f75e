//! Fast oracle suite: closed forms and invariants that any correct build
//! must reproduce. Run from the command line with `radent selftest`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::entanglement::{mode_entropy, spectrum_sums};
use crate::error::Error;
use crate::lattice::{build_coupling_matrix, ModelParams};
use crate::perturbative::{perturbative_xi, tail_direct, tail_zeta};
use crate::reduction::{
    matrix_sqrt_spd, reduce_mode, reduce_mode_kept, reduce_mode_traced, Kept, ModeOmega, Partition,
};
use crate::sum::NeumaierSum;
use crate::zeta::riemann_zeta;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Measured error or a short explanation.
    pub detail: String,
}

fn check(name: &'static str, value: Result<f64, Error>, tolerance: f64) -> SelfCheck {
    match value {
        Ok(v) => SelfCheck {
            name,
            passed: v <= tolerance,
            detail: format!("{v:.3e} (tolerance {tolerance:.0e})"),
        },
        Err(e) => SelfCheck {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn sqrt_residual() -> Result<f64, Error> {
    let mut worst = 0.0f64;
    for &(dim, l, mass) in &[
        (3.0, 0, 0.0),
        (3.0, 40, 0.0),
        (2.0, 3, 0.5),
        (4.5, 7, 0.0),
        (1.5, 0, 0.0),
    ] {
        let k = build_coupling_matrix(&ModelParams::new(dim, mass, 60), l).to_dense();
        let om = matrix_sqrt_spd(&k)?;
        worst = worst.max((&om * &om - &k).norm() / k.norm());
    }
    Ok(worst)
}

fn two_oscillators() -> Result<f64, Error> {
    let mut worst = 0.0f64;
    for &(k, kappa) in &[(2.0, 1.0), (1.0, 0.999), (5.0, 0.01), (3.0, 2.5)] {
        let om = matrix_sqrt_spd(&DMatrix::from_row_slice(2, 2, &[k, -kappa, -kappa, k]))?;
        let (xi, _) = reduce_mode_traced(&om, Partition::new(1, 2)?)?;
        let (wp, wm) = (f64::sqrt(k + kappa), f64::sqrt(k - kappa));
        let exact = ((wp.sqrt() - wm.sqrt()) / (wp.sqrt() + wm.sqrt())).powi(2);
        worst = worst.max((xi[0] - exact).abs());
    }
    Ok(worst)
}

fn complement() -> Result<f64, Error> {
    let mut worst = 0.0f64;
    for &(dim, l, n) in &[(3.0, 0, 10), (3.0, 4, 25), (2.0, 1, 5), (4.0, 10, 40)] {
        let params = ModelParams::new(dim, 0.0, 50);
        let mode = ModeOmega::new(&params, l)?;
        let part = Partition::new(n, 50)?;
        let (outer, _) = spectrum_sums(&reduce_mode_kept(&mode, part, Kept::Outer)?.xi)?;
        let (inner, _) = spectrum_sums(&reduce_mode_kept(&mode, part, Kept::Inner)?.xi)?;
        worst = worst.max((outer - inner).abs());
    }
    Ok(worst)
}

fn geometric_entropy() -> Result<f64, Error> {
    let mut worst = 0.0f64;
    for &xi in &[0.5f64, 0.9, 0.3, 1e-3] {
        let mut brute = NeumaierSum::new();
        let mut p = 1.0 - xi;
        while p >= 1e-18 {
            brute.add(-p * p.ln());
            p *= xi;
        }
        worst = worst.max((mode_entropy(xi)? - brute.value()).abs());
    }
    Ok(worst)
}

fn zeta_identities() -> Result<f64, Error> {
    use std::f64::consts::PI;
    Ok((riemann_zeta(2.0)? - PI * PI / 6.0)
        .abs()
        .max((riemann_zeta(4.0)? - PI.powi(4) / 90.0).abs()))
}

fn perturbative_vs_exact() -> Result<f64, Error> {
    let params = ModelParams::new(3.0, 0.0, 10);
    let mut worst = 0.0f64;
    for &l in &[1000usize, 2000, 5000] {
        for n in 1..=8 {
            let exact =
                reduce_mode(&ModeOmega::new(&params, l)?, Partition::new(n, 10)?)?.largest();
            let pert = perturbative_xi(&params, l, n)?;
            worst = worst.max(((pert - exact) / exact).abs());
        }
    }
    Ok(worst)
}

fn tail_methods() -> Result<f64, Error> {
    let params = ModelParams::new(3.0, 0.0, 10);
    let direct = tail_direct(&params, 5, 1000, 1e-10)?;
    let zeta = tail_zeta(&params, 5, 1000, 5)?;
    Ok(((direct.delta_s - zeta.delta_s) / direct.delta_s)
        .abs()
        .max(((direct.delta_e1 - zeta.delta_e1) / direct.delta_e1).abs()))
}

fn divergence() -> SelfCheck {
    let params = ModelParams::new(5.0, 0.0, 10);
    let r = tail_direct(&params, 5, 100, 1e-8);
    SelfCheck {
        name: "divergence at D >= 5",
        passed: matches!(r, Err(Error::Divergent { .. })),
        detail: match r {
            Err(e) => e.to_string(),
            Ok(_) => "tail summed without error".into(),
        },
    }
}

/// Runs every check; none of them takes more than a fraction of a second.
pub fn run_selftest() -> Vec<SelfCheck> {
    vec![
        check("sqrt residual |Ω² − K|/|K|", sqrt_residual(), 1e-10),
        check("two-oscillator closed form", two_oscillators(), 1e-12),
        check("complement entropy", complement(), 1e-8),
        check(
            "mode entropy vs geometric spectrum",
            geometric_entropy(),
            1e-12,
        ),
        check("zeta(2), zeta(4)", zeta_identities(), 1e-12),
        check(
            "perturbative vs exact xi, l >= 100 N",
            perturbative_vs_exact(),
            1e-3,
        ),
        check("direct vs zeta tail", tail_methods(), 1e-3),
        divergence(),
    ]
}
