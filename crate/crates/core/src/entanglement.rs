//! Entropy and single-copy entanglement of the reduced ground state, summed
//! over partial waves.
//!
//! Each reduced mode with parameter `ξ` carries the geometric spectrum
//! `(1 − ξ) ξᵏ`, so its von Neumann entropy and largest-eigenvalue surprise
//! are closed forms. The total over the sphere is
//!
//! ```text
//! S  = Σ_l ν(l, D) Σ_i S(ξ_{l,i}),     E₁ = Σ_l ν(l, D) Σ_i −ln(1 − ξ_{l,i}),
//! ```
//!
//! evaluated exactly for `l < l_switch` and perturbatively beyond.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{degeneracy, ModelParams};
use crate::perturbative::{
    perturbative_mode_with, tail_direct_with, tail_range_with, tail_zeta_with, EdgePolicy,
    DEFAULT_TERM_BUDGET,
};
use crate::reduction::{Kept, ModeOmega, Partition, Reducer};
use crate::sum::NeumaierSum;

/// Below this `ξ` the entropy uses its small-`ξ` expansion.
const SMALL_XI: f64 = 1e-12;

fn check_xi(xi: f64) -> Result<()> {
    if !(0.0..1.0).contains(&xi) {
        return Err(Error::Domain(format!("ξ must lie in [0, 1), got {xi}")));
    }
    Ok(())
}

/// Entropy in nats of one mode with spectrum `(1 − ξ) ξᵏ`.
pub fn mode_entropy(xi: f64) -> Result<f64> {
    check_xi(xi)?;
    if xi == 0.0 {
        return Ok(0.0);
    }
    if xi < SMALL_XI {
        return Ok(xi * (1.0 - xi.ln()));
    }
    Ok(-(-xi).ln_1p() - xi / (1.0 - xi) * xi.ln())
}

/// `−ln(1 − ξ)`, the single-copy entanglement of one mode.
pub fn mode_single_copy(xi: f64) -> Result<f64> {
    check_xi(xi)?;
    Ok(-(-xi).ln_1p())
}

/// Where the exact per-`l` computation hands over to the perturbative tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LSwitch {
    /// Smallest `l` at which perturbative and exact `ξ₁` agree to
    /// [`CROSSOVER_TOLERANCE`] at two consecutive `l`, capped at `20 N`.
    #[default]
    Auto,
    Fixed(usize),
}

/// Method for the sum over `l ≥ l_switch`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TailKind {
    #[default]
    Direct,
    Zeta,
}

pub const CROSSOVER_TOLERANCE: f64 = 1e-6;

/// The cap on the automatic crossover is `CROSSOVER_CAP × N`.
pub const CROSSOVER_CAP: usize = 20;

/// The zeta tail is resummed from `ZETA_OFFSET × l_switch`; the partial
/// waves in between are summed term by term.
pub const ZETA_OFFSET: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementConfig {
    pub l_switch: LSwitch,
    /// Stopping tolerance of the direct tail sum.
    pub rel_tol: f64,
    pub tail: TailKind,
    /// Subleading orders of the zeta tail fit.
    pub fit_degree: usize,
}

impl Default for EntanglementConfig {
    fn default() -> Self {
        EntanglementConfig {
            l_switch: LSwitch::Auto,
            rel_tol: 1e-10,
            tail: TailKind::Direct,
            fit_degree: 5,
        }
    }
}

/// Contribution of one partial wave (not yet weighted by `ν`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialWave {
    pub l: usize,
    pub nu: f64,
    pub s: f64,
    pub e1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct EntanglementResult {
    pub S: f64,
    pub E1: f64,
    pub per_l: Vec<PartialWave>,
    pub tail_S: f64,
    pub tail_E1: f64,
    pub l_switch: usize,
    pub converged: bool,
}

/// Supplies exact `ξ` spectra for a partial wave and a set of cuts.
///
/// Spectra may come from either side of the cut; only the nonzero part is
/// physical and it does not depend on the side.
pub trait ModeSource: Sync {
    fn spectra(
        &self,
        params: &ModelParams,
        l: usize,
        partitions: &[Partition],
    ) -> Result<Vec<Vec<f64>>>;
}

/// Computes spectra directly, one `Ω` per partial wave shared by all cuts.
#[derive(Debug, Default)]
pub struct ExactModes {
    reductions: AtomicUsize,
}

impl ExactModes {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of block reductions performed so far.
    pub fn reductions(&self) -> usize {
        self.reductions.load(Ordering::Relaxed)
    }
}

impl ModeSource for ExactModes {
    fn spectra(
        &self,
        params: &ModelParams,
        l: usize,
        partitions: &[Partition],
    ) -> Result<Vec<Vec<f64>>> {
        if partitions.is_empty() {
            return Ok(Vec::new());
        }
        let mode = ModeOmega::new(params, l)?;
        let reducer = Reducer::new(&mode.omega);
        self.reductions
            .fetch_add(partitions.len(), Ordering::Relaxed);
        partitions
            .iter()
            .map(|&p| reducer.reduce(p, Kept::smaller(p, params.sites)))
            .collect()
    }
}

impl<T: ModeSource + ?Sized> ModeSource for &T {
    fn spectra(
        &self,
        params: &ModelParams,
        l: usize,
        partitions: &[Partition],
    ) -> Result<Vec<Vec<f64>>> {
        (**self).spectra(params, l, partitions)
    }
}

/// `(Σ S(ξ_i), Σ −ln(1 − ξ_i))` for one spectrum.
pub fn spectrum_sums(xi: &[f64]) -> Result<(f64, f64)> {
    let mut s = NeumaierSum::new();
    let mut e = NeumaierSum::new();
    for &x in xi {
        s.add(mode_entropy(x)?);
        e.add(mode_single_copy(x)?);
    }
    Ok((s.value(), e.value()))
}

pub fn total_entanglement(
    params: &ModelParams,
    partition: Partition,
    cfg: &EntanglementConfig,
) -> Result<EntanglementResult> {
    total_entanglement_with(params, partition, cfg, &ExactModes::new())
}

pub fn total_entanglement_with(
    params: &ModelParams,
    partition: Partition,
    cfg: &EntanglementConfig,
    source: &dyn ModeSource,
) -> Result<EntanglementResult> {
    let mut all = total_entanglement_many(params, &[partition], cfg, source)?;
    Ok(all.remove(0))
}

struct Running {
    partition: Partition,
    per_l: Vec<PartialWave>,
    agreeing: usize,
    l_switch: Option<usize>,
}

/// [`total_entanglement`] for several cuts of the same chain, sharing each
/// partial wave's `Ω` between them. Results are returned in input order.
pub fn total_entanglement_many(
    params: &ModelParams,
    partitions: &[Partition],
    cfg: &EntanglementConfig,
    source: &dyn ModeSource,
) -> Result<Vec<EntanglementResult>> {
    params.validate_summable()?;
    if !(cfg.rel_tol > 0.0) {
        return Err(Error::Domain(format!(
            "rel_tol must be positive, got {}",
            cfg.rel_tol
        )));
    }
    for p in partitions {
        Partition::new(p.traced_sites(), params.sites)?;
    }
    let cap = CROSSOVER_CAP * params.sites;
    let mut running: Vec<Running> = partitions
        .iter()
        .map(|&partition| Running {
            partition,
            per_l: Vec::new(),
            agreeing: 0,
            l_switch: match cfg.l_switch {
                LSwitch::Fixed(_) => None,
                LSwitch::Auto => None,
            },
        })
        .collect();
    let limit = match cfg.l_switch {
        LSwitch::Fixed(l) => l,
        LSwitch::Auto => cap,
    };

    let block = 4 * rayon::current_num_threads().max(1);
    let mut l0 = 0usize;
    while l0 < limit {
        let active: Vec<usize> = (0..running.len())
            .filter(|&i| running[i].l_switch.is_none())
            .collect();
        if active.is_empty() {
            break;
        }
        let cuts: Vec<Partition> = active.iter().map(|&i| running[i].partition).collect();
        let l1 = (l0 + block).min(limit);
        let computed: Vec<(usize, f64, Vec<Vec<f64>>)> = (l0..l1)
            .into_par_iter()
            .map(|l| {
                Ok((
                    l,
                    degeneracy(l, params.dim)?,
                    source.spectra(params, l, &cuts)?,
                ))
            })
            .collect::<Result<_>>()?;
        for (l, nu, spectra) in computed {
            for (&i, xi) in active.iter().zip(&spectra) {
                let run = &mut running[i];
                if run.l_switch.is_some() {
                    continue;
                }
                if cfg.l_switch == LSwitch::Auto && l > 0 {
                    let exact = xi.first().copied().unwrap_or(0.0);
                    let n = run.partition.traced_sites();
                    let agrees = perturbative_mode_with(params, l, n, EdgePolicy::Decoupled)
                        .map(|m| {
                            exact > 0.0 && ((m.xi - exact) / exact).abs() < CROSSOVER_TOLERANCE
                        })
                        .unwrap_or(false);
                    run.agreeing = if agrees { run.agreeing + 1 } else { 0 };
                    if run.agreeing == 2 {
                        run.l_switch = Some(l);
                        continue;
                    }
                }
                let (s, e1) = spectrum_sums(xi)?;
                run.per_l.push(PartialWave { l, nu, s, e1 });
            }
        }
        l0 = l1;
    }

    running
        .into_par_iter()
        .map(|run| {
            let (l_switch, crossed) = match (cfg.l_switch, run.l_switch) {
                (LSwitch::Fixed(l), _) => (l, true),
                (LSwitch::Auto, Some(l)) => (l, true),
                (LSwitch::Auto, None) => (cap, false),
            };
            finish(params, cfg, run.partition, run.per_l, l_switch, crossed)
        })
        .collect()
}

fn finish(
    params: &ModelParams,
    cfg: &EntanglementConfig,
    partition: Partition,
    per_l: Vec<PartialWave>,
    l_switch: usize,
    crossed: bool,
) -> Result<EntanglementResult> {
    let n = partition.traced_sites();
    let start = l_switch.max(1);
    let (tail_s, tail_e1) = match cfg.tail {
        TailKind::Direct => {
            let t = tail_direct_with(
                params,
                n,
                start,
                cfg.rel_tol,
                DEFAULT_TERM_BUDGET,
                EdgePolicy::Decoupled,
            )?;
            (t.delta_s, t.delta_e1)
        }
        TailKind::Zeta => {
            // The fitted series is only trusted a few crossover lengths out.
            let resum_from = ZETA_OFFSET * start;
            let (hs, he) =
                tail_range_with(params, n, start, resum_from - 1, EdgePolicy::Decoupled)?;
            let (t, _) =
                tail_zeta_with(params, n, resum_from, cfg.fit_degree, EdgePolicy::Decoupled)?;
            (hs + t.delta_s, he + t.delta_e1)
        }
    };
    let mut s = NeumaierSum::new();
    let mut e = NeumaierSum::new();
    for w in &per_l {
        s.add(w.nu * w.s);
        e.add(w.nu * w.e1);
    }
    s.add(tail_s);
    e.add(tail_e1);
    Ok(EntanglementResult {
        S: s.value(),
        E1: e.value(),
        per_l,
        tail_S: tail_s,
        tail_E1: tail_e1,
        l_switch,
        converged: crossed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn brute_entropy(xi: f64) -> f64 {
        let mut acc = NeumaierSum::new();
        let mut p = 1.0 - xi;
        while p >= 1e-18 {
            acc.add(-p * p.ln());
            p *= xi;
        }
        acc.value()
    }

    #[test]
    fn mode_entropy_values() {
        assert_eq!(mode_entropy(0.0).unwrap(), 0.0);
        assert_relative_eq!(
            mode_entropy(0.5).unwrap(),
            2.0 * 2f64.ln(),
            max_relative = 1e-15
        );
        for &xi in &[0.5, 0.9, 0.1, 1e-6] {
            assert!(
                (mode_entropy(xi).unwrap() - brute_entropy(xi)).abs() <= 1e-12,
                "ξ={xi}"
            );
        }
        assert!(mode_entropy(1.0).is_err());
        assert!(mode_entropy(-0.1).is_err());
        assert!(mode_entropy(f64::NAN).is_err());
    }

    #[test]
    fn small_xi_branch_is_continuous() {
        let below = mode_entropy(0.999e-12).unwrap();
        let above = mode_entropy(1.001e-12).unwrap();
        assert!((above - below) / above < 1e-2);
        assert!(mode_entropy(1e-300).unwrap() > 0.0);
    }

    #[test]
    fn single_copy_bounded_by_entropy() {
        assert_relative_eq!(mode_single_copy(0.5).unwrap(), 2f64.ln());
        assert_eq!(mode_single_copy(0.0).unwrap(), 0.0);
        for i in 1..1000 {
            let xi = i as f64 / 1000.0;
            assert!(mode_single_copy(xi).unwrap() <= mode_entropy(xi).unwrap());
        }
    }

    #[test]
    fn heavy_field_is_nearly_product() {
        let p = ModelParams::new(3.0, 1e3, 20);
        let r = total_entanglement(
            &p,
            Partition::new(10, 20).unwrap(),
            &EntanglementConfig::default(),
        )
        .unwrap();
        assert!(r.S < 1e-3 && r.S > 0.0, "{}", r.S);
        assert!(r.E1 <= r.S);
    }

    #[test]
    fn complement_and_bookkeeping() {
        let p = ModelParams::new(3.0, 0.0, 20);
        let cfg = EntanglementConfig::default();
        let parts: Vec<Partition> = (1..20).map(|n| Partition::new(n, 20).unwrap()).collect();
        let res = total_entanglement_many(&p, &parts, &cfg, &ExactModes::new()).unwrap();
        for r in &res {
            let sum: f64 = r.per_l.iter().map(|w| w.nu * w.s).sum::<f64>() + r.tail_S;
            assert!((sum - r.S).abs() <= 1e-10 * r.S);
            assert!(r.E1 <= r.S);
            assert!(r.converged);
            assert_eq!(r.per_l.len(), r.l_switch);
        }
        // Same cuts, one at a time, agree with the shared computation.
        for (k, part) in parts.iter().enumerate().step_by(6) {
            let single = total_entanglement(&p, *part, &cfg).unwrap();
            assert_eq!(single, res[k]);
        }
    }

    #[test]
    fn fixed_switch_is_respected() {
        let p = ModelParams::new(3.0, 0.0, 10);
        let part = Partition::new(5, 10).unwrap();
        let cfg = EntanglementConfig {
            l_switch: LSwitch::Fixed(300),
            ..Default::default()
        };
        let fixed = total_entanglement(&p, part, &cfg).unwrap();
        assert_eq!(fixed.l_switch, 300);
        assert_eq!(fixed.per_l.len(), 300);
        let auto = total_entanglement(&p, part, &EntanglementConfig::default()).unwrap();
        assert!(((fixed.S - auto.S) / auto.S).abs() < 1e-7);
        assert!(((fixed.E1 - auto.E1) / auto.E1).abs() < 1e-7);
    }

    #[test]
    fn tail_methods_agree_in_total() {
        let p = ModelParams::new(3.0, 0.0, 12);
        let part = Partition::new(6, 12).unwrap();
        let direct = total_entanglement(&p, part, &EntanglementConfig::default()).unwrap();
        let zeta = total_entanglement(
            &p,
            part,
            &EntanglementConfig {
                tail: TailKind::Zeta,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(((direct.S - zeta.S) / direct.S).abs() < 1e-8);
        assert!(((direct.tail_S - zeta.tail_S) / direct.tail_S).abs() < 1e-3);
    }

    #[test]
    fn divergent_dimension() {
        let p = ModelParams::new(5.0, 0.0, 10);
        let r = total_entanglement(
            &p,
            Partition::new(5, 10).unwrap(),
            &EntanglementConfig::default(),
        );
        assert!(matches!(r, Err(Error::Divergent { .. })));
    }
}
