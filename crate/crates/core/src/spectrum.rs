//! Reduced-density-matrix spectra and majorization.
//!
//! A reduced Gaussian state is a tensor product of modes whose spectra are
//! geometric, `(1 − ξ) ξᵏ`. The full spectrum is the set of all products
//! over modes; only a descending prefix of it is ever materialized.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// Modes with `ξ` below this are dropped from product enumeration; their
/// excited levels sit below double-precision significance of the top.
pub const MODE_FILTER: f64 = 1e-16;

/// Default cap on the number of eigenvalues a product enumeration may emit.
pub const DEFAULT_ENUMERATION_BUDGET: usize = 1_000_000;

/// Tolerance used by [`majorizes`] on partial sums.
pub const MAJORIZATION_SLACK: f64 = 1e-12;

/// Descending prefix of a density-matrix spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilitySpectrum {
    pub probs: Vec<f64>,
    /// Sum of `probs`.
    pub mass: f64,
    /// `1 − mass`: probability not represented by `probs`.
    pub truncation_deficit: f64,
    /// Upper bound on the probability carried by excitations of modes that
    /// were filtered out before enumeration (already part of the deficit).
    pub filtered_bound: f64,
}

impl ProbabilitySpectrum {
    /// Wraps a descending list of probabilities.
    pub fn from_descending(probs: Vec<f64>) -> Result<Self> {
        if probs.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Domain("spectrum is not in descending order".into()));
        }
        if probs.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::Domain("spectrum entries must lie in (0, 1]".into()));
        }
        let mass = probs.iter().copied().sum::<NeumaierSum>().value();
        if mass > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("spectrum mass {mass} exceeds 1")));
        }
        Ok(ProbabilitySpectrum {
            probs,
            mass,
            truncation_deficit: 1.0 - mass,
            filtered_bound: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `−Σ p ln p` over the represented part; a lower bound on the entropy
    /// once the prefix is long enough that the remaining entries are small.
    pub fn partial_entropy(&self) -> f64 {
        self.probs
            .iter()
            .map(|&p| -p * p.ln())
            .sum::<NeumaierSum>()
            .value()
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if !(0.0..1.0).contains(&xi) {
        return Err(Error::Domain(format!("ξ must lie in [0, 1), got {xi}")));
    }
    Ok(())
}

/// Spectrum of one mode, `p_k = (1 − ξ) ξᵏ` for `k < cutoff`.
pub fn geometric_spectrum(xi: f64, cutoff: usize) -> Result<ProbabilitySpectrum> {
    check_xi(xi)?;
    if cutoff == 0 {
        return Err(Error::Domain("cutoff must be at least 1".into()));
    }
    let mut probs = Vec::with_capacity(cutoff);
    let mut p = 1.0 - xi;
    for _ in 0..cutoff {
        if p <= 0.0 {
            break;
        }
        probs.push(p);
        p *= xi;
    }
    let mass = probs.iter().copied().sum::<NeumaierSum>().value();
    Ok(ProbabilitySpectrum {
        truncation_deficit: xi.powi(cutoff as i32),
        probs,
        mass,
        filtered_bound: 0.0,
    })
}

/// A mode parameter repeated `multiplicity` times (one partial wave's
/// degenerate copies).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeGroup {
    pub xi: f64,
    pub multiplicity: u64,
}

/// Largest `k` eigenvalues of `⊗_m diag((1 − ξ_m) ξ_mⁿ)`.
pub fn top_k_product_spectrum(xis: &[f64], k: usize) -> Result<ProbabilitySpectrum> {
    let groups: Vec<ModeGroup> = xis
        .iter()
        .map(|&xi| ModeGroup {
            xi,
            multiplicity: 1,
        })
        .collect();
    top_k_grouped(&groups, k, DEFAULT_ENUMERATION_BUDGET)
}

/// Best-first enumeration of the product spectrum over grouped modes.
///
/// Modes are laid out in descending `ξ` and each occupation vector `v` with
/// last occupied mode `j` has at most two children: `v + e_j` and
/// `v − e_j + e_{j+1}`. Every vector has exactly one parent under this rule
/// and children never exceed their parent, so a max-heap yields the spectrum
/// in order without duplicate suppression tables. Degenerate copies are
/// expanded lazily, which keeps huge multiplicities cheap.
pub fn top_k_grouped(groups: &[ModeGroup], k: usize, budget: usize) -> Result<ProbabilitySpectrum> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if k > budget {
        return Err(Error::BudgetExceeded(format!(
            "k = {k} exceeds the enumeration budget {budget}"
        )));
    }
    let mut ln_ground = NeumaierSum::new();
    let mut filtered_bound = NeumaierSum::new();
    let mut kept: Vec<ModeGroup> = Vec::new();
    for g in groups {
        check_xi(g.xi)?;
        if g.multiplicity == 0 {
            continue;
        }
        ln_ground.add(g.multiplicity as f64 * (-g.xi).ln_1p());
        if g.xi < MODE_FILTER {
            filtered_bound.add(g.multiplicity as f64 * g.xi);
        } else {
            kept.push(*g);
        }
    }
    kept.sort_by(|a, b| b.xi.total_cmp(&a.xi));
    let modes = ExpandedModes::new(&kept);
    let ground = ln_ground.value().exp();

    let mut probs = Vec::with_capacity(k);
    let mut heap = BinaryHeap::new();
    heap.push(State {
        prob: ground,
        occupation: Vec::new(),
    });
    while let Some(state) = heap.pop() {
        if state.prob <= 0.0 {
            break;
        }
        probs.push(state.prob);
        if probs.len() == k {
            break;
        }
        for child in state.children(&modes) {
            let prob = ground
                * child
                    .iter()
                    .map(|&(i, c)| modes.xi(i).powi(c as i32))
                    .product::<f64>();
            heap.push(State {
                prob,
                occupation: child,
            });
        }
    }
    let mass = probs.iter().copied().sum::<NeumaierSum>().value();
    Ok(ProbabilitySpectrum {
        probs,
        mass,
        truncation_deficit: (1.0 - mass).max(0.0),
        filtered_bound: filtered_bound.value(),
    })
}

struct ExpandedModes {
    // cumulative multiplicities; mode index i belongs to the first group whose end exceeds i
    ends: Vec<u64>,
    xis: Vec<f64>,
}

impl ExpandedModes {
    fn new(groups: &[ModeGroup]) -> Self {
        let mut ends = Vec::with_capacity(groups.len());
        let mut total = 0u64;
        for g in groups {
            total += g.multiplicity;
            ends.push(total);
        }
        ExpandedModes {
            ends,
            xis: groups.iter().map(|g| g.xi).collect(),
        }
    }

    fn len(&self) -> u64 {
        self.ends.last().copied().unwrap_or(0)
    }

    fn xi(&self, index: u64) -> f64 {
        let g = self.ends.partition_point(|&e| e <= index);
        self.xis[g]
    }
}

/// Occupation vector as sorted `(mode index, count)` pairs.
#[derive(Debug, Clone)]
struct State {
    prob: f64,
    occupation: Vec<(u64, u32)>,
}

impl State {
    fn children(&self, modes: &ExpandedModes) -> Vec<Vec<(u64, u32)>> {
        let mut out = Vec::with_capacity(2);
        match self.occupation.last() {
            None => {
                if modes.len() > 0 {
                    out.push(vec![(0, 1)]);
                }
            }
            Some(&(j, c)) => {
                let mut extend = self.occupation.clone();
                extend.last_mut().unwrap().1 = c + 1;
                out.push(extend);
                if j + 1 < modes.len() {
                    let mut advance = self.occupation.clone();
                    if c == 1 {
                        advance.pop();
                    } else {
                        advance.last_mut().unwrap().1 = c - 1;
                    }
                    advance.push((j + 1, 1));
                    out.push(advance);
                }
            }
        }
        out
    }
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for State {}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on probability; equal probabilities pop in lexicographic
        // order of the dense occupation vector (larger low-index counts first).
        self.prob
            .total_cmp(&other.prob)
            .then_with(|| lexicographic(&self.occupation, &other.occupation))
    }
}

fn lexicographic(a: &[(u64, u32)], b: &[(u64, u32)]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.0.cmp(&y.0) {
            Ordering::Equal => {}
            // a has a nonzero entry at a lower index than b
            Ordering::Less => return Ordering::Greater,
            Ordering::Greater => return Ordering::Less,
        }
        match x.1.cmp(&y.1) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Outcome of a partial-sum majorization test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorizationReport {
    pub holds: bool,
    /// First prefix length `k` (1-based) where the relation fails.
    pub first_violation: Option<usize>,
    /// `Σ_{i≤k} p_i − Σ_{i≤k} q_i` for `k = 1..=k_max`.
    pub margins: Vec<f64>,
}

impl MajorizationReport {
    pub fn worst_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Checks whether `p` majorizes `q` on the first `k_max` partial sums.
/// Entries past the end of a spectrum count as zero.
pub fn majorizes(
    p: &ProbabilitySpectrum,
    q: &ProbabilitySpectrum,
    k_max: usize,
) -> MajorizationReport {
    let mut sp = NeumaierSum::new();
    let mut sq = NeumaierSum::new();
    let mut margins = Vec::with_capacity(k_max);
    let mut first_violation = None;
    for k in 0..k_max {
        sp.add(p.probs.get(k).copied().unwrap_or(0.0));
        sq.add(q.probs.get(k).copied().unwrap_or(0.0));
        let margin = sp.value() - sq.value();
        if first_violation.is_none() && margin < -MAJORIZATION_SLACK {
            first_violation = Some(k + 1);
        }
        margins.push(margin);
    }
    MajorizationReport {
        holds: first_violation.is_none(),
        first_violation,
        margins,
    }
}
