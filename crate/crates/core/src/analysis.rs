//! Sweeps, area-law fits, and the renormalization-group and majorization
//! reports built on top of [`total_entanglement_many`].

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::{
    total_entanglement_many, EntanglementConfig, EntanglementResult, ModeSource,
};
use crate::error::{Error, Result};
use crate::lattice::{Degeneracy, ModelParams};
use crate::perturbative::{perturbative_mode_with, EdgePolicy};
use crate::reduction::Partition;
use crate::spectrum::{
    majorizes, top_k_grouped, MajorizationReport, ModeGroup, ProbabilitySpectrum,
    DEFAULT_ENUMERATION_BUDGET, MODE_FILTER,
};
use crate::sum::NeumaierSum;

/// Least-squares line `value ≈ slope · R^exponent + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub exponent_used: f64,
}

/// Ordinary least squares of `value` against `R^exponent` with a free intercept.
pub fn fit_area_law(points: &[(f64, f64)], exponent: f64) -> Result<AreaLawFit> {
    if points.len() < 3 {
        return Err(Error::Domain(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if !(exponent.is_finite() && exponent > 0.0) {
        return Err(Error::Domain(format!(
            "exponent must be positive, got {exponent}"
        )));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.powf(exponent)).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let n = x.len() as f64;
    let mx = x.iter().copied().sum::<NeumaierSum>().value() / n;
    let my = y.iter().copied().sum::<NeumaierSum>().value() / n;
    let sxx = x
        .iter()
        .map(|a| (a - mx) * (a - mx))
        .sum::<NeumaierSum>()
        .value();
    let sxy = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<NeumaierSum>()
        .value();
    let syy = y
        .iter()
        .map(|b| (b - my) * (b - my))
        .sum::<NeumaierSum>()
        .value();
    if !(sxx > 1e-12 * x.iter().map(|a| a * a).sum::<f64>()) {
        return Err(Error::Domain(
            "degenerate abscissae: all R^exponent values coincide".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x
        .iter()
        .zip(&y)
        .map(|(a, b)| b - (slope * a + intercept))
        .collect();
    let ss_res = residuals.iter().map(|r| r * r).sum::<NeumaierSum>().value();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(AreaLawFit {
        slope,
        intercept,
        r_squared,
        residuals,
        exponent_used: exponent,
    })
}

/// Parameter varied by a [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Radius,
    Mass,
    Dimension,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::Radius => "radius",
            Axis::Mass => "mass",
            Axis::Dimension => "dimension",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "radius" => Ok(Axis::Radius),
            "mass" => Ok(Axis::Mass),
            "dimension" | "dim" => Ok(Axis::Dimension),
            other => Err(Error::Parse(format!("unknown axis `{other}`"))),
        }
    }
}

/// Which cuts to evaluate at each mass or dimension value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PartitionRule {
    /// The bulk window `n ∈ [N/12, N/2]`.
    Window,
    Fixed(Vec<usize>),
}

impl PartitionRule {
    pub fn traced_sites(&self, sites: usize) -> Vec<usize> {
        match self {
            PartitionRule::Window => default_window(sites),
            PartitionRule::Fixed(ns) => ns.clone(),
        }
    }
}

/// Default fit window `n ∈ [max(1, N/12), N/2]`.
pub fn default_window(sites: usize) -> Vec<usize> {
    let lo = (sites / 12).max(1);
    let hi = (sites / 2).max(lo).min(sites - 1);
    (lo..=hi).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub params: ModelParams,
    pub traced_sites: usize,
    pub radius: f64,
    pub result: EntanglementResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: Axis,
    /// Sorted by axis value, then by traced sites.
    pub points: Vec<SweepPoint>,
    pub params_base: ModelParams,
}

/// Area-law slopes of `S` and `E₁` at one axis value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopePair {
    pub axis_value: f64,
    pub entropy: AreaLawFit,
    pub single_copy: AreaLawFit,
}

impl SlopePair {
    /// `k_S / k_E`.
    pub fn ratio(&self) -> f64 {
        self.entropy.slope / self.single_copy.slope
    }
}

impl SweepResult {
    /// Fits `S` and `E₁` against `R^{D−1}` separately for every axis value.
    /// A radius sweep yields a single pair.
    pub fn slopes(&self) -> Result<Vec<SlopePair>> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.points.len() {
            let value = match self.axis {
                Axis::Radius => self.points[0].axis_value,
                _ => self.points[i].axis_value,
            };
            let group: Vec<&SweepPoint> = match self.axis {
                Axis::Radius => self.points.iter().collect(),
                _ => self.points[i..]
                    .iter()
                    .take_while(|p| p.axis_value == value)
                    .collect(),
            };
            i += group.len();
            let exponent = group[0].params.dim - 1.0;
            let s: Vec<(f64, f64)> = group.iter().map(|p| (p.radius, p.result.S)).collect();
            let e: Vec<(f64, f64)> = group.iter().map(|p| (p.radius, p.result.E1)).collect();
            out.push(SlopePair {
                axis_value: value,
                entropy: fit_area_law(&s, exponent)?,
                single_copy: fit_area_law(&e, exponent)?,
            });
        }
        Ok(out)
    }
}

fn strictly_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] < w[1])
}

/// Runs [`total_entanglement_many`] along one axis.
///
/// For [`Axis::Radius`] the values are the traced shell counts `n` and the
/// partition rule is ignored. For the other axes every value is evaluated
/// on all cuts of `rule`.
pub fn sweep(
    params_base: &ModelParams,
    axis: Axis,
    values: &[f64],
    rule: &PartitionRule,
    cfg: &EntanglementConfig,
    source: &dyn ModeSource,
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::Domain("sweep needs at least one value".into()));
    }
    if !strictly_increasing(values) {
        return Err(Error::Precondition(
            "sweep values must be strictly increasing".into(),
        ));
    }
    let annotate = |value: f64| {
        move |e: Error| Error::AtAxisValue {
            axis: axis.as_str(),
            value,
            source: Box::new(e),
        }
    };
    let points = match axis {
        Axis::Radius => {
            let mut parts = Vec::with_capacity(values.len());
            for &v in values {
                if v.fract() != 0.0 || v < 1.0 {
                    return Err(Error::Domain(format!(
                        "radius sweep values are shell counts, got {v}"
                    )));
                }
                parts.push(Partition::new(v as usize, params_base.sites).map_err(annotate(v))?);
            }
            let results = total_entanglement_many(params_base, &parts, cfg, source)?;
            parts
                .iter()
                .zip(results)
                .map(|(p, result)| SweepPoint {
                    axis_value: p.traced_sites() as f64,
                    params: *params_base,
                    traced_sites: p.traced_sites(),
                    radius: p.radius(params_base.spacing),
                    result,
                })
                .collect()
        }
        Axis::Mass | Axis::Dimension => {
            let ns = rule.traced_sites(params_base.sites);
            let groups: Vec<Vec<SweepPoint>> = values
                .par_iter()
                .map(|&v| {
                    let params = match axis {
                        Axis::Mass => params_base.with_mass(v),
                        _ => params_base.with_dim(v),
                    };
                    params.validate_summable().map_err(annotate(v))?;
                    let parts = ns
                        .iter()
                        .map(|&n| Partition::new(n, params.sites))
                        .collect::<Result<Vec<_>>>()
                        .map_err(annotate(v))?;
                    let results = total_entanglement_many(&params, &parts, cfg, source)
                        .map_err(annotate(v))?;
                    Ok(parts
                        .iter()
                        .zip(results)
                        .map(|(p, result)| SweepPoint {
                            axis_value: v,
                            params,
                            traced_sites: p.traced_sites(),
                            radius: p.radius(params.spacing),
                            result,
                        })
                        .collect())
                })
                .collect::<Result<_>>()?;
            let mut points: Vec<SweepPoint> = groups.into_iter().flatten().collect();
            points.sort_by(|a, b| {
                a.axis_value
                    .total_cmp(&b.axis_value)
                    .then(a.traced_sites.cmp(&b.traced_sites))
            });
            points
        }
    };
    Ok(SweepResult {
        axis,
        points,
        params_base: *params_base,
    })
}

/// Pass/fail verdict of one check with its tightest margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub passed: bool,
    /// Smallest margin seen; negative when the check failed.
    pub worst_margin: f64,
    pub detail: String,
}

/// Majorization of two cuts or two masses on a top-`k` prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Label of the spectrum expected to majorize (e.g. smaller radius).
    pub majorizing: String,
    pub majorized: String,
    pub report: MajorizationReport,
    /// Margins divided by the majorized spectrum's partial sums.
    pub relative_margins: Vec<f64>,
    /// Combined bound on the relative error of the checked partial sums
    /// caused by mode filtering.
    pub deficit_bound: f64,
}

impl Comparison {
    pub fn holds(&self) -> bool {
        self.report.holds
    }

    /// Whether every relative margin exceeds `deficit_bound`, so the
    /// verdict is insensitive to the filtered modes.
    pub fn robust(&self) -> bool {
        self.relative_margins
            .iter()
            .all(|&m| m >= 0.0 && m > self.deficit_bound)
    }

    /// Smallest relative margin; NaN when both partial sums underflow.
    pub fn worst_relative_margin(&self) -> f64 {
        self.relative_margins
            .iter()
            .copied()
            .fold(f64::INFINITY, |a, m| {
                if m.is_nan() || a.is_nan() {
                    f64::NAN
                } else {
                    a.min(m)
                }
            })
    }
}

/// Every partial wave's modes for one cut, grouped by degeneracy.
///
/// Partial waves below `l_switch` contribute their exact spectra; above it
/// the perturbative `ξ₁` is used until it falls below the product filter,
/// and the remaining tail only enters the ground-state weight and the
/// filtered bound.
pub fn mode_groups(
    params: &ModelParams,
    partition: Partition,
    l_switch: usize,
    source: &dyn ModeSource,
) -> Result<(Vec<ModeGroup>, f64)> {
    if params.dim.fract() != 0.0 {
        return Err(Error::Precondition(format!(
            "product spectra need integer multiplicities; D = {} is not an integer",
            params.dim
        )));
    }
    let nu = Degeneracy::new(params.dim)?;
    let exact: Vec<Vec<f64>> = (0..l_switch)
        .into_par_iter()
        .map(|l| {
            source
                .spectra(params, l, &[partition])
                .map(|mut v| v.remove(0))
        })
        .collect::<Result<_>>()?;
    let mut groups = Vec::new();
    for (l, xi) in exact.iter().enumerate() {
        let multiplicity = nu.eval(l).round() as u64;
        groups.extend(
            xi.iter()
                .filter(|&&x| x > 0.0)
                .map(|&xi| ModeGroup { xi, multiplicity }),
        );
    }
    let n = partition.traced_sites();
    let mut l = l_switch.max(1);
    let last = loop {
        let xi = perturbative_mode_with(params, l, n, EdgePolicy::Decoupled)?.xi;
        let multiplicity = nu.eval(l).round() as u64;
        groups.push(ModeGroup { xi, multiplicity });
        if xi < MODE_FILTER {
            break multiplicity as f64 * xi;
        }
        l += 1;
    };
    // Σ_{l' > l} ν ξ for terms decaying like l^{D−6}.
    let rest = last * l as f64 / (5.0 - params.dim);
    Ok((groups, rest))
}

/// Top-`k` product spectrum over all modes of one cut.
pub fn product_spectrum(
    params: &ModelParams,
    partition: Partition,
    l_switch: usize,
    k: usize,
    source: &dyn ModeSource,
) -> Result<ProbabilitySpectrum> {
    let (groups, rest) = mode_groups(params, partition, l_switch, source)?;
    let mut spectrum = top_k_grouped(&groups, k, DEFAULT_ENUMERATION_BUDGET)?;
    let scale = (-rest).exp();
    for p in &mut spectrum.probs {
        *p *= scale;
    }
    spectrum.mass *= scale;
    spectrum.truncation_deficit = 1.0 - spectrum.mass;
    spectrum.filtered_bound += rest;
    Ok(spectrum)
}

fn compare(
    majorizing: (String, &ProbabilitySpectrum),
    majorized: (String, &ProbabilitySpectrum),
    k_max: usize,
) -> Comparison {
    let report = majorizes(majorizing.1, majorized.1, k_max);
    let mut partial = 0.0;
    let relative_margins = report
        .margins
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            partial += majorized.1.probs.get(i).copied().unwrap_or(0.0);
            if partial > 0.0 {
                m / partial
            } else if m > 0.0 {
                f64::INFINITY
            } else {
                f64::NAN
            }
        })
        .collect();
    Comparison {
        majorizing: majorizing.0,
        majorized: majorized.0,
        report,
        relative_margins,
        deficit_bound: majorizing.1.filtered_bound + majorized.1.filtered_bound,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorizationSummary {
    pub params: ModelParams,
    pub k_max: usize,
    pub comparisons: Vec<Comparison>,
}

impl MajorizationSummary {
    pub fn all_hold(&self) -> bool {
        self.comparisons.iter().all(Comparison::holds)
    }

    pub fn all_robust(&self) -> bool {
        self.comparisons.iter().all(Comparison::robust)
    }
}

/// Checks `ρ(R′) ≺ ρ(R)` for every consecutive pair of cuts `R < R′`.
pub fn majorization_report(
    params: &ModelParams,
    partitions: &[Partition],
    k_max: usize,
    cfg: &EntanglementConfig,
    source: &dyn ModeSource,
) -> Result<MajorizationSummary> {
    if partitions
        .windows(2)
        .any(|w| w[0].traced_sites() > w[1].traced_sites())
    {
        return Err(Error::Precondition(
            "partitions must be sorted by traced sites".into(),
        ));
    }
    if k_max > DEFAULT_ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "k_max = {k_max}; lower it below {DEFAULT_ENUMERATION_BUDGET}"
        )));
    }
    let results = total_entanglement_many(params, partitions, cfg, source)?;
    let spectra: Vec<ProbabilitySpectrum> = partitions
        .par_iter()
        .zip(&results)
        .map(|(&p, r)| product_spectrum(params, p, r.l_switch, k_max, source))
        .collect::<Result<_>>()?;
    let comparisons = partitions
        .windows(2)
        .zip(spectra.windows(2))
        .map(|(p, s)| {
            compare(
                (format!("n={}", p[0].traced_sites()), &s[0]),
                (format!("n={}", p[1].traced_sites()), &s[1]),
                k_max,
            )
        })
        .collect();
    Ok(MajorizationSummary {
        params: *params,
        k_max,
        comparisons,
    })
}

/// Outcome of a mass flow from the massless (UV) point towards the IR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RgReport {
    pub masses: Vec<f64>,
    /// `k_S` at each mass over the default fit window.
    pub slopes: Vec<f64>,
    pub slopes_decrease: Check,
    /// `ξ_i(μ′) ≤ ξ_i(μ)` for every exactly computed mode of the cut.
    pub modewise: Check,
    /// Top-`k` product spectra: `ρ(μ) ≺ ρ(μ′)`.
    pub majorization: Option<Check>,
}

impl RgReport {
    pub fn passed(&self) -> bool {
        self.slopes_decrease.passed
            && self.modewise.passed
            && self.majorization.as_ref().is_none_or(|c| c.passed)
    }
}

/// Relative slack allowed in modewise `ξ` comparisons.
const MODEWISE_SLACK: f64 = 1e-9;

/// Absolute resolution of a reduced spectrum in units of `ε ξ₁`; smaller
/// entries are rounding noise of the β′ eigenvalues.
const RESOLUTION_ULPS: f64 = 64.0;

/// Entanglement loss along increasing mass.
///
/// The majorization check needs integer `D` and is skipped otherwise.
pub fn rg_report(
    params_base: &ModelParams,
    masses: &[f64],
    partition: Partition,
    k_max: usize,
    cfg: &EntanglementConfig,
    source: &dyn ModeSource,
) -> Result<RgReport> {
    if masses.len() < 2 {
        return Err(Error::Precondition("need at least two masses".into()));
    }
    if !strictly_increasing(masses) {
        return Err(Error::Precondition(
            "masses must be strictly increasing".into(),
        ));
    }
    let sweep = sweep(
        params_base,
        Axis::Mass,
        masses,
        &PartitionRule::Window,
        cfg,
        source,
    )?;
    let slopes: Vec<f64> = sweep.slopes()?.iter().map(|p| p.entropy.slope).collect();
    let slope_margin = slopes
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::INFINITY, f64::min);
    let slopes_decrease = Check {
        passed: slope_margin > 0.0,
        worst_margin: slope_margin,
        detail: format!("k_S = {slopes:?}"),
    };

    let cut = [partition];
    let per_mass: Vec<(ModelParams, EntanglementResult)> = masses
        .iter()
        .map(|&m| {
            let p = params_base.with_mass(m);
            let mut r = total_entanglement_many(&p, &cut, cfg, source)?;
            Ok((p, r.remove(0)))
        })
        .collect::<Result<_>>()?;

    let mut worst = f64::INFINITY;
    let mut worst_at = String::new();
    let mut modes = 0usize;
    let mut unresolved = 0usize;
    for pair in per_mass.windows(2) {
        let (light, light_res) = &pair[0];
        let (heavy, _) = &pair[1];
        let l_max = light_res.l_switch;
        let spectra: Vec<(Vec<f64>, Vec<f64>)> = (0..l_max)
            .into_par_iter()
            .map(|l| {
                let a = source.spectra(light, l, &cut)?.remove(0);
                let b = source.spectra(heavy, l, &cut)?.remove(0);
                Ok((a, b))
            })
            .collect::<Result<_>>()?;
        for (l, (a, b)) in spectra.iter().enumerate() {
            let floor = RESOLUTION_ULPS
                * f64::EPSILON
                * a.first()
                    .copied()
                    .unwrap_or(0.0)
                    .max(b.first().copied().unwrap_or(0.0));
            for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
                if x.max(y) <= floor {
                    unresolved += 1;
                    continue;
                }
                modes += 1;
                // Margin relative to the lighter mode's ξ.
                let margin = (x - y + floor) / x.max(floor);
                if margin < worst {
                    worst = margin;
                    worst_at = format!("μ = {} → {}, l = {l}, i = {i}", light.mass, heavy.mass);
                }
            }
        }
    }
    let modewise = Check {
        passed: worst >= -MODEWISE_SLACK,
        worst_margin: worst,
        detail: format!(
            "{modes} modes compared, {unresolved} below resolution; tightest at {worst_at}"
        ),
    };

    let majorization = if params_base.dim.fract() == 0.0 {
        let spectra: Vec<ProbabilitySpectrum> = per_mass
            .par_iter()
            .map(|(p, r)| product_spectrum(p, partition, r.l_switch, k_max, source))
            .collect::<Result<_>>()?;
        let mut worst = f64::INFINITY;
        let mut passed = true;
        for (w, m) in spectra.windows(2).zip(masses.windows(2)) {
            let c = compare(
                (format!("μ={}", m[1]), &w[1]),
                (format!("μ={}", m[0]), &w[0]),
                k_max,
            );
            passed &= c.holds();
            worst = worst.min(c.report.worst_margin());
        }
        Some(Check {
            passed,
            worst_margin: worst,
            detail: format!("top-{k_max} partial sums"),
        })
    } else {
        None
    };

    Ok(RgReport {
        masses: masses.to_vec(),
        slopes,
        slopes_decrease,
        modewise,
        majorization,
    })
}
