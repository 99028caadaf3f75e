//! Large angular momentum: perturbative `ξ` and the tail of the sum over `l`.
//!
//! For `l ≫ N` the couplings of `K` are small next to its diagonal, and
//! `Ω = √K` can be expanded in them. With `Ω_j = √K_jj` and
//! `ε_j = K_{j,j+1} / (Ω_j + Ω_{j+1})`, the dominant eigenvalue of the
//! reduced `β'` is
//!
//! ```text
//! v₁ = a_n + c_n + d_n²/a_n + …,   a_n = ε_n² / (2 Ω_n Ω_{n+1}),
//! ```
//!
//! and every other mode is suppressed by further powers of the couplings.
//! The second-order part `c_n + d_n²/a_n` is evaluated here from the
//! leading diagonal element `μ` of `½ A⁻¹ B C⁻¹ Bᵀ`, which gives
//! `v₁ = μ + μ²` to this order; see [`PerturbativeMode`].
//!
//! The resulting `ξ(l)` decays as `l⁻⁴`, so the `l`-sum converges only for
//! `D < 5`. Two tail evaluators are provided: direct compensated summation
//! and a zeta-function resummation of a fitted `1/l` series.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::entanglement::{mode_entropy, mode_single_copy};
use crate::error::{Error, Result};
use crate::lattice::{Degeneracy, ModelParams};
use crate::sum::NeumaierSum;
use crate::zeta::{bernoulli_numbers, gamma_ratio_series, riemann_zeta, riemann_zeta_prime};

/// Largest supported subleading order of the tail series.
pub const MAX_FIT_DEGREE: usize = 5;

/// Default cap on the number of terms [`tail_direct`] may add.
pub const DEFAULT_TERM_BUDGET: usize = 20_000_000;

/// Condition number beyond which a tail fit is rejected.
pub const FIT_CONDITION_LIMIT: f64 = 1e12;

/// Closed-form perturbative data of the cut between shells `n` and `n + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeMode {
    /// `Ω_j` for `j = n−1 ..= n+2` (entries outside the chain are NaN).
    pub omega_site: [f64; 4],
    /// `ε_j` for `j = n−1 ..= n+1` (zero where the chain has no link).
    pub epsilon_site: [f64; 3],
    pub a_n: f64,
    pub c_n: f64,
    pub d_n: f64,
    pub e_n: f64,
    /// `v₁ = a_n + c_n + d_n²/a_n`.
    pub v1: f64,
    pub xi: f64,
}

/// What to do when the cut sits next to the outer edge (`n + 2 > N`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgePolicy {
    Reject,
    /// Treat the missing shell `N + 1` as decoupled (`ε_N = 0`), which is
    /// what the pinned outer boundary implies.
    Decoupled,
}

/// Perturbative `ξ₁` for partial wave `l` and traced ball of `n` shells.
pub fn perturbative_xi(params: &ModelParams, l: usize, n: usize) -> Result<f64> {
    perturbative_mode(params, l, n).map(|m| m.xi)
}

pub fn perturbative_mode(params: &ModelParams, l: usize, n: usize) -> Result<PerturbativeMode> {
    perturbative_mode_with(params, l, n, EdgePolicy::Reject)
}

pub fn perturbative_mode_with(
    params: &ModelParams,
    l: usize,
    n: usize,
    edge: EdgePolicy,
) -> Result<PerturbativeMode> {
    params.validate()?;
    let sites = params.sites;
    if n == 0 || n >= sites {
        return Err(Error::Domain(format!(
            "traced sites must satisfy 1 <= n <= N-1 (n = {n}, N = {sites})"
        )));
    }
    if n + 2 > sites && edge == EdgePolicy::Reject {
        return Err(Error::PerturbativeEdge { traced: n, sites });
    }
    let omega = |j: usize| {
        if j >= 1 && j <= sites {
            params.diagonal(l, j).sqrt()
        } else {
            f64::NAN
        }
    };
    let eps = |j: usize| {
        if j >= 1 && j < sites {
            params.coupling(j) / (omega(j) + omega(j + 1))
        } else {
            0.0
        }
    };
    let omega_site = [
        omega(n.wrapping_sub(1)),
        omega(n),
        omega(n + 1),
        omega(n + 2),
    ];
    let epsilon_site = [eps(n.wrapping_sub(1)), eps(n), eps(n + 1)];
    let v1_parts = second_order(omega_site, epsilon_site);
    Ok(finish(omega_site, epsilon_site, v1_parts))
}

/// Overrides the coupling across the cut; with `0` the two sides decouple.
#[doc(hidden)]
pub fn perturbative_mode_with_cut(
    params: &ModelParams,
    l: usize,
    n: usize,
    cut: f64,
) -> Result<PerturbativeMode> {
    let mut m = perturbative_mode(params, l, n)?;
    m.epsilon_site[1] = cut / (m.omega_site[1] + m.omega_site[2]);
    let parts = second_order(m.omega_site, m.epsilon_site);
    Ok(finish(m.omega_site, m.epsilon_site, parts))
}

/// Returns `(a, v₁)`.
fn second_order(o: [f64; 4], e: [f64; 3]) -> (f64, f64) {
    let [e_pm, e_p, e_q] = e;
    let (o_p, o_q) = (o[1], o[2]);
    // Absent neighbours only ever appear multiplied by their zero coupling.
    let o_pm = if e_pm == 0.0 { 1.0 } else { o[0] };
    let o_q1 = if e_q == 0.0 { 1.0 } else { o[3] };
    let a = e_p * e_p / (2.0 * o_p * o_q);
    if a == 0.0 {
        return (0.0, 0.0);
    }
    let (ep2, epm2, eq2) = (e_p * e_p, e_pm * e_pm, e_q * e_q);

    // Second-order corrections of Ω.
    let w_pp = -(epm2 + ep2) / (2.0 * o_p);
    let w_qq = -(ep2 + eq2) / (2.0 * o_q);
    let w_pm_q = -e_pm * e_p / (o_pm + o_q);
    let w_p_q1 = -e_p * e_q / (o_p + o_q1);
    // Third-order correction of the link Ω_{n,n+1}.
    let w3 = -(e_p * (w_pp + w_qq) + e_pm * w_pm_q + e_q * w_p_q1) / (o_p + o_q);

    // (C⁻¹)_{qq} and (A⁻¹)_{pp} through second order.
    let c_inv_qq = 1.0 / o_q - w_qq / (o_q * o_q) + eq2 / (o_q * o_q * o_q1);
    let a_inv_pp = 1.0 / o_p - w_pp / (o_p * o_p) + epm2 / (o_p * o_p * o_pm);

    // (B C⁻¹ Bᵀ)_{pp} through fourth order.
    let h_pp = (ep2 + 2.0 * e_p * w3) / o_q
        + ep2 * (c_inv_qq - 1.0 / o_q)
        + 2.0 * ep2 * eq2 / ((o_p + o_q1) * o_q * o_q1)
        + ep2 * eq2 / ((o_p + o_q1).powi(2) * o_q1);
    let g_pp = 0.5 * a_inv_pp * h_pp + 0.5 * epm2 * ep2 / (o_p * o_pm * o_q * (o_pm + o_q));
    // Coupling to the next inner direction, second-order eigenvalue shift.
    let shift = 0.5 * epm2 * ep2 / (o_pm * o_q * (o_pm + o_q)) * (1.0 / (o_pm + o_q) + 1.0 / o_p);
    let mu = g_pp + shift;
    (a, mu + mu * mu)
}

fn finish(o: [f64; 4], e: [f64; 3], (a, v1): (f64, f64)) -> PerturbativeMode {
    let (o_p, o_q, o_q1) = (o[1], o[2], o[3]);
    let e_q = e[2];
    let d = if a == 0.0 || e_q == 0.0 {
        0.0
    } else {
        a * (o_q / o_q1).sqrt() * e_q * (1.0 / (o_q - o_q1) + 1.0 / (o_p + o_q1))
    };
    let e_n = if a == 0.0 { 0.0 } else { d * d / a };
    let c = v1 - a - e_n;
    let xi = if v1 > 0.0 && v1 < 1.0 {
        v1 / (1.0 + (1.0 - v1 * v1).sqrt())
    } else {
        v1
    };
    PerturbativeMode {
        omega_site: o,
        epsilon_site: e,
        a_n: a,
        c_n: c,
        d_n: d,
        e_n,
        v1,
        xi,
    }
}

fn checked_xi(params: &ModelParams, l: usize, n: usize, edge: EdgePolicy) -> Result<f64> {
    let m = perturbative_mode_with(params, l, n, edge)?;
    if !(0.0..1.0).contains(&m.v1) {
        return Err(Error::Unnormalizable(format!(
            "perturbative v₁ = {} at l = {l}; l is too small",
            m.v1
        )));
    }
    Ok(m.xi)
}

/// Contribution `(ν S(ξ), ν E₁(ξ))` of partial wave `l` from the perturbative `ξ₁`.
pub fn tail_term(params: &ModelParams, l: usize, n: usize, edge: EdgePolicy) -> Result<(f64, f64)> {
    weighted_term(params, &Degeneracy::new(params.dim)?, l, n, edge)
}

fn weighted_term(
    params: &ModelParams,
    nu: &Degeneracy,
    l: usize,
    n: usize,
    edge: EdgePolicy,
) -> Result<(f64, f64)> {
    let xi = checked_xi(params, l, n, edge)?;
    let nu = nu.eval(l);
    Ok((nu * mode_entropy(xi)?, nu * mode_single_copy(xi)?))
}

/// Sum of the tail over `l = l_start ..` together with bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSum {
    pub delta_s: f64,
    pub delta_e1: f64,
    /// Terms actually added.
    pub terms: usize,
    /// Portion of `delta_s` / `delta_e1` estimated by the integral remainder.
    pub remainder_s: f64,
    pub remainder_e1: f64,
}

/// Direct tail `Σ_{l ≥ l_start} ν(l, D) S_l` (and the same for `E₁`).
///
/// Terms are added in ascending `l` until both the entropy and single-copy
/// terms fall below `rel_tol` times their running sums; the remaining
/// power-law tail is then estimated by its integral using the locally
/// measured decay exponent.
pub fn tail_direct(
    params: &ModelParams,
    n: usize,
    l_start: usize,
    rel_tol: f64,
) -> Result<TailSum> {
    tail_direct_with(
        params,
        n,
        l_start,
        rel_tol,
        DEFAULT_TERM_BUDGET,
        EdgePolicy::Reject,
    )
}

pub fn tail_direct_with(
    params: &ModelParams,
    n: usize,
    l_start: usize,
    rel_tol: f64,
    budget: usize,
    edge: EdgePolicy,
) -> Result<TailSum> {
    params.validate_summable()?;
    if !(rel_tol > 0.0) {
        return Err(Error::Domain(format!(
            "rel_tol must be positive, got {rel_tol}"
        )));
    }
    let l_start = l_start.max(1);
    let nu = Degeneracy::new(params.dim)?;
    let mut s = NeumaierSum::new();
    let mut e = NeumaierSum::new();
    let mut l = l_start;
    let mut terms = 0usize;
    loop {
        let (ts, te) = weighted_term(params, &nu, l, n, edge)?;
        s.add(ts);
        e.add(te);
        terms += 1;
        let done_s = ts <= rel_tol * s.value();
        let done_e = te <= rel_tol * e.value();
        if terms > 1 && done_s && done_e {
            break;
        }
        if terms >= budget {
            return Err(Error::NoConvergence(format!(
                "direct tail did not reach rel_tol = {rel_tol:e} within {budget} terms (l = {l})"
            )));
        }
        l += 1;
    }
    let (rs, re) = if l >= 2 * l_start.max(2) {
        let (ts, te) = weighted_term(params, &nu, l, n, edge)?;
        let (hs, he) = weighted_term(params, &nu, l / 2, n, edge)?;
        (
            integral_remainder(ts, hs, l, params.dim),
            integral_remainder(te, he, l, params.dim),
        )
    } else {
        (0.0, 0.0)
    };
    s.add(rs);
    e.add(re);
    Ok(TailSum {
        delta_s: s.value(),
        delta_e1: e.value(),
        terms,
        remainder_s: rs,
        remainder_e1: re,
    })
}

/// `Σ_{m > l} f(m)` for `f ∝ m^{-p}`, with `p` measured from `f(l)` and `f(l/2)`.
/// `∫_{l+½}^∞` of `x^{-q} (A + B ln x)` with `q = 6 − D`, the large-`l` form
/// of the tail terms (`ξ ∝ l⁻⁴`, `ν ∝ l^{D−2}`, and `S(ξ) ≈ ξ (1 − ln ξ)`),
/// matched to the terms at `l` and `l/2`.
fn integral_remainder(f_l: f64, f_half: f64, l: usize, dim: f64) -> f64 {
    if f_l <= 0.0 || f_half <= 0.0 {
        return 0.0;
    }
    let q = 6.0 - dim;
    let (lf, hf) = (l as f64, (l / 2) as f64);
    let (g_l, g_h) = (f_l * lf.powf(q), f_half * hf.powf(q));
    let b = (g_l - g_h) / (lf / hf).ln();
    let a = g_l - b * lf.ln();
    let x = lf + 0.5;
    let rest = x.powf(1.0 - q) * ((a + b * x.ln()) / (q - 1.0) + b / ((q - 1.0) * (q - 1.0)));
    rest.max(0.0)
}

/// Partial tail `Σ_{l = l_start}^{l_end}` of perturbative contributions.
pub fn tail_range(
    params: &ModelParams,
    n: usize,
    l_start: usize,
    l_end: usize,
) -> Result<(f64, f64)> {
    tail_range_with(params, n, l_start, l_end, EdgePolicy::Reject)
}

pub fn tail_range_with(
    params: &ModelParams,
    n: usize,
    l_start: usize,
    l_end: usize,
    edge: EdgePolicy,
) -> Result<(f64, f64)> {
    let nu = Degeneracy::new(params.dim)?;
    let mut s = NeumaierSum::new();
    let mut e = NeumaierSum::new();
    for l in l_start..=l_end {
        let (ts, te) = weighted_term(params, &nu, l, n, edge)?;
        s.add(ts);
        e.add(te);
    }
    Ok((s.value(), e.value()))
}

/// How a tail was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum TailMethod {
    #[default]
    DirectSum,
    ZetaAccelerated,
}

/// Fitted large-`l` expansion `ξ(l) l⁴ = Σ_k c_k l^{-k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSeries {
    pub xi_coeffs: Vec<f64>,
    pub l_start: usize,
    pub method: TailMethod,
    pub condition: f64,
}

/// Least-squares fit of `ξ l⁴` to a polynomial of the given degree in `1/l`.
///
/// The abscissa is rescaled to `l_min / l ∈ (0, 1]` before fitting so the
/// design matrix stays well conditioned; returned coefficients are in the
/// natural `1/l` basis.
pub fn fit_xi_series(samples: &[(f64, f64)], degree: usize) -> Result<(Vec<f64>, f64)> {
    if degree > MAX_FIT_DEGREE {
        return Err(Error::Domain(format!(
            "fit degree must be <= {MAX_FIT_DEGREE}, got {degree}"
        )));
    }
    if samples.len() <= degree {
        return Err(Error::Domain(format!(
            "need more than {degree} samples, got {}",
            samples.len()
        )));
    }
    let l_min = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    if !(l_min > 0.0) {
        return Err(Error::Domain("sample l values must be positive".into()));
    }
    let cols = degree + 1;
    let design = DMatrix::from_fn(samples.len(), cols, |i, k| {
        (l_min / samples[i].0).powi(k as i32)
    });
    let rhs = DVector::from_iterator(samples.len(), samples.iter().map(|&(l, xi)| xi * l.powi(4)));
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if !(condition < FIT_CONDITION_LIMIT) {
        return Err(Error::IllConditioned { condition });
    }
    let scaled = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Domain(e.to_string()))?;
    let coeffs = scaled
        .iter()
        .enumerate()
        .map(|(k, c)| c * l_min.powi(k as i32))
        .collect();
    Ok((coeffs, condition))
}

/// Fits the perturbative `ξ(l) l⁴` on a geometric grid of `l ≥ l0`.
pub fn fit_tail_series(
    params: &ModelParams,
    n: usize,
    l0: usize,
    fit_degree: usize,
    edge: EdgePolicy,
) -> Result<TailSeries> {
    const SAMPLES: usize = 40;
    const SPAN: f64 = 64.0;
    let l0 = l0.max(1);
    let mut ls: Vec<usize> = (0..SAMPLES)
        .map(|i| (l0 as f64 * SPAN.powf(i as f64 / (SAMPLES - 1) as f64)).round() as usize)
        .collect();
    ls.dedup();
    let samples = ls
        .iter()
        .map(|&l| checked_xi(params, l, n, edge).map(|xi| (l as f64, xi)))
        .collect::<Result<Vec<_>>>()?;
    let (xi_coeffs, condition) = fit_xi_series(&samples, fit_degree)?;
    if !(xi_coeffs[0] > 0.0) {
        return Err(Error::IllConditioned { condition });
    }
    Ok(TailSeries {
        xi_coeffs,
        l_start: l0,
        method: TailMethod::ZetaAccelerated,
        condition,
    })
}

/// Zeta-resummed tail `Σ_{l ≥ l0}` of entropy and single-copy entanglement.
///
/// With `x = 1/l` and the fitted `ξ = x⁴ P(x)`, each partial wave
/// contributes `ν S = Σ_j (σ_j + τ_j ln l) l^{-(6-D+j)}` and
/// `ν E₁ = Σ_j Λ_j l^{-(6-D+j)}`, truncated after five subleading orders.
/// The sums over `l ≥ l0` are `ζ(s) − Σ_{l<l0} l^{-s}` and
/// `−ζ'(s) − Σ_{l<l0} ln l · l^{-s}`.
pub fn tail_zeta(params: &ModelParams, n: usize, l0: usize, fit_degree: usize) -> Result<TailSum> {
    tail_zeta_with(params, n, l0, fit_degree, EdgePolicy::Reject).map(|(t, _)| t)
}

pub fn tail_zeta_with(
    params: &ModelParams,
    n: usize,
    l0: usize,
    fit_degree: usize,
    edge: EdgePolicy,
) -> Result<(TailSum, TailSeries)> {
    params.validate_summable()?;
    let series = fit_tail_series(params, n, l0, fit_degree, edge)?;
    let coeffs = TailCoefficients::new(&series.xi_coeffs, params.dim);
    let l0 = series.l_start;
    let mut s = NeumaierSum::new();
    let mut e = NeumaierSum::new();
    for j in 0..=MAX_FIT_DEGREE {
        let exponent = 6.0 - params.dim + j as f64;
        let plain = power_tail(exponent, l0)?;
        s.add(coeffs.sigma[j] * plain);
        s.add(coeffs.tau[j] * log_power_tail(exponent, l0)?);
        e.add(coeffs.lambda[j] * plain);
    }
    let tail = TailSum {
        delta_s: s.value(),
        delta_e1: e.value(),
        terms: 0,
        remainder_s: 0.0,
        remainder_e1: 0.0,
    };
    Ok((tail, series))
}

/// Per-`l` expansion coefficients of `ν S` and `ν E₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCoefficients {
    /// Non-logarithmic entropy coefficients.
    pub sigma: Vec<f64>,
    /// Coefficients of `ln l` in the entropy.
    pub tau: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `ν(l, D) = l^{D-2} Σ_k nu_k l^{-k}`.
    pub nu: Vec<f64>,
}

impl TailCoefficients {
    pub fn new(xi_coeffs: &[f64], dim: f64) -> Self {
        const LEN: usize = MAX_FIT_DEGREE + 1;
        // P(x) padded to LEN terms; ξ = x⁴ P.
        let mut p = vec![0.0; LEN];
        for (dst, &c) in p.iter_mut().zip(xi_coeffs) {
            *dst = c;
        }
        // ξ² = x⁸ P², i.e. shifted by 4 relative to the x⁴ factor.
        let p2 = series_mul(&p, &p);
        let mut xi_sum = p.clone(); // (ξ + ξ²)/x⁴
        let mut kappa = p.clone(); // (ξ + ξ²/2)/x⁴
        for k in 4..LEN {
            xi_sum[k] += p2[k - 4];
            kappa[k] += 0.5 * p2[k - 4];
        }
        let ln_p = series_ln(&p);
        let ln_p_xi = series_mul(&ln_p, &xi_sum);
        let s_tilde: Vec<f64> = (0..LEN).map(|k| kappa[k] - ln_p_xi[k]).collect();
        let t_tilde: Vec<f64> = xi_sum.iter().map(|v| 4.0 * v).collect();
        let nu = degeneracy_series(dim, LEN);
        TailCoefficients {
            sigma: series_mul(&nu, &s_tilde),
            tau: series_mul(&nu, &t_tilde),
            lambda: series_mul(&nu, &kappa),
            nu,
        }
    }
}

fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..n)
        .map(|k| (0..=k).map(|i| a[i] * b[k - i]).sum())
        .collect()
}

/// `ln` of a power series with positive constant term.
fn series_ln(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut out = vec![0.0; n];
    out[0] = p[0].ln();
    // q = p/p0, (ln q)' = q'/q  =>  k q_0 L_k = k q_k − Σ_{i=1}^{k-1} i L_i q_{k-i}
    let q: Vec<f64> = p.iter().map(|c| c / p[0]).collect();
    for k in 1..n {
        let mut acc = k as f64 * q[k];
        for i in 1..k {
            acc -= i as f64 * out[i] * q[k - i];
        }
        out[k] = acc / k as f64;
    }
    out
}

fn series_exp(g: &[f64]) -> Vec<f64> {
    // g[0] must be 0; E' = g' E  =>  k E_k = Σ_{i=1}^{k} i g_i E_{k-i}
    let n = g.len();
    let mut out = vec![0.0; n];
    out[0] = 1.0;
    for k in 1..n {
        let acc: f64 = (1..=k).map(|i| i as f64 * g[i] * out[k - i]).sum();
        out[k] = acc / k as f64;
    }
    out
}

/// Coefficients `ν_k(D)` of `ν(l, D) = l^{D-2} Σ_k ν_k l^{-k}`.
///
/// From `ν = (2l + D − 2) Γ(l + D − 2) / (Γ(l + 1) Γ(D − 1))` and the
/// Stirling series of the Gamma ratio, whose coefficients are differences
/// of Bernoulli polynomials.
pub fn degeneracy_series(dim: f64, len: usize) -> Vec<f64> {
    let g = gamma_ratio_series(dim - 2.0, 1.0, len);
    let ratio = series_exp(&g);
    let prefactor = [2.0, dim - 2.0];
    let scale = 1.0 / statrs::function::gamma::gamma(dim - 1.0);
    series_mul(&pad(&prefactor, len), &ratio)
        .into_iter()
        .map(|c| c * scale)
        .collect()
}

fn pad(a: &[f64], len: usize) -> Vec<f64> {
    let mut v = a.to_vec();
    v.resize(len, 0.0);
    v
}

/// Smallest tail-to-total ratio for which the subtraction form is trusted;
/// below it the remainder is summed directly.
const CANCELLATION_LIMIT: f64 = 1e-4;

/// `Σ_{l ≥ l0} l^{-s} = ζ(s) − Σ_{l < l0} l^{-s}`.
pub fn power_tail(s: f64, l0: usize) -> Result<f64> {
    let zeta = riemann_zeta(s)?;
    let head: f64 = (1..l0.max(1))
        .map(|l| (l as f64).powf(-s))
        .sum::<NeumaierSum>()
        .value();
    let tail = zeta - head;
    if tail > CANCELLATION_LIMIT * zeta {
        Ok(tail)
    } else {
        Ok(euler_maclaurin_tail(s, l0.max(1), false))
    }
}

/// `Σ_{l ≥ l0} ln l · l^{-s} = −ζ'(s) − Σ_{l < l0} ln l · l^{-s}`.
pub fn log_power_tail(s: f64, l0: usize) -> Result<f64> {
    let dz = -riemann_zeta_prime(s)?;
    let head: f64 = (2..l0.max(1))
        .map(|l| (l as f64).ln() * (l as f64).powf(-s))
        .sum::<NeumaierSum>()
        .value();
    let tail = dz - head;
    if tail > CANCELLATION_LIMIT * dz {
        Ok(tail)
    } else {
        Ok(euler_maclaurin_tail(s, l0.max(1), true))
    }
}

/// Euler–Maclaurin remainder `Σ_{l ≥ l0} f(l)` for `f = l^{-s}` or
/// `f = ln l · l^{-s}`, used when the subtraction form has cancelled.
fn euler_maclaurin_tail(s: f64, l0: usize, with_log: bool) -> f64 {
    let numbers = bernoulli_numbers(16);
    // Start far enough out that the asymptotic series is accurate.
    let start = l0.max(16);
    let mut acc = NeumaierSum::new();
    for l in l0..start {
        let lf = l as f64;
        acc.add(if with_log {
            lf.ln() * lf.powf(-s)
        } else {
            lf.powf(-s)
        });
    }
    let x = start as f64;
    let lnx = x.ln();
    let xs = x.powf(1.0 - s);
    if with_log {
        acc.add(xs * (lnx / (s - 1.0) + 1.0 / ((s - 1.0) * (s - 1.0))));
        acc.add(0.5 * lnx * x.powf(-s));
    } else {
        acc.add(xs / (s - 1.0));
        acc.add(0.5 * x.powf(-s));
    }
    // − Σ_j B_{2j}/(2j)! f^{(2j−1)}(x); d^k/dx^k x^{-s} = (−1)^k (s)_k x^{-s-k}
    let mut factorial = 1.0;
    for j in 1..=7 {
        let k = 2 * j - 1;
        factorial *= (2 * j - 1) as f64 * (2 * j) as f64;
        let mut rising = 1.0;
        let mut log_deriv = 0.0;
        for i in 0..k {
            rising *= s + i as f64;
            log_deriv += 1.0 / (s + i as f64);
        }
        let base = -rising * x.powf(-s - k as f64); // (−1)^k with k odd
        let deriv = if with_log {
            base * (lnx - log_deriv)
        } else {
            base
        };
        acc.add(-numbers[2 * j] / factorial * deriv);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{degeneracy, Boundary};
    use crate::reduction::{reduce_mode, ModeOmega, Partition};
    use approx::assert_relative_eq;

    fn exact_xi1(p: &ModelParams, l: usize, n: usize) -> f64 {
        let mode = ModeOmega::new(p, l).unwrap();
        reduce_mode(&mode, Partition::new(n, p.sites).unwrap())
            .unwrap()
            .largest()
    }

    #[test]
    fn ratio_of_doubling_approaches_one_sixteenth() {
        let p = ModelParams::new(3.0, 0.0, 10);
        let l = 100_000;
        let r = perturbative_xi(&p, 2 * l, 5).unwrap() / perturbative_xi(&p, l, 5).unwrap();
        assert!((r * 16.0 - 1.0).abs() < 0.01, "{r}");
        let scaled: Vec<f64> = [1e4f64, 1e5, 1e6]
            .iter()
            .map(|&l| perturbative_xi(&p, l as usize, 5).unwrap() * l.powi(4))
            .collect();
        assert!((scaled[1] / scaled[2] - 1.0).abs() < 1e-3);
        assert!(scaled[2] > 0.0);
    }

    #[test]
    fn agrees_with_exact_pipeline() {
        let p = ModelParams::new(3.0, 0.0, 10);
        let exact = exact_xi1(&p, 10_000, 5);
        let pert = perturbative_xi(&p, 10_000, 5).unwrap();
        assert!(((pert - exact) / exact).abs() <= 1e-4);
    }

    #[test]
    fn second_order_beats_leading_order() {
        let p = ModelParams::new(3.0, 0.0, 40);
        for &(l, n) in &[(200usize, 10usize), (400, 20), (100, 3)] {
            let exact = exact_xi1(&p, l, n);
            let m = perturbative_mode(&p, l, n).unwrap();
            let lead = m.a_n / (1.0 + (1.0 - m.a_n * m.a_n).sqrt());
            let err2 = ((m.xi - exact) / exact).abs();
            let err0 = ((lead - exact) / exact).abs();
            assert!(err2 < err0 / 10.0, "l={l} n={n}: {err2:e} vs {err0:e}");
        }
    }

    #[test]
    fn decomposition_is_consistent() {
        let p = ModelParams::new(2.5, 0.3, 12);
        let m = perturbative_mode(&p, 500, 6).unwrap();
        assert_relative_eq!(
            m.v1,
            m.a_n + m.c_n + m.d_n * m.d_n / m.a_n,
            max_relative = 1e-14
        );
        assert_relative_eq!(m.e_n, m.d_n * m.d_n / m.a_n, max_relative = 1e-14);
        assert!(m.a_n > 0.0 && (0.0..1.0).contains(&m.xi));
        // c_n and d_n²/a_n are both relative corrections of order ε²/Ω²
        assert!(m.c_n.abs() < 1e-3 * m.a_n);
    }

    #[test]
    fn decoupled_cut_gives_zero() {
        let p = ModelParams::new(3.0, 0.0, 10);
        let m = perturbative_mode_with_cut(&p, 1000, 5, 0.0).unwrap();
        assert_eq!(m.xi, 0.0);
        assert_eq!(m.a_n, 0.0);
        assert_eq!(m.d_n, 0.0);
    }

    #[test]
    fn outer_edge_needs_exact_path() {
        let p = ModelParams::new(3.0, 0.0, 10);
        assert!(matches!(
            perturbative_xi(&p, 1000, 9),
            Err(Error::PerturbativeEdge { .. })
        ));
        assert!(perturbative_xi(&p, 1000, 8).is_ok());
        let edge = perturbative_mode_with(&p, 4000, 9, EdgePolicy::Decoupled).unwrap();
        let exact = exact_xi1(&p, 4000, 9);
        assert!(((edge.xi - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn boundary_convention_only_touches_last_shell() {
        let d = ModelParams::new(3.0, 0.0, 10);
        let f = d.with_boundary(Boundary::FreePrinted);
        assert_eq!(
            perturbative_xi(&d, 2000, 3).unwrap(),
            perturbative_xi(&f, 2000, 3).unwrap()
        );
    }

    #[test]
    fn divergent_dimension_rejected() {
        for &dim in &[5.0, 5.5] {
            let p = ModelParams::new(dim, 0.0, 10);
            assert!(matches!(
                tail_direct(&p, 5, 1000, 1e-10),
                Err(Error::Divergent { .. })
            ));
            assert!(matches!(
                tail_zeta(&p, 5, 1000, 5),
                Err(Error::Divergent { .. })
            ));
        }
    }

    #[test]
    fn exact_polynomial_fit() {
        let samples: Vec<(f64, f64)> = (0..30)
            .map(|i| {
                let l = 100.0 * 1.2f64.powi(i);
                (l, (1.0 + 2.0 / l) / l.powi(4))
            })
            .collect();
        let (c, cond) = fit_xi_series(&samples, 5).unwrap();
        assert!(cond < 1e8);
        assert!((c[0] - 1.0).abs() < 1e-10 && (c[1] - 2.0).abs() < 1e-10);
        assert!(fit_xi_series(&samples, 6).is_err());
    }

    #[test]
    fn degeneracy_series_matches_exact() {
        for &d in &[1.5, 2.0, 2.5, 3.0, 3.7, 4.0, 4.5] {
            let nu = degeneracy_series(d, 6);
            for &l in &[200.0f64, 1000.0, 5000.0] {
                let approx: f64 = nu
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * l.powi(-(k as i32)))
                    .sum::<f64>()
                    * l.powf(d - 2.0);
                let exact = degeneracy(l as usize, d).unwrap();
                assert!(
                    ((approx - exact) / exact).abs() < 1e-12,
                    "D={d} l={l}: {approx} vs {exact}"
                );
            }
        }
        assert_eq!(degeneracy_series(3.0, 3), vec![2.0, 1.0, 0.0]);
    }

    #[test]
    fn series_expansion_matches_direct_terms() {
        // The resummation integrand must reproduce ν S and ν E₁ at large l.
        let p = ModelParams::new(3.0, 0.0, 10);
        let series = fit_tail_series(&p, 5, 1000, 5, EdgePolicy::Reject).unwrap();
        let c = TailCoefficients::new(&series.xi_coeffs, p.dim);
        for &l in &[2000usize, 20_000] {
            let (ts, te) = tail_term(&p, l, 5, EdgePolicy::Reject).unwrap();
            let lf = l as f64;
            let (mut s, mut e) = (0.0, 0.0);
            for j in 0..=MAX_FIT_DEGREE {
                let w = lf.powf(-(6.0 - p.dim + j as f64));
                s += (c.sigma[j] + c.tau[j] * lf.ln()) * w;
                e += c.lambda[j] * w;
            }
            assert!(((s - ts) / ts).abs() < 1e-8, "l={l}: {s} vs {ts}");
            assert!(((e - te) / te).abs() < 1e-8, "l={l}: {e} vs {te}");
        }
    }

    #[test]
    fn zeta_remainders_match_brute_force() {
        for &(s, l0) in &[
            (3.0, 10usize),
            (2.5, 100),
            (1.5, 50),
            (4.0, 1000),
            (8.0, 1000),
        ] {
            let mut direct = NeumaierSum::new();
            let mut direct_log = NeumaierSum::new();
            let cut = 2_000_000usize;
            for l in l0..cut {
                let lf = l as f64;
                direct.add(lf.powf(-s));
                direct_log.add(lf.ln() * lf.powf(-s));
            }
            let x = cut as f64;
            direct.add(x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s));
            direct_log.add(
                x.powf(1.0 - s) * (x.ln() / (s - 1.0) + 1.0 / ((s - 1.0) * (s - 1.0)))
                    + 0.5 * x.ln() * x.powf(-s),
            );
            let a = power_tail(s, l0).unwrap();
            let b = log_power_tail(s, l0).unwrap();
            assert!(
                ((a - direct.value()) / a).abs() < 1e-9,
                "s={s} l0={l0}: {a} vs {}",
                direct.value()
            );
            assert!(
                ((b - direct_log.value()) / b).abs() < 1e-9,
                "s={s} l0={l0}: {b} vs {}",
                direct_log.value()
            );
        }
    }

    #[test]
    fn tails_shrink_with_mass() {
        let mut last = (f64::INFINITY, f64::INFINITY);
        for &mu in &[0.0, 5.0, 50.0] {
            let p = ModelParams::new(3.0, mu, 10);
            let t = tail_direct(&p, 5, 1000, 1e-8).unwrap();
            assert!(t.delta_s < last.0 && t.delta_e1 < last.1);
            assert!(t.delta_s > 0.0 && t.delta_e1 > 0.0);
            last = (t.delta_s, t.delta_e1);
        }
    }
}
