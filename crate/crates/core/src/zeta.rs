//! Riemann zeta function and its derivative for real `s > 1`, by
//! Euler–Maclaurin summation.

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// Number of explicit terms before the Euler–Maclaurin tail.
const HEAD: usize = 24;

/// `B_{2j}` for `j = 1..=10`.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

fn check(s: f64) -> Result<()> {
    if !(s.is_finite() && s > 1.0) {
        return Err(Error::Domain(format!("zeta needs real s > 1, got {s}")));
    }
    Ok(())
}

/// `ζ(s)` for real `s > 1`, accurate to ~1e-15 absolute.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    check(s)?;
    let m = HEAD as f64;
    let mut acc = NeumaierSum::new();
    for k in 1..HEAD {
        acc.add((k as f64).powf(-s));
    }
    acc.add(m.powf(1.0 - s) / (s - 1.0));
    acc.add(0.5 * m.powf(-s));
    // c_j (s)_{2j-1} m^{-s-2j+1}, with (s)_{2j-1} the rising factorial
    let mut rising = s;
    let mut factorial = 2.0;
    let mut power = m.powf(-s - 1.0);
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        if j > 0 {
            let i = 2 * j;
            rising *= (s + i as f64 - 1.0) * (s + i as f64);
            factorial *= (i + 1) as f64 * (i + 2) as f64;
            power /= m * m;
        }
        acc.add(b / factorial * rising * power);
    }
    Ok(acc.value())
}

/// `ζ'(s)` for real `s > 1`, by differentiating the Euler–Maclaurin form
/// of [`riemann_zeta`] term by term.
pub fn riemann_zeta_prime(s: f64) -> Result<f64> {
    check(s)?;
    let m = HEAD as f64;
    let ln_m = m.ln();
    let mut acc = NeumaierSum::new();
    for k in 2..HEAD {
        let kf = k as f64;
        acc.add(-kf.ln() * kf.powf(-s));
    }
    let head = m.powf(1.0 - s);
    acc.add(-ln_m * head / (s - 1.0) - head / ((s - 1.0) * (s - 1.0)));
    acc.add(-0.5 * ln_m * m.powf(-s));
    let mut rising = s;
    // d/ds ln (s)_{2j-1} = Σ 1/(s+i)
    let mut log_deriv = 1.0 / s;
    let mut factorial = 2.0;
    let mut power = m.powf(-s - 1.0);
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        if j > 0 {
            let i = 2 * j;
            let (u, v) = (s + i as f64 - 1.0, s + i as f64);
            rising *= u * v;
            log_deriv += 1.0 / u + 1.0 / v;
            factorial *= (i + 1) as f64 * (i + 2) as f64;
            power /= m * m;
        }
        acc.add(b / factorial * rising * power * (log_deriv - ln_m));
    }
    Ok(acc.value())
}

/// Bernoulli numbers `B_0 ..= B_n` with `B_1 = −½`.
pub(crate) fn bernoulli_numbers(n: usize) -> Vec<f64> {
    let mut b = vec![0.0; n + 1];
    b[0] = 1.0;
    for m in 1..=n {
        let mut acc = 0.0;
        let mut binom = 1.0; // C(m+1, k)
        for (k, bk) in b.iter().enumerate().take(m) {
            acc += binom * bk;
            binom = binom * (m + 1 - k) as f64 / (k + 1) as f64;
        }
        b[m] = -acc / (m + 1) as f64;
    }
    b
}

pub(crate) fn bernoulli_polynomial(m: usize, t: f64, numbers: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut binom = 1.0;
    for (k, bk) in numbers.iter().enumerate().take(m + 1) {
        acc += binom * bk * t.powi((m - k) as i32);
        binom = binom * (m - k) as f64 / (k + 1) as f64;
    }
    acc
}

/// Coefficients `g_k` of `ln[Γ(x + a) / Γ(x + b)] = (a − b) ln x + Σ_{k≥1} g_k x^{-k}`.
pub(crate) fn gamma_ratio_series(a: f64, b: f64, len: usize) -> Vec<f64> {
    let numbers = bernoulli_numbers(len + 1);
    let mut g = vec![0.0; len];
    for (k, gk) in g.iter_mut().enumerate().skip(1) {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let diff =
            bernoulli_polynomial(k + 1, a, &numbers) - bernoulli_polynomial(k + 1, b, &numbers);
        *gk = sign * diff / (k * (k + 1)) as f64;
    }
    g
}
