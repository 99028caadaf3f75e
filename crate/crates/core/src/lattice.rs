//! Radial lattice for one partial wave of a free scalar field.
//!
//! Discretizing the radial coordinate of the `l`-th partial wave on `N`
//! shells turns each wave into an open chain of coupled oscillators,
//! `H = ½ Σ p_j² + ½ Σ x_i K_ij x_j`, with a tridiagonal coupling matrix `K`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::zeta::gamma_ratio_series;

/// Treatment of the outermost lattice link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Boundary {
    /// Field pinned to zero at shell `N + 1`; keeps the outward link term at `j = N`.
    #[default]
    Dirichlet,
    /// Drops the outward link term at `j = N`. At `l = 0, μ = 0` this has an
    /// exact zero mode, so it is only useful for inspecting the matrix itself.
    FreePrinted,
}

impl Boundary {
    pub fn as_str(&self) -> &'static str {
        match self {
            Boundary::Dirichlet => "dirichlet",
            Boundary::FreePrinted => "free-printed",
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(Boundary::Dirichlet),
            "free-printed" | "free_printed" | "freeprinted" => Ok(Boundary::FreePrinted),
            other => Err(Error::Parse(format!("unknown boundary `{other}`"))),
        }
    }
}

/// Physical and discretization inputs.
///
/// `mass` is measured in units of `1/a`. The coupling matrix is always built
/// with unit spacing; `spacing` only converts shell counts into radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub dim: f64,
    pub mass: f64,
    pub sites: usize,
    pub spacing: f64,
    pub boundary: Boundary,
}

impl ModelParams {
    pub fn new(dim: f64, mass: f64, sites: usize) -> Self {
        ModelParams {
            dim,
            mass,
            sites,
            spacing: 1.0,
            boundary: Boundary::Dirichlet,
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.mass = mass;
        self
    }

    pub fn with_dim(mut self, dim: f64) -> Self {
        self.dim = dim;
        self
    }

    /// Checks the constraints every operation relies on.
    pub fn validate(&self) -> Result<()> {
        if !(self.dim.is_finite() && self.dim > 1.0) {
            return Err(Error::Domain(format!(
                "dimension must exceed 1, got {}",
                self.dim
            )));
        }
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return Err(Error::Domain(format!(
                "mass must be finite and >= 0, got {}",
                self.mass
            )));
        }
        if self.sites < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 sites, got {}",
                self.sites
            )));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::Domain(format!(
                "spacing must be > 0, got {}",
                self.spacing
            )));
        }
        Ok(())
    }

    /// Like [`validate`](Self::validate), additionally requiring `1 < D < 5`
    /// as needed by anything that sums over angular momenta.
    pub fn validate_summable(&self) -> Result<()> {
        self.validate()?;
        if self.dim >= 5.0 {
            return Err(Error::Divergent { dim: self.dim });
        }
        Ok(())
    }

    /// Diagonal entry `K_jj` for 1-based shell `j`.
    pub fn diagonal(&self, l: usize, j: usize) -> f64 {
        debug_assert!(j >= 1 && j <= self.sites);
        let d = self.dim;
        let jf = j as f64;
        let lf = l as f64;
        let mut k = lf * (lf + d - 2.0) / (jf * jf) + self.mass * self.mass;
        if j >= 2 {
            k += (1.0 - 0.5 / jf).powf(d - 1.0);
        }
        if j < self.sites || self.boundary == Boundary::Dirichlet {
            k += (1.0 + 0.5 / jf).powf(d - 1.0);
        }
        k
    }

    /// Off-diagonal entry `K_{j,j+1}` for 1-based `j < N`. Independent of `l` and `μ`.
    pub fn coupling(&self, j: usize) -> f64 {
        debug_assert!(j >= 1 && j < self.sites);
        let jf = j as f64;
        -((jf + 0.5) / (jf * (jf + 1.0)).sqrt()).powf(self.dim - 1.0)
    }
}

/// Tridiagonal coupling matrix of one partial wave.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub l: usize,
    pub params: ModelParams,
    diagonal: Vec<f64>,
    off_diagonal: Vec<f64>,
}

impl CouplingMatrix {
    pub fn size(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// `K_{j,j+1}` for `j = 1..N-1` (0-based storage).
    pub fn off_diagonal(&self) -> &[f64] {
        &self.off_diagonal
    }

    /// Entry `(i, j)` with 0-based indices.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => self.diagonal[i],
            1 => self.off_diagonal[i.min(j)],
            _ => 0.0,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    /// Flips the sign of every coupling, i.e. conjugates by `diag(1, -1, 1, ...)`.
    /// The reduced spectra are invariant under this.
    pub fn with_flipped_couplings(mut self) -> Self {
        for c in &mut self.off_diagonal {
            *c = -*c;
        }
        self
    }

    /// `K · v` without forming the dense matrix.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.size();
        assert_eq!(v.len(), n, "vector length must match lattice size");
        (0..n)
            .map(|i| {
                let mut acc = self.diagonal[i] * v[i];
                if i > 0 {
                    acc += self.off_diagonal[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    acc += self.off_diagonal[i] * v[i + 1];
                }
                acc
            })
            .collect()
    }
}

pub fn build_coupling_matrix(params: &ModelParams, l: usize) -> CouplingMatrix {
    let n = params.sites;
    CouplingMatrix {
        l,
        params: *params,
        diagonal: (1..=n).map(|j| params.diagonal(l, j)).collect(),
        off_diagonal: (1..n).map(|j| params.coupling(j)).collect(),
    }
}

/// Multiplicity `ν(l, D)` of the angular-momentum-`l` representation of SO(D),
/// continued to real `D` through Gamma functions.
///
/// Uses `ν = (2l + D − 2) Γ(l + D − 2) / (Γ(l + 1) Γ(D − 1))` for `l ≥ 1`,
/// which is the difference of the two Gamma ratios with the cancellation
/// done analytically, and `ν(0, D) = 1`. Integer dimensions are evaluated
/// through exact binomials.
pub fn degeneracy(l: usize, dim: f64) -> Result<f64> {
    Degeneracy::new(dim).map(|d| d.eval(l))
}

/// From here on the Gamma ratio is summed from its Stirling series, which
/// keeps full relative precision where differences of `ln Γ` would not.
const ASYMPTOTIC_L: usize = 64;

/// [`degeneracy`] at fixed `D`, with the `D`-dependent constants prepared once.
#[derive(Debug, Clone)]
pub struct Degeneracy {
    dim: f64,
    integer: bool,
    inv_gamma: f64,
    series: Vec<f64>,
}

impl Degeneracy {
    pub fn new(dim: f64) -> Result<Self> {
        if !(dim.is_finite() && dim > 1.0) {
            return Err(Error::Domain(format!("degeneracy needs D > 1, got {dim}")));
        }
        let integer = dim.fract() == 0.0 && dim <= 64.0;
        let series = gamma_ratio_series(dim - 2.0, 1.0, 12);
        Ok(Degeneracy {
            dim,
            integer,
            inv_gamma: 1.0 / statrs::function::gamma::gamma(dim - 1.0),
            series,
        })
    }

    pub fn eval(&self, l: usize) -> f64 {
        if l == 0 {
            return 1.0;
        }
        let dim = self.dim;
        if self.integer && l <= 1 << 20 {
            let d = dim as u64;
            let l = l as u64;
            let first = binomial(l + d - 1, l);
            let second = if l >= 2 {
                binomial(l + d - 3, l - 2)
            } else {
                0.0
            };
            return first - second;
        }
        let lf = l as f64;
        // Γ(l + D − 2) / Γ(l + 1); l + D − 2 > 0 for l ≥ 1, D > 1.
        let ratio = if l < ASYMPTOTIC_L {
            (ln_gamma(lf + dim - 2.0) - ln_gamma(lf + 1.0)).exp()
        } else {
            let x = 1.0 / lf;
            let tail = self.series.iter().rev().fold(0.0, |acc, c| acc * x + c);
            lf.powf(dim - 3.0) * tail.exp()
        };
        (2.0 * lf + dim - 2.0) * ratio * self.inv_gamma
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > 1 << 100 {
            // too large for exact accumulation; finish in floating point
            let mut f = acc as f64;
            for j in (i + 1)..k {
                f = f * (n - j) as f64 / (j + 1) as f64;
            }
            return f;
        }
    }
    acc as f64
}
