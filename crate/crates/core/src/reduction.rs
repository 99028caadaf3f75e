//! Gaussian block reduction of one partial wave's ground state.
//!
//! For a chain with coupling matrix `K = Ω²` the ground state is
//! `ψ ∝ exp(−xᵀΩx/2)`. Tracing one block of sites leaves a Gaussian
//! density matrix that factorizes into independent modes, each with a
//! geometric spectrum `(1 − ξ) ξᵏ`. This module extracts those `ξ`.
//!
//! With `A` the traced block of `Ω`, `C` the kept block and `B` the
//! coupling between them:
//!
//! ```text
//! β  = ½ Bᵀ A⁻¹ B        γ = C − β = Vᵀ γ_D V
//! β' = γ_D^{-1/2} V β Vᵀ γ_D^{-1/2}
//! ξ_i = β'_i / (1 + √(1 − β'_i²))
//! ```
//!
//! `A⁻¹ B` is applied through a Cholesky factor of `A`. Since the factor of
//! a leading principal block is the leading block of the full factor, one
//! factorization of `Ω` per direction serves every partition of the chain;
//! [`Reducer`] exploits that.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_coupling_matrix, CouplingMatrix, ModelParams};

/// Relative eigenvalue floor below which `K` is rejected by [`matrix_sqrt_spd`].
pub const SPD_TOLERANCE: f64 = 1e-12;

/// `β'` eigenvalues in `[-BETA_CLAMP, 0)` are round-off and become 0.
pub const BETA_CLAMP: f64 = 1e-12;

/// The traced inner ball: shells `1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition {
    traced_sites: usize,
}

impl Partition {
    pub fn new(traced_sites: usize, sites: usize) -> Result<Self> {
        if traced_sites == 0 || traced_sites >= sites {
            return Err(Error::Domain(format!(
                "traced sites must satisfy 1 <= n <= N-1 (n = {traced_sites}, N = {sites})"
            )));
        }
        Ok(Partition { traced_sites })
    }

    pub fn traced_sites(&self) -> usize {
        self.traced_sites
    }

    /// Reporting radius `R = (n + ½) a`. Area-law fits carry a free
    /// intercept, so this convention only moves the intercept.
    pub fn radius(&self, spacing: f64) -> f64 {
        (self.traced_sites as f64 + 0.5) * spacing
    }
}

/// Which side of the cut survives the partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kept {
    /// Trace the inner ball, keep shells `n+1..=N`.
    Outer,
    /// Trace the exterior, keep shells `1..=n`.
    Inner,
}

impl Kept {
    /// The cheaper side for partition `n` of an `N`-site chain (smaller kept block).
    pub fn smaller(partition: Partition, sites: usize) -> Kept {
        if partition.traced_sites() < sites - partition.traced_sites() {
            Kept::Inner
        } else {
            Kept::Outer
        }
    }
}

/// Intermediate matrices of one reduction, kept for inspection and tests.
#[derive(Debug, Clone)]
pub struct ReductionTrace {
    pub omega: DMatrix<f64>,
    pub beta: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub beta_prime: DMatrix<f64>,
}

/// Mode parameters of one reduced partial wave, sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiSpectrum {
    pub xi: Vec<f64>,
    pub l: usize,
    pub partition: Partition,
    pub kept: Kept,
    pub params: ModelParams,
}

impl XiSpectrum {
    pub fn largest(&self) -> f64 {
        self.xi.first().copied().unwrap_or(0.0)
    }
}

/// Symmetric square root of a symmetric positive-definite matrix via its
/// orthogonal eigendecomposition.
pub fn matrix_sqrt_spd(k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !k.is_square() {
        return Err(Error::Domain(format!(
            "matrix is {}x{}, not square",
            k.nrows(),
            k.ncols()
        )));
    }
    let n = k.nrows();
    let eig = k.clone().symmetric_eigen();
    let norm = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.eigenvalues.min();
    if !(min > SPD_TOLERANCE * norm) {
        return Err(Error::NotPositiveDefinite(format!(
            "smallest eigenvalue {min:.3e} vs norm {norm:.3e}"
        )));
    }
    let q = &eig.eigenvectors;
    let mut scaled = q.clone();
    for (mut col, &lam) in scaled.column_iter_mut().zip(eig.eigenvalues.iter()) {
        col *= lam.sqrt();
    }
    let mut omega = scaled * q.transpose();
    symmetrize(&mut omega);
    debug_assert_eq!(omega.nrows(), n);
    Ok(omega)
}

/// `Ω = √K` for one partial wave, with the lattice data attached.
#[derive(Debug, Clone)]
pub struct ModeOmega {
    pub l: usize,
    pub params: ModelParams,
    pub omega: DMatrix<f64>,
}

impl ModeOmega {
    pub fn new(params: &ModelParams, l: usize) -> Result<Self> {
        Self::from_coupling(&build_coupling_matrix(params, l))
    }

    pub fn from_coupling(k: &CouplingMatrix) -> Result<Self> {
        Ok(ModeOmega {
            l: k.l,
            params: k.params,
            omega: matrix_sqrt_spd(&k.to_dense())?,
        })
    }
}

/// Traces the inner `n` shells and returns the `N − n` mode parameters of
/// the exterior.
pub fn reduce_mode(mode: &ModeOmega, partition: Partition) -> Result<XiSpectrum> {
    reduce_mode_kept(mode, partition, Kept::Outer)
}

pub fn reduce_mode_kept(mode: &ModeOmega, partition: Partition, kept: Kept) -> Result<XiSpectrum> {
    let reducer = Reducer::new(&mode.omega);
    let xi = reducer.reduce(partition, kept)?;
    Ok(XiSpectrum {
        xi,
        l: mode.l,
        partition,
        kept,
        params: mode.params,
    })
}

/// Same chain as [`reduce_mode`] but returning every intermediate matrix.
pub fn reduce_mode_traced(
    omega: &DMatrix<f64>,
    partition: Partition,
) -> Result<(Vec<f64>, ReductionTrace)> {
    let reducer = Reducer::new(omega);
    let beta = reducer.beta(partition, Kept::Outer)?;
    let n = partition.traced_sites();
    let size = omega.nrows();
    let c = omega.view((n, n), (size - n, size - n)).into_owned();
    let (xi, gamma, beta_prime) = xi_from_beta(&c, &beta)?;
    Ok((
        xi,
        ReductionTrace {
            omega: omega.clone(),
            beta,
            gamma,
            beta_prime,
        },
    ))
}

/// Reduces one `Ω` for many partitions, sharing the Cholesky factorizations
/// of the traced blocks.
pub struct Reducer<'a> {
    omega: &'a DMatrix<f64>,
    // Factor of Ω in natural order (leading blocks are inner balls).
    forward: std::cell::OnceCell<Result<DMatrix<f64>, String>>,
    // Factor of Ω with reversed site order (leading blocks are exteriors).
    reversed: std::cell::OnceCell<Result<DMatrix<f64>, String>>,
}

impl<'a> Reducer<'a> {
    pub fn new(omega: &'a DMatrix<f64>) -> Self {
        Reducer {
            omega,
            forward: Default::default(),
            reversed: Default::default(),
        }
    }

    pub fn size(&self) -> usize {
        self.omega.nrows()
    }

    fn factor(&self, kept: Kept) -> Result<&DMatrix<f64>> {
        let cell = match kept {
            Kept::Outer => &self.forward,
            Kept::Inner => &self.reversed,
        };
        let slot = cell.get_or_init(|| {
            let m = match kept {
                Kept::Outer => self.omega.clone(),
                Kept::Inner => reversed(self.omega),
            };
            m.cholesky()
                .map(|c| c.unpack())
                .ok_or_else(|| "cholesky of Ω failed".to_string())
        });
        slot.as_ref()
            .map_err(|e| Error::NotPositiveDefinite(e.clone()))
    }

    /// `β = ½ Bᵀ A⁻¹ B` for the kept side, in the kept block's site order
    /// (reversed for [`Kept::Inner`]).
    pub fn beta(&self, partition: Partition, kept: Kept) -> Result<DMatrix<f64>> {
        let size = self.size();
        let n = partition.traced_sites();
        if n >= size {
            return Err(Error::Domain(format!(
                "partition n = {n} does not fit N = {size}"
            )));
        }
        let traced = match kept {
            Kept::Outer => n,
            Kept::Inner => size - n,
        };
        let l = self.factor(kept)?;
        // With A = L₁₁L₁₁ᵀ, L₁₁⁻¹B is the transposed off-diagonal factor block.
        let w = l.view((traced, 0), (size - traced, traced));
        let mut beta = (w * w.transpose()) * 0.5;
        symmetrize(&mut beta);
        Ok(beta)
    }

    fn kept_block(&self, partition: Partition, kept: Kept) -> DMatrix<f64> {
        let size = self.size();
        let n = partition.traced_sites();
        match kept {
            Kept::Outer => self.omega.view((n, n), (size - n, size - n)).into_owned(),
            Kept::Inner => reversed(&self.omega.view((0, 0), (n, n)).into_owned()),
        }
    }

    pub fn reduce(&self, partition: Partition, kept: Kept) -> Result<Vec<f64>> {
        let beta = self.beta(partition, kept)?;
        let c = self.kept_block(partition, kept);
        xi_from_beta(&c, &beta).map(|(xi, _, _)| xi)
    }
}

fn xi_from_beta(
    c: &DMatrix<f64>,
    beta: &DMatrix<f64>,
) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let mut gamma = c - beta;
    symmetrize(&mut gamma);
    let eig = gamma.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "γ has eigenvalue {min:.3e}"
        )));
    }
    // Columns of q are eigenvectors, so q = Vᵀ.
    let q = &eig.eigenvectors;
    let inv_sqrt =
        DVector::from_iterator(q.ncols(), eig.eigenvalues.iter().map(|g| 1.0 / g.sqrt()));
    let mut bp = q.transpose() * beta * q;
    for i in 0..bp.nrows() {
        for j in 0..bp.ncols() {
            bp[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    symmetrize(&mut bp);
    let mut xi = Vec::with_capacity(bp.nrows());
    for b in bp.symmetric_eigenvalues().iter().copied() {
        if !b.is_finite() {
            return Err(Error::Unnormalizable(format!("β' eigenvalue {b}")));
        }
        let b = if b < 0.0 {
            if b < -BETA_CLAMP {
                return Err(Error::Unnormalizable(format!(
                    "β' eigenvalue {b:.3e} is negative"
                )));
            }
            0.0
        } else {
            b
        };
        if b >= 1.0 {
            return Err(Error::Unnormalizable(format!("β' eigenvalue {b} >= 1")));
        }
        xi.push(b / (1.0 + (1.0 - b * b).sqrt()));
    }
    xi.sort_by(|a, b| b.total_cmp(a));
    Ok((xi, gamma, bp))
}

/// Relative size below which entries are flushed to zero. The eigensolver
/// can break down when squares of entries underflow, and entries this small
/// are far below round-off anyway.
const FLUSH: f64 = 1e-40;

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let floor = FLUSH * m.amax();
    for i in 0..n {
        for j in i..n {
            let mut avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            if avg.abs() < floor {
                avg = 0.0;
            }
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

fn reversed(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    DMatrix::from_fn(r, c, |i, j| m[(r - 1 - i, c - 1 - j)])
}
