//! Entanglement entropy of a free scalar field on a radial lattice in
//! continuous spatial dimension `D`.
//!
//! The ground state of each partial wave is a Gaussian on a chain of `N`
//! radial shells. Tracing the inner ball of `n` shells yields independent
//! modes with geometric spectra, from which the geometric entropy `S` and the
//! single-copy entanglement `E₁` follow. Summing over angular momenta with
//! the SO(D) degeneracies gives the area law `S ≈ k_S R^{D−1}`.
//!
//! ```
//! use radial_entanglement::{total_entanglement, EntanglementConfig, ModelParams, Partition};
//!
//! let params = ModelParams::new(3.0, 0.0, 20);
//! let r = total_entanglement(&params, Partition::new(8, 20)?, &EntanglementConfig::default())?;
//! assert!(r.E1 < r.S);
//! # Ok::<(), radial_entanglement::Error>(())
//! ```

pub mod analysis;
pub mod cache;
pub mod cli;
pub mod entanglement;
pub mod error;
pub mod lattice;
pub mod perturbative;
pub mod reduction;
pub mod selftest;
pub mod spectrum;
pub mod sum;
pub mod zeta;

pub use analysis::{
    fit_area_law, majorization_report, rg_report, sweep, AreaLawFit, Axis, MajorizationSummary,
    PartitionRule, RgReport, SweepResult,
};
pub use cache::ModeCache;
pub use entanglement::{
    mode_entropy, mode_single_copy, total_entanglement, total_entanglement_many,
    total_entanglement_with, EntanglementConfig, EntanglementResult, ExactModes, LSwitch,
    ModeSource, TailKind,
};
pub use error::{Error, Result};
pub use lattice::{build_coupling_matrix, degeneracy, Boundary, CouplingMatrix, ModelParams};
pub use perturbative::{perturbative_xi, tail_direct, tail_zeta, PerturbativeMode, TailSeries};
pub use reduction::{matrix_sqrt_spd, reduce_mode, Partition, XiSpectrum};
pub use spectrum::{
    geometric_spectrum, majorizes, top_k_product_spectrum, MajorizationReport, ProbabilitySpectrum,
};
pub use zeta::{riemann_zeta, riemann_zeta_prime};
