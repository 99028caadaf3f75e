use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix not positive definite (zero mode or unstable discretization): {0}")]
    NotPositiveDefinite(String),

    #[error("reduced state unnormalizable (numerical failure): {0}")]
    Unnormalizable(String),

    #[error("angular-momentum sum divergent; radial regularization insufficient (D = {dim})")]
    Divergent { dim: f64 },

    #[error("perturbative expansion undefined at the outer edge (n = {traced}, N = {sites}); use the exact path")]
    PerturbativeEdge { traced: usize, sites: usize },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("ill-conditioned tail fit (condition estimate {condition:.3e}); increase l0")]
    IllConditioned { condition: f64 },

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("at {axis} = {value}: {source}")]
    AtAxisValue {
        axis: &'static str,
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// Short category name, stable across releases; the CLI maps it to an exit code.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Domain(_) | Error::Precondition(_) => "domain",
            Error::NotPositiveDefinite(_) | Error::Unnormalizable(_) => "numerical",
            Error::Divergent { .. } => "divergence",
            Error::PerturbativeEdge { .. } => "domain",
            Error::NoConvergence(_) | Error::IllConditioned { .. } => "convergence",
            Error::BudgetExceeded(_) => "budget",
            Error::AtAxisValue { source, .. } => source.category(),
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}
