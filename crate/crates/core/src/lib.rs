//! Spectral analysis of weighted directed graphs built from junctions joined
//! by one-dimensional channels.
//!
//! A channel is a directed path of vertices with uniform diagonal weight
//! `alpha` and uniform edge weight `beta`; junctions are the remaining
//! vertices and act as boundary conditions joining channel ends. Stretching
//! every channel by a factor `n` produces a matrix family `A(n)` whose
//! eigenvalues accumulate, as `n` grows, on a union of anti-Stokes curves
//! plus finitely many isolated points. This crate computes both sides:
//!
//! * the exact characteristic polynomial of `A(n)` through a reduced pencil
//!   on the collapsed graph, independent of `n` in size ([`pencil`]),
//! * the predicted limit objects (curves, isolated eigenvalues, densities)
//!   from the subset-coefficient family ([`limitset`]),
//! * the actual spectrum of `A(n)` by simultaneous root-finding at escalating
//!   precision, with eigenvector localization diagnostics ([`spectra`]).

pub mod bignum;
pub mod graph;
pub mod limitset;
pub mod linalg;
pub mod par;
pub mod pencil;
pub mod poly;
pub mod presets;
pub mod spectra;

pub use bignum::{BigComplex, BigReal};
pub use graph::{AssembledMatrix, ChannelSpec, Decomposition, GraphSpec};
pub use limitset::{AnalyticFamily, ArcSample, LimitSet};
pub use pencil::{ReducedPencil, SubsetFamily};
pub use poly::{ComplexPoly, RootSet};
pub use spectra::{LocalizationReport, SpectrumResult};

/// Crate-wide error type. The three kinds map onto the CLI exit codes
/// (parse failures, numeric failures, verification failures).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("verification failure: {0}")]
    Verification(String),
}

impl Error {
    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
    pub fn verification(msg: impl Into<String>) -> Self {
        Error::Verification(msg.into())
    }

    /// Process exit code class for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) => 2,
            Error::Numeric(_) => 3,
            Error::Verification(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
