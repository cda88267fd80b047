//! Solvers and resource estimators for downfolded extended-Hubbard models of
//! real materials.
//!
//! The pipeline: load a lattice model from a TOML document ([`model`]), expand
//! it into fermionic terms, map those to qubit operators and a matrix product
//! operator ([`encode`]), then find the ground state with exact
//! diagonalization ([`ed`]), DMRG ([`dmrg`]) or a classically simulated
//! variational circuit over matrix product states ([`vqe`]). Physical
//! observables live in [`observables`], fault-tolerant cost models in
//! [`resources`], and the bundled material parameter sets in [`materials`].

pub mod dmrg;
pub mod ed;
pub mod encode;
pub mod linalg;
pub mod materials;
pub mod model;
pub mod observables;
pub mod resources;
pub mod tensor;
pub mod vqe;

pub(crate) mod par;

pub use num_complex::Complex64;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model document: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    Numerics(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn numerics(msg: impl Into<String>) -> Self {
        Error::Numerics(msg.into())
    }
}
