use thiserror::Error;

use crate::lattice::Space;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported spatial dimension {0}; expected 1 or 3")]
    Dimension(usize),

    #[error("lattice size {0} per axis must be an even power of two")]
    LatticeSize(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("dense operator of dimension {dim} exceeds the limit of {limit}")]
    Oversize { dim: usize, limit: usize },

    #[error("field is in {found:?} space, expected {expected:?}")]
    Space { expected: Space, found: Space },

    #[error("field norm² = {0:.6e}, expected a normalized field")]
    NotNormalized(f64),

    #[error("precondition `{name}` violated: {detail}")]
    Precondition { name: &'static str, detail: String },

    #[error("aliasing: {mass:.3e} of the norm sits in the outer band of the {space:?} grid")]
    Aliasing { space: Space, mass: f64 },

    #[error("boost left the momentum band at step {step}: edge mass {mass:.3e}")]
    BoostEdge { step: usize, mass: f64 },

    #[error("expectation of H is {0:.3e}; no Lorentz factor for a balanced packet")]
    BalancedPacket(f64),

    #[error("d<T>/dt = {0:.3e}; Mandelstam-Tamm time diverges")]
    DivergentMtTime(f64),

    #[error("unknown observable `{0}`")]
    UnknownObservable(String),

    #[error("mismatched lattices or spinor dimensions")]
    Mismatch,

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn precondition(name: &'static str, detail: impl Into<String>) -> Self {
        Error::Precondition {
            name,
            detail: detail.into(),
        }
    }

    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}
