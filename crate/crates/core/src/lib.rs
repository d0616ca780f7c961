//! Lattice laboratory for the Dirac time operator `T = α·r/c + βτ₀`.
//!
//! The crate builds the free Dirac Hamiltonian and the time operator exactly on
//! a periodic lattice, evolves spinor packets by per-mode diagonalization and
//! applies the unitary `exp(−iεT/ħ)` site by site. Everything is double
//! precision and deterministic.

pub mod algebra;
pub mod boost;
pub mod chronos;
pub mod dense;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod params;
pub mod spinmat;

pub use error::{Error, Result};
pub use lattice::{Lattice, Space, SpinorField};
pub use params::PhysParams;
pub use spinmat::SpinMatrix;
