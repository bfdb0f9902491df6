//! Numerical laboratory for divergence-form elliptic equations with rapidly
//! oscillating periodic coefficients in domains whose boundary is flat only
//! above a micro-scale ε.
//!
//! The crate builds rough domains and their flatness moduli ([`geometry`]),
//! meshes balls and slabs of them ([`mesh`]), solves Dirichlet and periodic
//! cell problems with P1 finite elements ([`pde`], [`cell`]), and evaluates
//! the large-scale regularity quantities and estimates on the solutions
//! ([`analysis`]). [`experiment`] drives parameter sweeps from TOML files.

pub mod analysis;
pub mod cell;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod mesh;
pub mod pde;
pub mod stats;

pub use error::{Error, Result};
