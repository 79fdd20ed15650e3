//! Spectral laboratory for the Airy–Schrödinger equation
//!
//! `∂ₜu + ia∂ₓ²u + b∂ₓ³u + ic|u|²u + d|u|²∂ₓu + e u²∂ₓū = 0`
//!
//! on a periodic box: pseudospectral fields and Fourier multipliers, exact
//! solutions and gauge maps, an integrating-factor RK4 integrator, lattice
//! multilinear functionals and the modified energies built from them.

pub mod energies;
pub mod error;
pub mod models;
pub mod multilinear;
pub mod parallel;
pub mod snapshot;
pub mod solver;
pub mod spectral;

pub use error::{LabError, Result};
pub use models::EquationParams;
pub use parallel::Exec;
pub use spectral::{Grid, MultiplierSymbol, SpectralField};
