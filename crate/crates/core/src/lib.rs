//! Configuration-space quantum mechanics on the plane and punctured plane
//! with a flat U(1) connection of holonomy parameter λ.
//!
//! Modules:
//! - [`specfun`]: Γ, Bessel and Laguerre functions.
//! - [`bundle`]: flat connections, holonomies, winding numbers.
//! - [`hilbert`]: radial grids, modes and the operators acting on them.
//! - [`models`]: free and oscillator spectra and eigenfunctions.
//! - [`propagators`]: spectral, closed-form and time-sliced propagators.
//! - [`cli`]: the command-line front end.

pub mod error;
pub mod hilbert;
pub mod models;
pub mod propagators;
pub mod bundle;
pub mod cli;
pub mod specfun;

pub use error::{Error, Result};
