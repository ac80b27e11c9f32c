//! Pseudospectral solver for the 3D incompressible Euler equations with
//! Mori-Zwanzig reduced models.
//!
//! The resolved modes `F = [-N/2, N/2-1]^3` are evolved under closures built
//! from the bilinear kernel `b_k(x, y) = -i Σ_{p+q=k} (k·x_p) A_k y_q`.
//! Model terms `Z^n = P L (Q L)^n Q L u` can be evaluated by hand-written
//! routines ([`terms`]) or generated symbolically ([`compiler`]).

pub mod compiler;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod integrate;
pub mod memory;
pub mod spectral;
pub mod terms;

pub use error::{Error, Result};
