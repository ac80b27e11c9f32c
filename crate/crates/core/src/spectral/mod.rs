//! Wavenumber bookkeeping, fields and the masked bilinear kernel.

pub mod convolve;
pub mod direct;
pub mod fft;
pub mod field;
pub mod grid;

pub use convolve::{masked_bilinear, BilinearPair, Convolver};
pub use direct::direct_bilinear;
pub use field::{
    divergence_norm, hermitian_defect, hermitian_enforce, project_divergence_free, random_field,
    reduced_state, taylor_green_field, SpectralField, Vec3, ZERO3,
};
pub use grid::{leray_apply, GridShape, LerayProjector, RangeMask, WavenumberGrid};
