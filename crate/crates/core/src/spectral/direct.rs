use num_complex::Complex64;

use super::field::{SpectralField, Vec3, ZERO3};
use super::grid::{leray_apply, RangeMask, WavenumberGrid};
use crate::error::Result;

/// Brute-force double sum `-i Σ_{p+q=k} (k·x_p) A_k y_q`, `O(|F∪G|^2)`.
///
/// Reference for the FFT path; oddball modes are skipped the same way.
pub fn direct_bilinear(
    grid: &WavenumberGrid,
    x: &SpectralField,
    x_mask: RangeMask,
    y: &SpectralField,
    y_mask: RangeMask,
    out_mask: RangeMask,
) -> Result<SpectralField> {
    x.check_grid(grid)?;
    y.check_grid(grid)?;
    let mut out = SpectralField::zeros(grid);
    let xs: Vec<(usize, [i32; 3])> = grid
        .indices(x_mask)
        .filter(|&p| !grid.is_oddball(p) && x[p] != ZERO3)
        .map(|p| (p, grid.wavevector(p)))
        .collect();
    for k_idx in grid.indices(out_mask) {
        if grid.is_oddball(k_idx) {
            continue;
        }
        let k = grid.wavevector(k_idx);
        let mut acc: Vec3 = ZERO3;
        for &(p, pk) in &xs {
            let qk = [k[0] - pk[0], k[1] - pk[1], k[2] - pk[2]];
            let Some(q) = grid.index_of(qk) else { continue };
            if grid.is_oddball(q) || !grid.in_mask(q, y_mask) {
                continue;
            }
            let xp = x[p];
            let kx = xp[0] * k[0] as f64 + xp[1] * k[1] as f64 + xp[2] * k[2] as f64;
            let yq = y[q];
            for c in 0..3 {
                acc[c] += kx * yq[c];
            }
        }
        let v = leray_apply(k, acc);
        out[k_idx] = v.map(|c| c * Complex64::new(0.0, -1.0));
    }
    Ok(out)
}
