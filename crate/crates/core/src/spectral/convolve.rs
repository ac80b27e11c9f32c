use std::collections::HashMap;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::fft::{smooth_size, Fft3};
use super::field::SpectralField;
use super::grid::{leray_apply, RangeMask, WavenumberGrid};
use crate::error::Result;

const I_NEG: Complex64 = Complex64::new(0.0, -1.0);

/// One term `coeff * b(left|left_mask, right|right_mask)` of a bilinear sum.
#[derive(Clone, Copy)]
pub struct BilinearPair<'a> {
    pub coeff: f64,
    pub left: &'a SpectralField,
    pub left_mask: RangeMask,
    pub right: &'a SpectralField,
    pub right_mask: RangeMask,
}

impl<'a> BilinearPair<'a> {
    pub fn new(
        left: &'a SpectralField,
        left_mask: RangeMask,
        right: &'a SpectralField,
        right_mask: RangeMask,
    ) -> Self {
        BilinearPair {
            coeff: 1.0,
            left,
            left_mask,
            right,
            right_mask,
        }
    }

    pub fn with_coeff(mut self, coeff: f64) -> Self {
        self.coeff = coeff;
        self
    }
}

/// Evaluates masked bilinear sums
/// `b_k(x, y) = -i Σ_{p+q=k} (k·x_p) A_k y_q` by zero-padded FFT products.
///
/// The padded size is the smallest smooth `L` with `L >= A + B + C`, where
/// `A`, `B`, `C` are the half-widths of the two input masks and the output
/// mask; wrap-around then never lands on a retained output mode.
/// Oddball modes are ignored on input and left at zero on output.
pub struct Convolver {
    grid: WavenumberGrid,
    planner: FftPlanner<f64>,
    plans: HashMap<usize, Fft3>,
    transforms: usize,
}

impl Convolver {
    pub fn new(grid: &WavenumberGrid) -> Self {
        Convolver {
            grid: grid.clone(),
            planner: FftPlanner::new(),
            plans: HashMap::new(),
            transforms: 0,
        }
    }

    pub fn grid(&self) -> &WavenumberGrid {
        &self.grid
    }

    /// Number of 3D transforms performed so far.
    pub fn transform_count(&self) -> usize {
        self.transforms
    }

    pub fn padded_size(&self, left: RangeMask, right: RangeMask, out: RangeMask) -> usize {
        let a = self.grid.half_extent(left);
        let b = self.grid.half_extent(right);
        let c = self.grid.half_extent(out);
        smooth_size((a + b + c).max(2 * a).max(2 * b).max(2 * c))
    }

    pub fn bilinear(
        &mut self,
        x: &SpectralField,
        x_mask: RangeMask,
        y: &SpectralField,
        y_mask: RangeMask,
        out_mask: RangeMask,
    ) -> Result<SpectralField> {
        self.bilinear_sum(&[BilinearPair::new(x, x_mask, y, y_mask)], out_mask)
    }

    /// `Σ coeff_i b(x_i, y_i)` restricted to `out_mask`.
    ///
    /// All pairs share one padded grid, so the nine products `x^a y^b` are
    /// accumulated in physical space and transformed once.
    pub fn bilinear_sum(
        &mut self,
        pairs: &[BilinearPair<'_>],
        out_mask: RangeMask,
    ) -> Result<SpectralField> {
        for p in pairs {
            p.left.check_grid(&self.grid)?;
            p.right.check_grid(&self.grid)?;
        }
        let mut out = SpectralField::zeros(&self.grid);
        let live: Vec<&BilinearPair<'_>> = pairs
            .iter()
            .filter(|p| !p.left_mask.is_empty() && !p.right_mask.is_empty() && p.coeff != 0.0)
            .collect();
        if live.is_empty() || out_mask.is_empty() {
            return Ok(out);
        }
        let l = live
            .iter()
            .map(|p| self.padded_size(p.left_mask, p.right_mask, out_mask))
            .max()
            .unwrap_or(2);
        let vol = l * l * l;

        let mut physical: Vec<(usize, RangeMask, Vec<Complex64>)> = Vec::new();
        let mut lookup = |conv: &mut Convolver, f: &SpectralField, mask: RangeMask| -> usize {
            let key = f as *const SpectralField as usize;
            if let Some(pos) = physical.iter().position(|(k, m, _)| *k == key && *m == mask) {
                return pos;
            }
            let data = conv.physical_of(f, mask, l);
            physical.push((key, mask, data));
            physical.len() - 1
        };
        let mut slots = Vec::with_capacity(live.len());
        for p in &live {
            let a = lookup(self, p.left, p.left_mask);
            let b = lookup(self, p.right, p.right_mask);
            slots.push((p.coeff, a, b));
        }

        let mut products = vec![Complex64::new(0.0, 0.0); 9 * vol];
        for (coeff, a, b) in slots {
            let x = &physical[a].2;
            let y = &physical[b].2;
            for ca in 0..3 {
                let xa = &x[ca * vol..(ca + 1) * vol];
                for cb in 0..3 {
                    let yb = &y[cb * vol..(cb + 1) * vol];
                    let acc = &mut products[(ca * 3 + cb) * vol..(ca * 3 + cb + 1) * vol];
                    for j in 0..vol {
                        acc[j] += xa[j] * yb[j] * coeff;
                    }
                }
            }
        }
        let fft = self.plan(l);
        for chunk in products.chunks_mut(vol) {
            fft.forward(chunk);
        }
        self.transforms += 9;

        let norm = 1.0 / vol as f64;
        let li = l as i32;
        for i in self.grid.indices(out_mask) {
            if self.grid.is_oddball(i) {
                continue;
            }
            let k = self.grid.wavevector(i);
            let j = padded_index(k, li);
            let w: [Complex64; 3] = std::array::from_fn(|cb| {
                (0..3)
                    .map(|ca| products[(ca * 3 + cb) * vol + j] * k[ca] as f64)
                    .sum::<Complex64>()
                    * norm
            });
            let v = leray_apply(k, w);
            out[i] = [v[0] * I_NEG, v[1] * I_NEG, v[2] * I_NEG];
        }
        Ok(out)
    }

    fn plan(&mut self, l: usize) -> &mut Fft3 {
        let planner = &mut self.planner;
        self.plans
            .entry(l)
            .or_insert_with(|| Fft3::new(l, planner))
    }

    /// Three physical components of `field|mask` on the `l^3` grid.
    fn physical_of(&mut self, field: &SpectralField, mask: RangeMask, l: usize) -> Vec<Complex64> {
        let vol = l * l * l;
        let li = l as i32;
        let mut data = vec![Complex64::new(0.0, 0.0); 3 * vol];
        for i in self.grid.indices(mask) {
            if self.grid.is_oddball(i) {
                continue;
            }
            let j = padded_index(self.grid.wavevector(i), li);
            let v = field[i];
            for c in 0..3 {
                data[c * vol + j] = v[c];
            }
        }
        let fft = self.plan(l);
        for chunk in data.chunks_mut(vol) {
            fft.inverse(chunk);
        }
        self.transforms += 3;
        data
    }
}

fn padded_index(k: [i32; 3], l: i32) -> usize {
    let w = |c: i32| c.rem_euclid(l) as usize;
    let l = l as usize;
    (w(k[0]) * l + w(k[1])) * l + w(k[2])
}

/// One-shot masked bilinear evaluation.
pub fn masked_bilinear(
    grid: &WavenumberGrid,
    x: &SpectralField,
    x_mask: RangeMask,
    y: &SpectralField,
    y_mask: RangeMask,
    out_mask: RangeMask,
) -> Result<SpectralField> {
    Convolver::new(grid).bilinear(x, x_mask, y, y_mask, out_mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::direct::direct_bilinear;
    use crate::spectral::field::{divergence_norm, random_field, ZERO3};

    const MASKS: [RangeMask; 3] = [RangeMask::F, RangeMask::G, RangeMask::FG];

    #[test]
    fn padding_sizes() {
        let g = WavenumberGrid::new(8, 16).unwrap();
        let c = Convolver::new(&g);
        assert_eq!(c.padded_size(RangeMask::F, RangeMask::F, RangeMask::FG), 16);
        assert_eq!(c.padded_size(RangeMask::G, RangeMask::F, RangeMask::F), 16);
        assert_eq!(c.padded_size(RangeMask::FG, RangeMask::G, RangeMask::F), 20);
        assert_eq!(c.padded_size(RangeMask::FG, RangeMask::FG, RangeMask::FG), 24);
    }

    #[test]
    fn zero_inputs_give_zero() {
        let g = WavenumberGrid::new(4, 8).unwrap();
        let z = SpectralField::zeros(&g);
        let out = masked_bilinear(&g, &z, RangeMask::FG, &z, RangeMask::FG, RangeMask::FG).unwrap();
        assert_eq!(out.max_abs_all(), 0.0);
    }

    #[test]
    fn single_pair() {
        let g = WavenumberGrid::new(4, 8).unwrap();
        let mut x = SpectralField::zeros(&g);
        let mut y = SpectralField::zeros(&g);
        let p = g.index_of([1, 0, -1]).unwrap();
        let q = g.index_of([2, 1, 0]).unwrap();
        x[p] = [Complex64::new(0.5, 1.0), Complex64::new(-2.0, 0.0), Complex64::new(0.0, 0.3)];
        y[q] = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0), Complex64::new(-1.0, 1.0)];
        let out = masked_bilinear(&g, &x, RangeMask::F, &y, RangeMask::G, RangeMask::FG).unwrap();
        let k = [3, 1, -1];
        let kx: Complex64 = (0..3).map(|a| x[p][a] * k[a] as f64).sum();
        let expect = leray_apply(k, y[q].map(|c| c * kx * I_NEG));
        let ki = g.index_of(k).unwrap();
        for i in 0..g.len() {
            if i == ki {
                for c in 0..3 {
                    assert!((out[i][c] - expect[c]).norm() < 1e-14);
                }
            } else {
                assert!(crate::spectral::field::norm3(&out[i]) < 1e-14);
            }
        }
        let masked = masked_bilinear(&g, &x, RangeMask::F, &y, RangeMask::G, RangeMask::F).unwrap();
        assert_eq!(masked[ki], ZERO3);
    }

    #[test]
    fn matches_direct_sum_for_all_masks() {
        let g = WavenumberGrid::new(4, 8).unwrap();
        let x = random_field(&g, RangeMask::FG, 0.5, 11);
        let y = random_field(&g, RangeMask::FG, 0.5, 12);
        let mut conv = Convolver::new(&g);
        for mx in MASKS {
            for my in MASKS {
                for mo in MASKS {
                    let fast = conv.bilinear(&x, mx, &y, my, mo).unwrap();
                    let slow = direct_bilinear(&g, &x, mx, &y, my, mo).unwrap();
                    let err = fast.rel_diff(&slow);
                    assert!(err <= 1e-12, "{mx:?} {my:?} {mo:?}: {err:e}");
                    assert!(divergence_norm(&g, &fast) < 1e-14 * fast.max_abs_all().max(1.0) * 10.0);
                }
            }
        }
    }

    #[test]
    fn sum_equals_sum_of_parts() {
        let g = WavenumberGrid::new(4, 8).unwrap();
        let x = random_field(&g, RangeMask::FG, 0.5, 1);
        let y = random_field(&g, RangeMask::F, 0.5, 2);
        let mut conv = Convolver::new(&g);
        let pairs = [
            BilinearPair::new(&x, RangeMask::G, &y, RangeMask::F),
            BilinearPair::new(&y, RangeMask::F, &x, RangeMask::FG).with_coeff(-2.5),
        ];
        let joint = conv.bilinear_sum(&pairs, RangeMask::FG).unwrap();
        let mut parts = conv.bilinear(&x, RangeMask::G, &y, RangeMask::F, RangeMask::FG).unwrap();
        let b = conv.bilinear(&y, RangeMask::F, &x, RangeMask::FG, RangeMask::FG).unwrap();
        parts.axpy(-2.5, &b);
        assert!(joint.rel_diff(&parts) < 1e-13);
    }

    #[test]
    fn rejects_mismatched_grid() {
        let g = WavenumberGrid::new(4, 8).unwrap();
        let h = WavenumberGrid::new(4, 10).unwrap();
        let x = SpectralField::zeros(&g);
        let y = SpectralField::zeros(&h);
        assert!(masked_bilinear(&g, &x, RangeMask::F, &y, RangeMask::F, RangeMask::F).is_err());
    }
}
