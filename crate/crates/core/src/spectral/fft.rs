use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Unnormalized 3D complex FFT on an `l^3` cube stored row-major.
///
/// The contiguous axis is transformed in one batched call; the two strided
/// axes are gathered into lines first.
pub struct Fft3 {
    l: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    lines: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Fft3 {
    pub fn new(l: usize, planner: &mut FftPlanner<f64>) -> Self {
        let forward = planner.plan_fft_forward(l);
        let inverse = planner.plan_fft_inverse(l);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Fft3 {
            l,
            forward,
            inverse,
            lines: vec![Complex64::new(0.0, 0.0); l * l * l],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn size(&self) -> usize {
        self.l
    }

    pub fn volume(&self) -> usize {
        self.l * self.l * self.l
    }

    /// `X_k = Σ_j x_j e^{-2πi j·k / l}`.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        let fft = Arc::clone(&self.forward);
        self.transform(fft.as_ref(), data);
    }

    /// `x_j = Σ_k X_k e^{+2πi j·k / l}` (no `1/l^3` factor).
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        let fft = Arc::clone(&self.inverse);
        self.transform(fft.as_ref(), data);
    }

    fn transform(&mut self, fft: &dyn Fft<f64>, data: &mut [Complex64]) {
        let l = self.l;
        assert_eq!(data.len(), l * l * l);
        fft.process_with_scratch(data, &mut self.scratch);

        // axis 1: lines indexed by (i0, i2)
        for i0 in 0..l {
            for i2 in 0..l {
                let line = &mut self.lines[(i0 * l + i2) * l..(i0 * l + i2 + 1) * l];
                for (i1, slot) in line.iter_mut().enumerate() {
                    *slot = data[(i0 * l + i1) * l + i2];
                }
            }
        }
        fft.process_with_scratch(&mut self.lines, &mut self.scratch);
        for i0 in 0..l {
            for i2 in 0..l {
                let line = &self.lines[(i0 * l + i2) * l..(i0 * l + i2 + 1) * l];
                for (i1, v) in line.iter().enumerate() {
                    data[(i0 * l + i1) * l + i2] = *v;
                }
            }
        }

        // axis 0: lines indexed by (i1, i2)
        for i1 in 0..l {
            for i2 in 0..l {
                let line = &mut self.lines[(i1 * l + i2) * l..(i1 * l + i2 + 1) * l];
                for (i0, slot) in line.iter_mut().enumerate() {
                    *slot = data[(i0 * l + i1) * l + i2];
                }
            }
        }
        fft.process_with_scratch(&mut self.lines, &mut self.scratch);
        for i1 in 0..l {
            for i2 in 0..l {
                let line = &self.lines[(i1 * l + i2) * l..(i1 * l + i2 + 1) * l];
                for (i0, v) in line.iter().enumerate() {
                    data[(i0 * l + i1) * l + i2] = *v;
                }
            }
        }
    }
}

/// Smallest even integer `>= n` with no prime factor above 5.
pub fn smooth_size(n: usize) -> usize {
    let mut l = n.max(2);
    loop {
        if l.is_multiple_of(2) && is_smooth(l) {
            return l;
        }
        l += 1;
    }
}

fn is_smooth(mut n: usize) -> bool {
    for p in [2, 3, 5] {
        while n.is_multiple_of(p) {
            n /= p;
        }
    }
    n == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(data: &[Complex64], l: usize, sign: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
        let w = sign * 2.0 * std::f64::consts::PI / l as f64;
        for k0 in 0..l {
            for k1 in 0..l {
                for k2 in 0..l {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j0 in 0..l {
                        for j1 in 0..l {
                            for j2 in 0..l {
                                let ph = w * ((j0 * k0 + j1 * k1 + j2 * k2) % l) as f64;
                                acc += data[(j0 * l + j1) * l + j2] * Complex64::from_polar(1.0, ph);
                            }
                        }
                    }
                    out[(k0 * l + k1) * l + k2] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let mut planner = FftPlanner::new();
        for l in [4, 6] {
            let mut fft = Fft3::new(l, &mut planner);
            let data: Vec<Complex64> = (0..l * l * l)
                .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()))
                .collect();
            let mut fwd = data.clone();
            fft.forward(&mut fwd);
            let expect = naive_dft(&data, l, -1.0);
            for (a, b) in fwd.iter().zip(&expect) {
                assert!((a - b).norm() < 1e-10);
            }
            let mut inv = data.clone();
            fft.inverse(&mut inv);
            let expect = naive_dft(&data, l, 1.0);
            for (a, b) in inv.iter().zip(&expect) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn round_trip() {
        let mut planner = FftPlanner::new();
        let mut fft = Fft3::new(10, &mut planner);
        let data: Vec<Complex64> = (0..1000)
            .map(|i| Complex64::new(i as f64, -(i as f64) / 3.0))
            .collect();
        let mut x = data.clone();
        fft.forward(&mut x);
        fft.inverse(&mut x);
        for (a, b) in x.iter().zip(&data) {
            assert!((a / 1000.0 - b).norm() < 1e-9);
        }
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(16), 16);
        assert_eq!(smooth_size(17), 18);
        assert_eq!(smooth_size(21), 24);
        assert_eq!(smooth_size(13), 16);
        assert_eq!(smooth_size(1), 2);
        assert_eq!(smooth_size(27), 30);
    }
}
