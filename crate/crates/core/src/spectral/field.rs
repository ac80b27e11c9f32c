use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grid::{leray_apply, GridShape, RangeMask, WavenumberGrid};
use crate::error::{Error, Result};

pub type Vec3 = [Complex64; 3];

pub const ZERO3: Vec3 = [Complex64::new(0.0, 0.0); 3];

/// Complex 3-vector Fourier coefficients on every mode of `F ∪ G`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    shape: GridShape,
    data: Vec<Vec3>,
}

impl SpectralField {
    pub fn zeros(grid: &WavenumberGrid) -> Self {
        SpectralField {
            shape: grid.shape(),
            data: vec![ZERO3; grid.len()],
        }
    }

    pub fn from_data(grid: &WavenumberGrid, data: Vec<Vec3>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                data.len()
            )));
        }
        Ok(SpectralField {
            shape: grid.shape(),
            data,
        })
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Vec3] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Vec3] {
        &mut self.data
    }

    pub fn check_grid(&self, grid: &WavenumberGrid) -> Result<()> {
        self.check_shape(grid.shape())
    }

    pub fn check_shape(&self, shape: GridShape) -> Result<()> {
        if self.shape != shape {
            return Err(Error::GridMismatch {
                expected: (shape.n, shape.m),
                found: (self.shape.n, self.shape.m),
            });
        }
        Ok(())
    }

    /// Copy with every mode outside `mask` set to zero.
    pub fn restricted(&self, grid: &WavenumberGrid, mask: RangeMask) -> SpectralField {
        let mut out = self.clone();
        out.restrict(grid, mask);
        out
    }

    pub fn restrict(&mut self, grid: &WavenumberGrid, mask: RangeMask) {
        for (i, v) in self.data.iter_mut().enumerate() {
            if !grid.in_mask(i, mask) {
                *v = ZERO3;
            }
        }
    }

    /// Largest coefficient magnitude over the modes in `mask`.
    pub fn max_abs(&self, grid: &WavenumberGrid, mask: RangeMask) -> f64 {
        grid.indices(mask)
            .map(|i| norm3(&self.data[i]))
            .fold(0.0, f64::max)
    }

    pub fn max_abs_all(&self) -> f64 {
        self.data.iter().map(norm3).fold(0.0, f64::max)
    }

    /// `sqrt(Σ|u_k|²)` over all modes.
    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(norm3_sqr).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|v| v.iter().all(|c| c.re.is_finite() && c.im.is_finite()))
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            for c in v.iter_mut() {
                *c *= s;
            }
        }
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &SpectralField) {
        debug_assert_eq!(self.shape, x.shape);
        for (v, w) in self.data.iter_mut().zip(&x.data) {
            for c in 0..3 {
                v[c] += w[c] * a;
            }
        }
    }

    pub fn add(&mut self, x: &SpectralField) {
        self.axpy(1.0, x);
    }

    pub fn sub(&mut self, x: &SpectralField) {
        self.axpy(-1.0, x);
    }

    /// `a * x + b * y` as a new field.
    pub fn lincomb(a: f64, x: &SpectralField, b: f64, y: &SpectralField) -> SpectralField {
        let mut out = x.scaled(a);
        out.axpy(b, y);
        out
    }

    pub fn set_zero(&mut self) {
        self.data.fill(ZERO3);
    }

    /// Maximum difference normalized by the larger of the two maxima.
    pub fn rel_diff(&self, other: &SpectralField) -> f64 {
        let scale = self.max_abs_all().max(other.max_abs_all());
        let diff = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| norm3(&sub3(a, b)))
            .fold(0.0, f64::max);
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

impl Index<usize> for SpectralField {
    type Output = Vec3;

    fn index(&self, i: usize) -> &Vec3 {
        &self.data[i]
    }
}

impl IndexMut<usize> for SpectralField {
    fn index_mut(&mut self, i: usize) -> &mut Vec3 {
        &mut self.data[i]
    }
}

pub fn norm3_sqr(v: &Vec3) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr()
}

pub fn norm3(v: &Vec3) -> f64 {
    norm3_sqr(v).sqrt()
}

fn sub3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn k_dot(k: [i32; 3], v: &Vec3) -> Complex64 {
    v[0] * k[0] as f64 + v[1] * k[1] as f64 + v[2] * k[2] as f64
}

/// Spectral coefficients of `(sin x cos y cos z, -cos x sin y cos z, 0)`.
pub fn taylor_green_field(grid: &WavenumberGrid) -> Result<SpectralField> {
    if grid.n_resolved() < 4 {
        return Err(Error::InvalidGrid(format!(
            "Taylor-Green modes need N >= 4, got {}",
            grid.n_resolved()
        )));
    }
    let mut u = SpectralField::zeros(grid);
    for s1 in [-1, 1] {
        for s2 in [-1, 1] {
            for s3 in [-1, 1] {
                let i = grid
                    .index_of([s1, s2, s3])
                    .expect("unit modes lie on every grid");
                u[i] = [
                    Complex64::new(0.0, -(s1 as f64) / 8.0),
                    Complex64::new(0.0, s2 as f64 / 8.0),
                    Complex64::new(0.0, 0.0),
                ];
            }
        }
    }
    Ok(u)
}

/// `max_k |k · u_k|`.
pub fn divergence_norm(grid: &WavenumberGrid, field: &SpectralField) -> f64 {
    field
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, v)| k_dot(grid.wavevector(i), v).norm())
        .fold(0.0, f64::max)
}

pub fn project_divergence_free(grid: &WavenumberGrid, field: &SpectralField) -> SpectralField {
    let mut out = field.clone();
    project_in_place(grid, &mut out);
    out
}

pub fn project_in_place(grid: &WavenumberGrid, field: &mut SpectralField) {
    for (i, v) in field.as_mut_slice().iter_mut().enumerate() {
        *v = leray_apply(grid.wavevector(i), *v);
    }
}

/// Symmetrizes `u_k <- (u_k + conj(u_-k)) / 2` and zeroes the oddball modes.
pub fn hermitian_enforce(grid: &WavenumberGrid, field: &SpectralField) -> SpectralField {
    let mut out = field.clone();
    hermitian_enforce_in_place(grid, &mut out);
    out
}

pub fn hermitian_enforce_in_place(grid: &WavenumberGrid, field: &mut SpectralField) {
    let src = field.clone();
    for i in 0..grid.len() {
        field[i] = match grid.negation(i) {
            None => ZERO3,
            Some(j) => {
                let a = src[i];
                let b = src[j];
                std::array::from_fn(|c| (a[c] + b[c].conj()) * 0.5)
            }
        };
    }
}

/// Largest violation of `u_-k = conj(u_k)` plus the largest oddball magnitude.
pub fn hermitian_defect(grid: &WavenumberGrid, field: &SpectralField) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        let v = &field[i];
        let d = match grid.negation(i) {
            None => norm3(v),
            Some(j) => {
                let w = &field[j];
                let conj = [w[0].conj(), w[1].conj(), w[2].conj()];
                norm3(&sub3(v, &conj))
            }
        };
        worst = worst.max(d);
    }
    worst
}

/// Puts a field into the reduced state space: `G` modes, the mean, the
/// oddballs and the `F` modes carrying a `-N/2` component are zeroed, then
/// the rest is symmetrized.
///
/// The `-N/2` modes of `F` have their conjugate partner in `G`, so a real
/// field supported on `F` cannot excite them.
pub fn reduced_state(grid: &WavenumberGrid, field: &mut SpectralField) {
    for i in 0..grid.len() {
        let k = grid.wavevector(i);
        if !grid.in_mask(i, RangeMask::F) || grid.is_resolved_boundary(i) || k == [0, 0, 0] {
            field[i] = ZERO3;
        }
    }
    hermitian_enforce_in_place(grid, field);
}

/// Random real, incompressible, zero-mean field supported on `support`.
///
/// Coefficients are drawn uniformly from the unit box, damped by
/// `|k|^-decay`, then projected and symmetrized. With `support = F` the
/// field is a valid reduced state.
pub fn random_field(
    grid: &WavenumberGrid,
    support: RangeMask,
    decay: f64,
    seed: u64,
) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = SpectralField::zeros(grid);
    for i in grid.indices(support) {
        let k = grid.wavevector(i);
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        if k2 == 0.0 {
            continue;
        }
        let damp = k2.powf(-decay / 2.0);
        u[i] = std::array::from_fn(|_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * damp
        });
    }
    project_in_place(grid, &mut u);
    if support == RangeMask::F {
        reduced_state(grid, &mut u);
    } else {
        hermitian_enforce_in_place(grid, &mut u);
        u.restrict(grid, support);
        hermitian_enforce_in_place(grid, &mut u);
    }
    u
}
