use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Subset of the wavenumber cube: one of `∅`, `F`, `G`, `F∪G`.
///
/// Stored as a two-bit set so that intersection, union and difference are
/// plain bit operations.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RangeMask(u8);

impl RangeMask {
    pub const EMPTY: RangeMask = RangeMask(0);
    pub const F: RangeMask = RangeMask(1);
    pub const G: RangeMask = RangeMask(2);
    pub const FG: RangeMask = RangeMask(3);

    pub fn intersect(self, other: RangeMask) -> RangeMask {
        RangeMask(self.0 & other.0)
    }

    pub fn union(self, other: RangeMask) -> RangeMask {
        RangeMask(self.0 | other.0)
    }

    pub fn difference(self, other: RangeMask) -> RangeMask {
        RangeMask(self.0 & !other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, other: RangeMask) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn has_f(self) -> bool {
        self.0 & 1 != 0
    }

    pub fn has_g(self) -> bool {
        self.0 & 2 != 0
    }

    /// The atomic pieces (`F` and/or `G`) making up this mask.
    pub fn atoms(self) -> impl Iterator<Item = RangeMask> {
        [RangeMask::F, RangeMask::G]
            .into_iter()
            .filter(move |a| self.contains(*a))
    }

    pub fn label(self) -> &'static str {
        match self.0 {
            0 => "0",
            1 => "F",
            2 => "G",
            _ => "FG",
        }
    }

    pub fn parse(s: &str) -> Option<RangeMask> {
        match s.trim() {
            "0" | "∅" => Some(RangeMask::EMPTY),
            "F" => Some(RangeMask::F),
            "G" => Some(RangeMask::G),
            "FG" | "F∪G" | "F+G" => Some(RangeMask::FG),
            _ => None,
        }
    }
}

impl fmt::Debug for RangeMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for RangeMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.0 {
            0 => "∅",
            1 => "F",
            2 => "G",
            _ => "F∪G",
        };
        f.write_str(s)
    }
}

/// Resolved size `n` and total size `m`, the two numbers that identify a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridShape {
    pub n: usize,
    pub m: usize,
}

/// The wavenumber cube `[-M/2, M/2-1]^3` split into the resolved set
/// `F = [-N/2, N/2-1]^3` and its complement `G`.
///
/// Modes are stored in wrap-around FFT order, `index = (i0 * M + i1) * M + i2`.
#[derive(Clone, Debug)]
pub struct WavenumberGrid {
    shape: GridShape,
    wavevectors: Vec<[i32; 3]>,
    class: Vec<RangeMask>,
    negation: Vec<Option<usize>>,
}

impl WavenumberGrid {
    /// Builds the grid; `m_total` must be at least `2 * n_resolved`.
    pub fn new(n_resolved: usize, m_total: usize) -> Result<Self> {
        if n_resolved < 2 || !n_resolved.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "resolved size {n_resolved} must be even and at least 2"
            )));
        }
        if !m_total.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "total size {m_total} must be even"
            )));
        }
        if m_total < 2 * n_resolved {
            return Err(Error::InvalidGrid(format!(
                "total size {m_total} is smaller than 2 x resolved size {n_resolved}; \
                 quadratic interactions out of F would alias"
            )));
        }
        let m = m_total;
        let half = (n_resolved / 2) as i32;
        let len = m * m * m;
        let mut wavevectors = Vec::with_capacity(len);
        let mut class = Vec::with_capacity(len);
        for i0 in 0..m {
            for i1 in 0..m {
                for i2 in 0..m {
                    let k = [freq(i0, m), freq(i1, m), freq(i2, m)];
                    let in_f = k.iter().all(|&c| c >= -half && c < half);
                    wavevectors.push(k);
                    class.push(if in_f { RangeMask::F } else { RangeMask::G });
                }
            }
        }
        let shape = GridShape {
            n: n_resolved,
            m: m_total,
        };
        let mut grid = WavenumberGrid {
            shape,
            wavevectors,
            class,
            negation: Vec::new(),
        };
        grid.negation = (0..len)
            .map(|i| {
                let k = grid.wavevectors[i];
                grid.index_of([-k[0], -k[1], -k[2]])
            })
            .collect();
        Ok(grid)
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn n_resolved(&self) -> usize {
        self.shape.n
    }

    pub fn m_total(&self) -> usize {
        self.shape.m
    }

    /// Number of modes in `F ∪ G`.
    pub fn len(&self) -> usize {
        self.wavevectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavevectors.is_empty()
    }

    pub fn wavevector(&self, index: usize) -> [i32; 3] {
        self.wavevectors[index]
    }

    pub fn wavevectors(&self) -> &[[i32; 3]] {
        &self.wavevectors
    }

    pub fn index_of(&self, k: [i32; 3]) -> Option<usize> {
        let m = self.shape.m as i32;
        let lo = -m / 2;
        let hi = m / 2 - 1;
        if k.iter().any(|&c| c < lo || c > hi) {
            return None;
        }
        let wrap = |c: i32| c.rem_euclid(m) as usize;
        let m = self.shape.m;
        Some((wrap(k[0]) * m + wrap(k[1])) * m + wrap(k[2]))
    }

    /// `F` or `G` for the given mode.
    pub fn class(&self, index: usize) -> RangeMask {
        self.class[index]
    }

    pub fn in_mask(&self, index: usize, mask: RangeMask) -> bool {
        mask.contains(self.class[index])
    }

    /// Grid index of `-k`, or `None` for the oddball modes with a `-M/2` component.
    pub fn negation(&self, index: usize) -> Option<usize> {
        self.negation[index]
    }

    pub fn is_oddball(&self, index: usize) -> bool {
        self.negation[index].is_none()
    }

    /// Modes of `F` whose negation lies in `G` (a component equal to `-N/2`).
    pub fn is_resolved_boundary(&self, index: usize) -> bool {
        self.class[index] == RangeMask::F
            && self.negation[index].is_some_and(|j| self.class[j] == RangeMask::G)
    }

    pub fn indices(&self, mask: RangeMask) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| mask.contains(self.class[i]))
    }

    pub fn count(&self, mask: RangeMask) -> usize {
        self.indices(mask).count()
    }

    /// Half-width `h` of the smallest centred box `[-h, h-1]^3` containing `mask`.
    pub fn half_extent(&self, mask: RangeMask) -> usize {
        if mask.has_g() {
            self.shape.m / 2
        } else if mask.has_f() {
            self.shape.n / 2
        } else {
            0
        }
    }
}

fn freq(i: usize, m: usize) -> i32 {
    if i < m / 2 {
        i as i32
    } else {
        i as i32 - m as i32
    }
}

/// The incompressibility projector `A_k = I - k k^T / |k|^2` (`A_0 = I`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LerayProjector {
    pub matrix: [[f64; 3]; 3],
}

impl LerayProjector {
    pub fn at(k: [i32; 3]) -> Self {
        let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
        let k2 = kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2];
        let mut matrix = [[0.0; 3]; 3];
        for (a, row) in matrix.iter_mut().enumerate() {
            for (b, entry) in row.iter_mut().enumerate() {
                let id = if a == b { 1.0 } else { 0.0 };
                *entry = if k2 == 0.0 { id } else { id - kf[a] * kf[b] / k2 };
            }
        }
        LerayProjector { matrix }
    }

    pub fn apply(&self, v: [Complex64; 3]) -> [Complex64; 3] {
        let m = &self.matrix;
        std::array::from_fn(|a| v[0] * m[a][0] + v[1] * m[a][1] + v[2] * m[a][2])
    }
}

/// `A_k v`, computed without forming the matrix.
#[inline]
pub fn leray_apply(k: [i32; 3], v: [Complex64; 3]) -> [Complex64; 3] {
    let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
    let k2 = kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2];
    if k2 == 0.0 {
        return v;
    }
    let dot = v[0] * kf[0] + v[1] * kf[1] + v[2] * kf[2];
    let s = dot / k2;
    [v[0] - s * kf[0], v[1] - s * kf[1], v[2] - s * kf[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn cardinalities() {
        let g = WavenumberGrid::new(4, 8).unwrap();
        assert_eq!(g.count(RangeMask::F), 64);
        assert_eq!(g.count(RangeMask::G), 448);
        assert_eq!(g.count(RangeMask::FG), 512);
        assert_eq!(g.count(RangeMask::EMPTY), 0);
    }

    #[test]
    fn ranges_follow_fft_order() {
        let g = WavenumberGrid::new(8, 16).unwrap();
        let f: Vec<_> = g.indices(RangeMask::F).map(|i| g.wavevector(i)).collect();
        let lo = f.iter().flat_map(|k| k.iter()).min().unwrap();
        let hi = f.iter().flat_map(|k| k.iter()).max().unwrap();
        assert_eq!((*lo, *hi), (-4, 3));
        let all = g.wavevectors();
        let lo = all.iter().flat_map(|k| k.iter()).min().unwrap();
        let hi = all.iter().flat_map(|k| k.iter()).max().unwrap();
        assert_eq!((*lo, *hi), (-8, 7));
        assert_eq!(g.wavevector(1), [0, 0, 1]);
        assert_eq!(g.wavevector(15), [0, 0, -1]);
        for i in 0..g.len() {
            assert_eq!(g.index_of(g.wavevector(i)), Some(i));
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(WavenumberGrid::new(4, 6).is_err());
        assert!(WavenumberGrid::new(3, 8).is_err());
        assert!(WavenumberGrid::new(4, 9).is_err());
        assert!(WavenumberGrid::new(0, 8).is_err());
        assert!(WavenumberGrid::new(4, 12).is_ok());
    }

    #[test]
    fn oddballs_and_boundary() {
        let g = WavenumberGrid::new(4, 8).unwrap();
        let odd = g.index_of([-4, 0, 1]).unwrap();
        assert!(g.is_oddball(odd));
        let b = g.index_of([-2, 1, 0]).unwrap();
        assert!(g.is_resolved_boundary(b));
        let inner = g.index_of([-1, 1, 0]).unwrap();
        assert!(!g.is_resolved_boundary(inner));
        assert_eq!(g.negation(inner), g.index_of([1, -1, 0]));
    }

    #[test]
    fn mask_algebra() {
        assert_eq!(RangeMask::FG.difference(RangeMask::F), RangeMask::G);
        assert_eq!(RangeMask::F.intersect(RangeMask::G), RangeMask::EMPTY);
        assert!(RangeMask::F.intersect(RangeMask::G).is_empty());
        assert_eq!(RangeMask::F.union(RangeMask::G), RangeMask::FG);
        assert_eq!(RangeMask::FG.atoms().count(), 2);
        for m in [RangeMask::EMPTY, RangeMask::F, RangeMask::G, RangeMask::FG] {
            assert_eq!(RangeMask::parse(m.label()), Some(m));
        }
    }

    #[test]
    fn leray_examples() {
        let z = Complex64::new(0.0, 0.0);
        assert_eq!(leray_apply([1, 0, 0], [c(1.0), z, z]), [z, z, z]);
        assert_eq!(leray_apply([1, 0, 0], [z, c(1.0), z]), [z, c(1.0), z]);
        let r = leray_apply([1, 1, 0], [c(1.0), z, z]);
        assert!((r[0] - c(0.5)).norm() < 1e-15);
        assert!((r[1] - c(-0.5)).norm() < 1e-15);
        assert!(r[2].norm() < 1e-15);
        assert_eq!(leray_apply([0, 0, 0], [c(1.0), c(2.0), z]), [c(1.0), c(2.0), z]);
    }

    #[test]
    fn projector_matrix_properties() {
        for k in [[1, 0, 0], [1, 2, -3], [-4, 3, 1], [0, 0, 0]] {
            let a = LerayProjector::at(k).matrix;
            for i in 0..3 {
                for j in 0..3 {
                    assert!((a[i][j] - a[j][i]).abs() < 1e-15);
                    let sq: f64 = (0..3).map(|l| a[i][l] * a[l][j]).sum();
                    assert!((sq - a[i][j]).abs() < 1e-14);
                }
                if k != [0, 0, 0] {
                    let ak: f64 = (0..3).map(|l| a[i][l] * k[l] as f64).sum();
                    assert!(ak.abs() < 1e-14);
                }
            }
            let v = [c(0.3), Complex64::new(-1.0, 2.0), c(4.0)];
            let direct = LerayProjector::at(k).apply(v);
            let fast = leray_apply(k, v);
            for a in 0..3 {
                assert!((direct[a] - fast[a]).norm() < 1e-14);
            }
        }
    }
}
