//! Reference values for operator words such as `P L (Q L)^n Q L u`.
//!
//! `Q` is expanded as `I - P`, so every word becomes a signed sum of
//! `X0 L^a1 X1 L^a2 ... L^am Xm u` with `X_i ∈ {I, P}`. Such a word equals
//! `∂^a1_t1 ... ∂^am_tm Xm y_m` at zero, where `y_1 = φ_t1(X0 x)`,
//! `y_{i+1} = φ_t{i+1}(X_i y_i)` and `φ` is the flow of `du/dt = R(u)`.
//! Flows are expanded as truncated Taylor series,
//! `c_{j+1} = (1/(j+1)) Σ_{a+b=j} b(c_a, c_b)`, with coefficients that are
//! themselves series in the earlier times. The bilinear kernel is the direct
//! double sum, so nothing here shares code with the FFT path.

use super::Op;
use crate::error::{Error, Result};
use crate::spectral::{direct_bilinear, RangeMask, SpectralField, WavenumberGrid};

/// Words longer than this are refused.
pub const MAX_WORD_L: usize = 8;

/// `Q`-free word in the form `X0 L^a1 X1 ... L^am Xm` (`true` = `P`).
#[derive(Clone, Debug, PartialEq, Eq)]
struct Segmented {
    projections: Vec<bool>,
    powers: Vec<usize>,
}

fn expand_q(word: &[Op]) -> Vec<(f64, Vec<Op>)> {
    let mut out = vec![(1.0, Vec::new())];
    for op in word {
        match op {
            Op::Q => {
                let mut next = Vec::with_capacity(out.len() * 2);
                for (s, w) in out {
                    let mut with_p = w.clone();
                    with_p.push(Op::P);
                    next.push((s, w));
                    next.push((-s, with_p));
                }
                out = next;
            }
            other => {
                for (_, w) in &mut out {
                    w.push(*other);
                }
            }
        }
    }
    out
}

fn segment(word: &[Op]) -> Segmented {
    let mut projections = vec![false];
    let mut powers = Vec::new();
    let mut run = 0;
    for op in word {
        match op {
            Op::L => run += 1,
            Op::P => {
                if run > 0 {
                    powers.push(run);
                    projections.push(false);
                    run = 0;
                }
                *projections.last_mut().unwrap() = true;
            }
            Op::Q => unreachable!("Q expanded before segmentation"),
        }
    }
    if run > 0 {
        powers.push(run);
        projections.push(false);
    }
    Segmented {
        projections,
        powers,
    }
}

/// Truncated multivariate Taylor series with field coefficients.
struct Jet {
    dims: Vec<usize>,
    coeffs: Vec<SpectralField>,
}

impl Jet {
    fn constant(x: SpectralField) -> Self {
        Jet {
            dims: Vec::new(),
            coeffs: vec![x],
        }
    }

    fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for d in (0..self.dims.len()).rev() {
            idx[d] = flat % (self.dims[d] + 1);
            flat /= self.dims[d] + 1;
        }
        idx
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| acc * (d + 1) + i)
    }

    fn restrict(&mut self, grid: &WavenumberGrid) {
        for c in &mut self.coeffs {
            c.restrict(grid, RangeMask::F);
        }
    }

    /// Truncated product `b(self, other)` with both on the same dims.
    fn bilinear(&self, other: &Jet, grid: &WavenumberGrid) -> Result<Jet> {
        let mut coeffs = vec![SpectralField::zeros(grid); self.coeffs.len()];
        for (a, ca) in self.coeffs.iter().enumerate() {
            if ca.max_abs_all() == 0.0 {
                continue;
            }
            let ia = self.multi_index(a);
            for (b, cb) in other.coeffs.iter().enumerate() {
                if cb.max_abs_all() == 0.0 {
                    continue;
                }
                let ib = self.multi_index(b);
                let sum: Vec<usize> = ia.iter().zip(&ib).map(|(x, y)| x + y).collect();
                if sum.iter().zip(&self.dims).any(|(s, d)| s > d) {
                    continue;
                }
                let prod = direct_bilinear(grid, ca, RangeMask::FG, cb, RangeMask::FG, RangeMask::FG)?;
                coeffs[self.flat(&sum)].add(&prod);
            }
        }
        Ok(Jet {
            dims: self.dims.clone(),
            coeffs,
        })
    }

    /// `φ_t(self)` to degree `degree` in a new trailing variable `t`.
    fn flow(self, degree: usize, grid: &WavenumberGrid) -> Result<Jet> {
        let mut terms: Vec<Jet> = vec![self];
        for j in 0..degree {
            let mut next: Option<Jet> = None;
            for a in 0..=j {
                let p = terms[a].bilinear(&terms[j - a], grid)?;
                next = Some(match next {
                    None => p,
                    Some(mut acc) => {
                        for (x, y) in acc.coeffs.iter_mut().zip(&p.coeffs) {
                            x.add(y);
                        }
                        acc
                    }
                });
            }
            let mut next = next.expect("at least one product");
            for c in &mut next.coeffs {
                c.scale(1.0 / (j + 1) as f64);
            }
            terms.push(next);
        }
        let inner = terms[0].dims.clone();
        let inner_len = terms[0].coeffs.len();
        let mut dims = inner;
        dims.push(degree);
        let mut coeffs = Vec::with_capacity(inner_len * (degree + 1));
        for i in 0..inner_len {
            for t in &terms {
                coeffs.push(t.coeffs[i].clone());
            }
        }
        Ok(Jet { dims, coeffs })
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn eval_segmented(grid: &WavenumberGrid, word: &Segmented, x: &SpectralField) -> Result<SpectralField> {
    let mut start = x.clone();
    if word.projections[0] {
        start.restrict(grid, RangeMask::F);
    }
    let mut jet = Jet::constant(start);
    for (i, &a) in word.powers.iter().enumerate() {
        if i > 0 && word.projections[i] {
            jet.restrict(grid);
        }
        jet = jet.flow(a, grid)?;
    }
    let top: Vec<usize> = word.powers.clone();
    let mut out = jet.coeffs[jet.flat(&top)].clone();
    if *word.projections.last().unwrap() && !word.powers.is_empty() {
        out.restrict(grid, RangeMask::F);
    }
    let scale: f64 = word.powers.iter().map(|&a| factorial(a)).product();
    out.scale(scale);
    Ok(out)
}

/// Value of the operator word (applied to the coordinate functions `u_k`)
/// at the state `x`, for every `k ∈ F ∪ G`.
///
/// `word` is read left to right as an operator product, so
/// `[P, L, Q, L]` is `P L Q L u`.
pub fn eval_word(grid: &WavenumberGrid, word: &[Op], x: &SpectralField) -> Result<SpectralField> {
    x.check_grid(grid)?;
    let l_count = word.iter().filter(|o| **o == Op::L).count();
    if l_count > MAX_WORD_L {
        return Err(Error::OrderBound {
            requested: l_count,
            bound: MAX_WORD_L,
        });
    }
    let mut out = SpectralField::zeros(grid);
    for (sign, w) in expand_q(word) {
        let seg = segment(&w);
        let v = eval_segmented(grid, &seg, x)?;
        out.axpy(sign, &v);
    }
    Ok(out)
}

/// `P L (Q L)^n Q L`.
pub fn z_word(n: usize) -> Vec<Op> {
    let mut w = vec![Op::P, Op::L];
    for _ in 0..n {
        w.extend([Op::Q, Op::L]);
    }
    w.extend([Op::Q, Op::L]);
    w
}

/// Reference `Z^n(û)` on `F ∪ G`.
pub fn poly_oracle_z(grid: &WavenumberGrid, n: usize, u: &SpectralField) -> Result<SpectralField> {
    eval_word(grid, &z_word(n), u)
}
