//! Exact sparse polynomials in the Fourier coefficients.
//!
//! A variable is one component of one mode, numbered `3 * index + component`.
//! `L` acts as `Σ_v R_v ∂/∂x_v` with `R` the quadratic right-hand side, `P`
//! sets every `G` variable to zero. This is only practical on tiny grids and
//! serves as an independent check of the jet oracle and the compiled terms.

use std::collections::HashMap;

use num_complex::Complex64;

use super::Op;
use crate::error::{Error, Result};
use crate::spectral::{LerayProjector, RangeMask, SpectralField, WavenumberGrid};

pub type Var = u32;

/// Sorted list of variables, repeated by multiplicity.
pub type Monomial = Vec<Var>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolyFunction {
    terms: HashMap<Monomial, Complex64>,
}

impl PolyFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        let mut p = Self::zero();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn variable(v: Var) -> Self {
        let mut p = Self::zero();
        p.add_term(vec![v], Complex64::new(1.0, 0.0));
        p
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest total degree, 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, mut mono: Monomial, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        mono.sort_unstable();
        let e = self.terms.entry(mono).or_default();
        *e += c;
    }

    pub fn add_scaled(&mut self, other: &PolyFunction, s: Complex64) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * s);
        }
    }

    pub fn mul(&self, other: &PolyFunction) -> PolyFunction {
        let mut out = PolyFunction::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut m = Vec::with_capacity(ma.len() + mb.len());
                m.extend_from_slice(ma);
                m.extend_from_slice(mb);
                out.add_term(m, ca * cb);
            }
        }
        out
    }

    pub fn derivative(&self, v: Var) -> PolyFunction {
        let mut out = PolyFunction::zero();
        for (m, c) in &self.terms {
            let e = m.iter().filter(|&&x| x == v).count();
            if e == 0 {
                continue;
            }
            let pos = m.iter().position(|&x| x == v).expect("present");
            let mut rest = m.clone();
            rest.remove(pos);
            out.add_term(rest, c * e as f64);
        }
        out
    }

    /// Sets every variable with `zeroed(v)` to 0.
    pub fn substitute_zero(&self, zeroed: impl Fn(Var) -> bool) -> PolyFunction {
        PolyFunction {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| !m.iter().any(|&v| zeroed(v)))
                .map(|(m, c)| (m.clone(), *c))
                .collect(),
        }
    }

    pub fn evaluate(&self, value: impl Fn(Var) -> Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|(m, c)| m.iter().fold(*c, |acc, &v| acc * value(v)))
            .sum()
    }

    /// Value at a spectral state.
    pub fn evaluate_at(&self, x: &SpectralField) -> Complex64 {
        self.evaluate(|v| x[(v / 3) as usize][(v % 3) as usize])
    }
}

pub fn var(index: usize, component: usize) -> Var {
    (3 * index + component) as Var
}

/// `L`, `P` and `Q` acting on polynomials over one grid.
pub struct PolySystem<'g> {
    grid: &'g WavenumberGrid,
    rhs: HashMap<Var, PolyFunction>,
    max_terms: usize,
}

impl<'g> PolySystem<'g> {
    pub fn new(grid: &'g WavenumberGrid, max_terms: usize) -> Self {
        PolySystem {
            grid,
            rhs: HashMap::new(),
            max_terms,
        }
    }

    /// `R_v`, the component of `-i Σ_{p+q=k} (k·x_p) A_k x_q`.
    pub fn rhs(&mut self, v: Var) -> &PolyFunction {
        let grid = self.grid;
        self.rhs.entry(v).or_insert_with(|| {
            let k_idx = (v / 3) as usize;
            let c = (v % 3) as usize;
            let mut out = PolyFunction::zero();
            if grid.is_oddball(k_idx) {
                return out;
            }
            let k = grid.wavevector(k_idx);
            let a = LerayProjector::at(k).matrix;
            let minus_i = Complex64::new(0.0, -1.0);
            for p in 0..grid.len() {
                if grid.is_oddball(p) {
                    continue;
                }
                let pk = grid.wavevector(p);
                let Some(q) = grid.index_of([k[0] - pk[0], k[1] - pk[1], k[2] - pk[2]]) else {
                    continue;
                };
                if grid.is_oddball(q) {
                    continue;
                }
                for (i, &ki) in k.iter().enumerate() {
                    if ki == 0 {
                        continue;
                    }
                    for (j, &acj) in a[c].iter().enumerate() {
                        if acj == 0.0 {
                            continue;
                        }
                        out.add_term(vec![var(p, i), var(q, j)], minus_i * (ki as f64 * acj));
                    }
                }
            }
            out.terms.retain(|_, c| c.norm() > 1e-14);
            out
        })
    }

    fn guard(&self, p: PolyFunction) -> Result<PolyFunction> {
        if p.len() > self.max_terms {
            return Err(Error::PolynomialTooLarge(p.len()));
        }
        Ok(p)
    }

    pub fn apply_l(&mut self, g: &PolyFunction) -> Result<PolyFunction> {
        let mut out = PolyFunction::zero();
        for (m, c) in &g.terms {
            let mut i = 0;
            while i < m.len() {
                let v = m[i];
                let e = m[i..].iter().take_while(|&&x| x == v).count();
                let mut rest = m.clone();
                rest.remove(i);
                let r = self.rhs(v).clone();
                for (rm, rc) in &r.terms {
                    let mut mono = rest.clone();
                    mono.extend_from_slice(rm);
                    out.add_term(mono, c * rc * e as f64);
                }
                i += e;
                if out.len() > self.max_terms {
                    return Err(Error::PolynomialTooLarge(out.len()));
                }
            }
        }
        self.guard(out)
    }

    /// `P L g` without forming the `G`-dependent part of `L g`.
    pub fn apply_pl(&mut self, g: &PolyFunction) -> Result<PolyFunction> {
        let grid = self.grid;
        let resolved = |v: Var| grid.in_mask((v / 3) as usize, RangeMask::F);
        let mut out = PolyFunction::zero();
        for (m, c) in &g.terms {
            let g_vars = m.iter().filter(|&&v| !resolved(v)).count();
            if g_vars > 1 {
                continue;
            }
            let mut i = 0;
            while i < m.len() {
                let v = m[i];
                let e = m[i..].iter().take_while(|&&x| x == v).count();
                i += e;
                if g_vars == 1 && resolved(v) {
                    continue;
                }
                let mut rest = m.clone();
                rest.remove(i - e);
                let r = self.rhs(v).clone();
                for (rm, rc) in &r.terms {
                    if rm.iter().all(|&x| resolved(x)) {
                        let mut mono = rest.clone();
                        mono.extend_from_slice(rm);
                        out.add_term(mono, c * rc * e as f64);
                    }
                }
                if out.len() > self.max_terms {
                    return Err(Error::PolynomialTooLarge(out.len()));
                }
            }
        }
        self.guard(out)
    }

    pub fn apply_p(&self, g: &PolyFunction) -> PolyFunction {
        let grid = self.grid;
        g.substitute_zero(|v| !grid.in_mask((v / 3) as usize, RangeMask::F))
    }

    pub fn apply_q(&self, g: &PolyFunction) -> PolyFunction {
        let mut out = g.clone();
        out.add_scaled(&self.apply_p(g), Complex64::new(-1.0, 0.0));
        out.terms.retain(|_, c| c.norm() != 0.0);
        out
    }

    /// The word applied to the coordinate function `x_v`, read as an
    /// operator product (rightmost letter acts first).
    pub fn apply_word(&mut self, word: &[Op], v: Var) -> Result<PolyFunction> {
        let mut g = PolyFunction::variable(v);
        let mut i = word.len();
        while i > 0 {
            i -= 1;
            g = match word[i] {
                Op::L if i > 0 && word[i - 1] == Op::P => {
                    i -= 1;
                    self.apply_pl(&g)?
                }
                Op::L => self.apply_l(&g)?,
                Op::P => self.apply_p(&g),
                Op::Q => self.guard(self.apply_q(&g))?,
            };
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{eval_word, z_word};
    use crate::spectral::{direct_bilinear, random_field};
    use proptest::prelude::*;

    fn tiny() -> WavenumberGrid {
        WavenumberGrid::new(4, 8).unwrap()
    }

    #[test]
    fn rhs_matches_direct_bilinear() {
        let g = tiny();
        let x = random_field(&g, RangeMask::FG, 0.0, 3);
        let b = direct_bilinear(&g, &x, RangeMask::FG, &x, RangeMask::FG, RangeMask::FG).unwrap();
        let mut sys = PolySystem::new(&g, 1 << 20);
        for idx in 0..g.len() {
            for c in 0..3 {
                let r = sys.rhs(var(idx, c)).evaluate_at(&x);
                assert!((r - b[idx][c]).norm() <= 1e-12, "{idx} {c}");
            }
        }
    }

    #[test]
    fn words_match_jet_oracle() {
        let g = tiny();
        let x = random_field(&g, RangeMask::FG, 0.0, 11);
        let k = g.index_of([1, -1, 2]).unwrap();
        let mut sys = PolySystem::new(&g, 1 << 20);
        let words: Vec<Vec<Op>> = vec![
            vec![Op::P, Op::L],
            vec![Op::P, Op::L, Op::L],
            vec![Op::L, Op::Q, Op::L],
            z_word(0),
        ];
        for w in &words {
            let reference = eval_word(&g, w, &x).unwrap();
            assert!(reference[k].iter().any(|z| z.norm() > 1e-6), "{w:?} vanishes");
            for c in 0..3 {
                let p = sys.apply_word(w, var(k, c)).unwrap();
                let got = p.evaluate_at(&x);
                let want = reference[k][c];
                assert!(
                    (got - want).norm() <= 1e-10 * (1.0 + want.norm()),
                    "{w:?} {c}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn fused_pl_equals_p_after_l() {
        let g = tiny();
        let k = g.index_of([1, -1, 2]).unwrap();
        let mut sys = PolySystem::new(&g, 1 << 22);
        let inner = sys.apply_word(&[Op::Q, Op::L], var(k, 2)).unwrap();
        let fused = sys.apply_pl(&inner).unwrap();
        let lg = sys.apply_l(&inner).unwrap();
        let plain = sys.apply_p(&lg);
        let x = random_field(&g, RangeMask::FG, 0.0, 4);
        let (a, b) = (fused.evaluate_at(&x), plain.evaluate_at(&x));
        assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
        assert_eq!(fused.degree(), 3);
    }

    #[test]
    fn z_degree_and_size_guard() {
        let g = tiny();
        let k = g.index_of([1, -1, 2]).unwrap();
        let mut sys = PolySystem::new(&g, 1 << 20);
        let z0 = sys.apply_word(&z_word(0), var(k, 1)).unwrap();
        assert_eq!(z0.degree(), 3);
        let mut small = PolySystem::new(&g, 50);
        assert!(matches!(
            small.apply_word(&z_word(0), var(k, 0)),
            Err(Error::PolynomialTooLarge(_))
        ));
    }

    fn small_poly() -> impl Strategy<Value = PolyFunction> {
        prop::collection::vec((prop::collection::vec(0u32..6, 0..4), -2.0f64..2.0), 1..6).prop_map(|ts| {
            let mut p = PolyFunction::zero();
            for (m, c) in ts {
                p.add_term(m, Complex64::new(c, 0.5 * c));
            }
            p
        })
    }

    proptest! {
        #[test]
        fn product_rule(a in small_poly(), b in small_poly(), v in 0u32..6, pt in prop::collection::vec(-1.0f64..1.0, 6)) {
            let lhs = a.mul(&b).derivative(v);
            let mut rhs = a.derivative(v).mul(&b);
            rhs.add_scaled(&a.mul(&b.derivative(v)), Complex64::new(1.0, 0.0));
            let at = |v: Var| Complex64::new(pt[v as usize], 0.0);
            let d = lhs.evaluate(at) - rhs.evaluate(at);
            prop_assert!(d.norm() <= 1e-9);
        }

        #[test]
        fn substitution_is_idempotent(a in small_poly()) {
            let once = a.substitute_zero(|v| v % 2 == 1);
            prop_assert_eq!(once.substitute_zero(|v| v % 2 == 1), once);
        }
    }
}
