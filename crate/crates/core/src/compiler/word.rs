//! Factored form of model terms: sums of `b(A|ρ, B|σ)` where `A`, `B` are
//! operator words applied to `U`.
//!
//! Words are normalized to the basis `P L (s L)* U` with `s ∈ {P, Q}`, which
//! names the familiar intermediates: `PU = û`, `PLU = R̂`, `PLPLU = B`,
//! `PL(QL)^j QLU = Z^j`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use super::tree::{ExprTree, TermSum};
use super::Op;
use crate::error::{Error, Result};
use crate::spectral::RangeMask;

/// Largest `n` accepted by [`generate_z`].
pub const MAX_ORDER: usize = 6;

/// `(W U)|mask`; an empty word is the coordinate field itself.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub word: Vec<Op>,
    pub mask: RangeMask,
}

impl Atom {
    pub fn u(mask: RangeMask) -> Self {
        Atom {
            word: Vec::new(),
            mask,
        }
    }

    pub fn new(word: Vec<Op>, mask: RangeMask) -> Self {
        Atom { word, mask }
    }

    /// Number of `L` letters.
    pub fn order(&self) -> usize {
        self.word.iter().filter(|o| **o == Op::L).count()
    }

    /// Polynomial degree in `U`.
    pub fn degree(&self) -> usize {
        self.order() + 1
    }

    pub fn is_u(&self) -> bool {
        self.word.is_empty()
    }

    pub fn with_mask(&self, mask: RangeMask) -> Atom {
        Atom {
            word: self.word.clone(),
            mask,
        }
    }

    /// `op` applied on the left, using `PP = P`, `QQ = Q`, `PQ = QP = 0`
    /// and `P U|ρ = U|ρ∩F`, `Q U|ρ = U|ρ∩G`.
    pub fn prefixed(&self, op: Op) -> Option<Atom> {
        if self.is_u() {
            let mask = match op {
                Op::P => self.mask.intersect(RangeMask::F),
                Op::Q => self.mask.intersect(RangeMask::G),
                Op::L => return Some(Atom::new(vec![Op::L], self.mask)),
            };
            return (!mask.is_empty()).then(|| Atom::u(mask));
        }
        match (op, self.word[0]) {
            (Op::P, Op::P) | (Op::Q, Op::Q) => Some(self.clone()),
            (Op::P, Op::Q) | (Op::Q, Op::P) => None,
            _ => {
                let mut word = Vec::with_capacity(self.word.len() + 1);
                word.push(op);
                word.extend_from_slice(&self.word);
                Some(Atom::new(word, self.mask))
            }
        }
    }

    /// Rewrites `... L L ...` as `... L P L ... + ... L Q L ...` until the
    /// word is in the basis form.
    pub fn to_basis(&self) -> Vec<Atom> {
        for i in 0..self.word.len().saturating_sub(1) {
            if self.word[i] == Op::L && self.word[i + 1] == Op::L {
                let mut out = Vec::new();
                for s in [Op::P, Op::Q] {
                    let mut w = self.word.clone();
                    w.insert(i + 1, s);
                    out.extend(Atom::new(w, self.mask).to_basis());
                }
                return out;
            }
        }
        vec![self.clone()]
    }

    /// Short name for plans and listings.
    pub fn name(&self) -> String {
        word_name(&self.word)
    }
}

/// `u`, `R`, `B`, `Z0`, `Z1`, ... for the named words, else the letters.
pub fn word_name(word: &[Op]) -> String {
    if word.is_empty() {
        return "u".into();
    }
    if word == [Op::P, Op::L] {
        return "R".into();
    }
    if word == [Op::P, Op::L, Op::P, Op::L] {
        return "B".into();
    }
    if let Some(j) = z_index(word) {
        return format!("Z{j}");
    }
    word.iter().map(|o| o.to_string()).collect()
}

fn z_index(word: &[Op]) -> Option<usize> {
    // P L (Q L)^{j+1}
    if word.len() < 4 || !word.len().is_multiple_of(2) || word[0] != Op::P || word[1] != Op::L {
        return None;
    }
    let tail_ok = word[2..].chunks(2).all(|c| c == [Op::Q, Op::L]);
    tail_ok.then(|| word.len() / 2 - 2)
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.name(), self.mask.label())
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Integer combination of bilinear terms `b(left, right)`.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct FactoredSum {
    terms: BTreeMap<(Atom, Atom), i64>,
}

impl FactoredSum {
    pub fn new() -> Self {
        FactoredSum::default()
    }

    /// `L U = b(U|F∪G, U|F∪G)`.
    pub fn rhs() -> Self {
        let mut s = FactoredSum::new();
        s.push(Atom::u(RangeMask::FG), Atom::u(RangeMask::FG), 1);
        s
    }

    pub fn push(&mut self, left: Atom, right: Atom, coeff: i64) {
        if coeff == 0 || left.mask.is_empty() || right.mask.is_empty() {
            return;
        }
        match self.terms.entry((left, right)) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if *o.get() == 0 {
                    o.remove();
                }
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Atom, &Atom, i64)> {
        self.terms.iter().map(|((a, b), c)| (a, b, *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Applies one operator to the function `k -> Σ c b(A, B)_k`.
    pub fn apply(&self, op: Op) -> FactoredSum {
        let mut out = FactoredSum::new();
        for (a, b, c) in self.iter() {
            match op {
                Op::L => {
                    out.push(a.prefixed(Op::L).unwrap(), b.clone(), c);
                    out.push(a.clone(), b.prefixed(Op::L).unwrap(), c);
                }
                Op::P => {
                    if let (Some(pa), Some(pb)) = (a.prefixed(Op::P), b.prefixed(Op::P)) {
                        out.push(pa, pb, c);
                    }
                }
                Op::Q => {
                    // b(X, Y) - b(PX, PY) = b(QX, Y) + b(PX, QY)
                    if let Some(qa) = a.prefixed(Op::Q) {
                        out.push(qa, b.clone(), c);
                    }
                    if let (Some(pa), Some(qb)) = (a.prefixed(Op::P), b.prefixed(Op::Q)) {
                        out.push(pa, qb, c);
                    }
                }
            }
        }
        out
    }

    /// Basis words and atomic masks, like terms merged.
    pub fn canonical(&self) -> FactoredSum {
        let mut out = FactoredSum::new();
        for (a, b, c) in self.iter() {
            for ab in a.to_basis() {
                for bb in b.to_basis() {
                    for ma in ab.mask.atoms() {
                        for mb in bb.mask.atoms() {
                            out.push(ab.with_mask(ma), bb.with_mask(mb), c);
                        }
                    }
                }
            }
        }
        out
    }

    /// Groups atomic terms back into unit sums over `F`, `G` or `F ∪ G`.
    ///
    /// For each atom pair the slot whose atom has more `L` letters is merged
    /// first (left on ties), then the other slot.
    pub fn pack(&self) -> Vec<PackedSum> {
        let canon = self.canonical();
        let mut groups: BTreeMap<(Atom, Atom), [[i64; 2]; 2]> = BTreeMap::new();
        for (a, b, c) in canon.iter() {
            let key = (a.with_mask(RangeMask::FG), b.with_mask(RangeMask::FG));
            let cell = groups.entry(key).or_insert([[0; 2]; 2]);
            cell[slot(a.mask)][slot(b.mask)] += c;
        }
        let mut out = Vec::new();
        for ((a, b), mut counts) in groups {
            let left_first = a.order() >= b.order();
            let mut emit = |ma: RangeMask, mb: RangeMask, coeff: i64| {
                out.push(PackedSum {
                    coeff,
                    left: a.with_mask(ma),
                    right: b.with_mask(mb),
                });
            };
            let merge_left = |counts: &mut [[i64; 2]; 2], emit: &mut dyn FnMut(RangeMask, RangeMask, i64)| {
                for j in 0..2 {
                    while let Some(s) = common_sign(counts[0][j], counts[1][j]) {
                        emit(RangeMask::FG, atom_of(j), s);
                        counts[0][j] -= s;
                        counts[1][j] -= s;
                    }
                }
            };
            let merge_right = |counts: &mut [[i64; 2]; 2], emit: &mut dyn FnMut(RangeMask, RangeMask, i64)| {
                for i in 0..2 {
                    while let Some(s) = common_sign(counts[i][0], counts[i][1]) {
                        emit(atom_of(i), RangeMask::FG, s);
                        counts[i][0] -= s;
                        counts[i][1] -= s;
                    }
                }
            };
            if left_first {
                merge_left(&mut counts, &mut emit);
                merge_right(&mut counts, &mut emit);
            } else {
                merge_right(&mut counts, &mut emit);
                merge_left(&mut counts, &mut emit);
            }
            for (i, row) in counts.iter().enumerate() {
                for (j, &c) in row.iter().enumerate() {
                    let s = c.signum();
                    for _ in 0..c.abs() {
                        emit(atom_of(i), atom_of(j), s);
                    }
                }
            }
        }
        out.sort_by_key(|p| {
            let min = p.left.order().min(p.right.order());
            (std::cmp::Reverse(min), std::cmp::Reverse(p.left.order()), p.clone())
        });
        out
    }

    /// Trees obtained by expanding every atom down to `U` leaves, with the
    /// outer range `out`.
    pub fn to_trees(&self, out: RangeMask) -> Result<TermSum> {
        let mut cache = BTreeMap::new();
        let mut sum = TermSum::new();
        for (a, b, c) in self.iter() {
            let ta = atom_trees(a, &mut cache)?;
            let tb = atom_trees(b, &mut cache)?;
            for (x, cx) in ta.iter() {
                for (y, cy) in tb.iter() {
                    sum.push(ExprTree::node(out, x.clone(), y.clone()), c * cx * cy);
                }
            }
        }
        Ok(sum.simplify())
    }

    /// Terms annihilated by a further `P`, with the reason.
    pub fn killed_by_p(&self) -> Vec<(Atom, Atom, i64, Kill)> {
        let mut out = Vec::new();
        for (a, b, c) in self.iter() {
            let pa = a.prefixed(Op::P);
            let pb = b.prefixed(Op::P);
            if pa.is_some() && pb.is_some() {
                continue;
            }
            let unresolved = |x: &Atom| x.is_u() && x.mask.intersect(RangeMask::F).is_empty();
            let reason = if unresolved(a) || unresolved(b) {
                Kill::UnresolvedLeaf
            } else {
                Kill::Complement
            };
            out.push((a.clone(), b.clone(), c, reason));
        }
        out
    }
}

impl fmt::Debug for FactoredSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.iter().map(|(a, b, c)| format!("{c} b({a}, {b})")))
            .finish()
    }
}

/// Why `P` annihilates a bilinear term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kill {
    /// A factor is `U` restricted to `G`.
    UnresolvedLeaf,
    /// A factor starts with `Q` and `PQ = 0`.
    Complement,
}

fn slot(m: RangeMask) -> usize {
    if m == RangeMask::F {
        0
    } else {
        1
    }
}

fn atom_of(i: usize) -> RangeMask {
    if i == 0 {
        RangeMask::F
    } else {
        RangeMask::G
    }
}

fn common_sign(a: i64, b: i64) -> Option<i64> {
    if a > 0 && b > 0 {
        Some(1)
    } else if a < 0 && b < 0 {
        Some(-1)
    } else {
        None
    }
}

/// One printed sum: `coeff * b(left, right)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PackedSum {
    pub coeff: i64,
    pub left: Atom,
    pub right: Atom,
}

impl PackedSum {
    pub fn degree(&self) -> usize {
        self.left.degree() + self.right.degree()
    }

    /// `(left mask, right mask)`.
    pub fn masks(&self) -> (RangeMask, RangeMask) {
        (self.left.mask, self.right.mask)
    }
}

impl fmt::Display for PackedSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.coeff < 0 { "-" } else { "+" };
        let mag = self.coeff.unsigned_abs();
        let scale = if mag == 1 { String::new() } else { format!("{mag} ") };
        write!(
            f,
            "{sign} {scale}Σ p∈{}, q∈{}: k·{}_p A_k {}_q",
            self.left.mask, self.right.mask, self.left.name(), self.right.name()
        )
    }
}

impl fmt::Debug for PackedSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}b({}, {})", self.coeff, self.left, self.right)
    }
}

/// Factored expansion of `W U` for a word ending in `L`.
pub fn expand_word(word: &[Op]) -> Result<FactoredSum> {
    match word.last() {
        Some(Op::L) => {}
        _ => {
            return Err(Error::Plan(format!(
                "word {} does not end in L",
                word_name(word)
            )))
        }
    }
    let mut s = FactoredSum::rhs();
    for op in word[..word.len() - 1].iter().rev() {
        s = s.apply(*op);
    }
    Ok(s.canonical())
}

fn atom_trees(atom: &Atom, cache: &mut BTreeMap<Vec<Op>, TermSum>) -> Result<TermSum> {
    if atom.is_u() {
        return Ok(TermSum::identity(atom.mask));
    }
    if !cache.contains_key(&atom.word) {
        let expanded = expand_word(&atom.word)?.to_trees(RangeMask::FG)?;
        cache.insert(atom.word.clone(), expanded);
    }
    Ok(cache[&atom.word].restrict(atom.mask))
}

/// The word `P L (Q L)^n Q L`.
pub fn z_word(n: usize) -> Vec<Op> {
    super::oracle::z_word(n)
}

/// Factored `Z^n` and its packed sums.
pub fn generate_z(n: usize) -> Result<(FactoredSum, Vec<PackedSum>)> {
    generate_z_bounded(n, MAX_ORDER)
}

pub fn generate_z_bounded(n: usize, bound: usize) -> Result<(FactoredSum, Vec<PackedSum>)> {
    if n > bound {
        return Err(Error::OrderBound {
            requested: n,
            bound,
        });
    }
    let sum = expand_word(&z_word(n))?;
    let packed = sum.pack();
    Ok((sum, packed))
}
