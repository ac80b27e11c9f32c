//! Fully expanded bilinear expression trees over the coordinate field `U`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use crate::spectral::RangeMask;

/// `Leaf(ρ)` is `U` restricted to `ρ`; `Node { mask, left, right }` is
/// `b(left, right)` restricted to `mask`, with each child carrying its own
/// summation range.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExprTree {
    Leaf(RangeMask),
    Node {
        mask: RangeMask,
        left: Box<ExprTree>,
        right: Box<ExprTree>,
    },
}

impl ExprTree {
    pub fn leaf(mask: RangeMask) -> Self {
        ExprTree::Leaf(mask)
    }

    pub fn node(mask: RangeMask, left: ExprTree, right: ExprTree) -> Self {
        ExprTree::Node {
            mask,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn mask(&self) -> RangeMask {
        match self {
            ExprTree::Leaf(m) => *m,
            ExprTree::Node { mask, .. } => *mask,
        }
    }

    pub fn with_mask(&self, mask: RangeMask) -> ExprTree {
        match self {
            ExprTree::Leaf(m) => ExprTree::Leaf(m.intersect(mask)),
            ExprTree::Node { mask: m, left, right } => ExprTree::Node {
                mask: m.intersect(mask),
                left: left.clone(),
                right: right.clone(),
            },
        }
    }

    /// Number of leaves, i.e. the polynomial degree in `U`.
    pub fn degree(&self) -> usize {
        match self {
            ExprTree::Leaf(_) => 1,
            ExprTree::Node { left, right, .. } => left.degree() + right.degree(),
        }
    }

    /// True if any range in the tree is empty.
    pub fn is_zero(&self) -> bool {
        match self {
            ExprTree::Leaf(m) => m.is_empty(),
            ExprTree::Node { mask, left, right } => {
                mask.is_empty() || left.is_zero() || right.is_zero()
            }
        }
    }

    /// Splits every `F ∪ G` range into its `F` and `G` parts.
    pub fn atomize(&self) -> Vec<ExprTree> {
        match self {
            ExprTree::Leaf(m) => m.atoms().map(ExprTree::Leaf).collect(),
            ExprTree::Node { mask, left, right } => {
                let ls = left.atomize();
                let rs = right.atomize();
                let mut out = Vec::new();
                for a in mask.atoms() {
                    for l in &ls {
                        for r in &rs {
                            out.push(ExprTree::node(a, l.clone(), r.clone()));
                        }
                    }
                }
                out
            }
        }
    }

    /// `P` as substitution `U -> U|F`: only leaf ranges change.
    pub fn project(&self) -> ExprTree {
        match self {
            ExprTree::Leaf(m) => ExprTree::Leaf(m.intersect(RangeMask::F)),
            ExprTree::Node { mask, left, right } => {
                ExprTree::node(*mask, left.project(), right.project())
            }
        }
    }

    /// Leibniz rule; `L(U|ρ) = b(U|F∪G, U|F∪G)|ρ`.
    pub fn derive(&self) -> Vec<ExprTree> {
        match self {
            ExprTree::Leaf(m) => vec![ExprTree::node(
                *m,
                ExprTree::Leaf(RangeMask::FG),
                ExprTree::Leaf(RangeMask::FG),
            )],
            ExprTree::Node { mask, left, right } => {
                let mut out = Vec::new();
                for l in left.derive() {
                    out.push(ExprTree::node(*mask, l, (**right).clone()));
                }
                for r in right.derive() {
                    out.push(ExprTree::node(*mask, (**left).clone(), r));
                }
                out
            }
        }
    }
}

impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprTree::Leaf(m) => write!(f, "u|{}", m.label()),
            ExprTree::Node { mask, left, right } => {
                write!(f, "b({left}, {right})|{}", mask.label())
            }
        }
    }
}

impl fmt::Debug for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Integer combination of trees.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct TermSum {
    terms: BTreeMap<ExprTree, i64>,
}

impl TermSum {
    pub fn new() -> Self {
        TermSum::default()
    }

    pub fn single(tree: ExprTree) -> Self {
        let mut s = TermSum::new();
        s.push(tree, 1);
        s
    }

    /// The coordinate function `U` on `mask`.
    pub fn identity(mask: RangeMask) -> Self {
        TermSum::single(ExprTree::Leaf(mask))
    }

    pub fn push(&mut self, tree: ExprTree, coeff: i64) {
        if coeff == 0 {
            return;
        }
        match self.terms.entry(tree) {
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

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ExprTree, i64)> {
        self.terms.iter().map(|(t, c)| (t, *c))
    }

    pub fn add(&self, other: &TermSum) -> TermSum {
        let mut out = self.clone();
        for (t, c) in other.iter() {
            out.push(t.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &TermSum) -> TermSum {
        let mut out = self.clone();
        for (t, c) in other.iter() {
            out.push(t.clone(), -c);
        }
        out
    }

    /// Atomic ranges only, like terms merged, zero terms dropped.
    pub fn simplify(&self) -> TermSum {
        let mut out = TermSum::new();
        for (t, c) in self.iter() {
            if t.is_zero() {
                continue;
            }
            for a in t.atomize() {
                out.push(a, c);
            }
        }
        out
    }

    pub fn apply_l(&self) -> TermSum {
        let mut out = TermSum::new();
        for (t, c) in self.iter() {
            for d in t.derive() {
                out.push(d, c);
            }
        }
        out
    }

    pub fn apply_p(&self) -> TermSum {
        let mut out = TermSum::new();
        for (t, c) in self.iter() {
            out.push(t.project(), c);
        }
        out.simplify()
    }

    pub fn apply_q(&self) -> TermSum {
        self.simplify().sub(&self.apply_p())
    }

    /// Restricts the outermost range of every tree.
    pub fn restrict(&self, mask: RangeMask) -> TermSum {
        let mut out = TermSum::new();
        for (t, c) in self.iter() {
            out.push(t.with_mask(mask), c);
        }
        out.simplify()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.terms.keys().map(ExprTree::degree).collect();
        d.sort_unstable();
        d.dedup();
        d
    }
}

impl fmt::Debug for TermSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

/// `P L (Q L)^n Q L U|mask` by direct operator application.
pub fn z_trees(n: usize, mask: RangeMask) -> TermSum {
    let mut s = TermSum::identity(mask);
    s = s.apply_l().apply_q();
    for _ in 0..n {
        s = s.apply_l().apply_q();
    }
    s.apply_l().apply_p()
}
