//! Sorting the terms of `L (Q L)^{n-1} Q L u` by how they relate to `Z^{n-1}`.

use std::fmt;

use super::word::{expand_word, Atom, FactoredSum, Kill};
use super::Op;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermType {
    /// Killed by `P` because a factor is `u` on `G`.
    I,
    /// Killed by `P` because a factor starts with `Q`.
    Ii,
    /// Survives `P`; appears as `h - Ph` with `Ph` a term of `Z^{n-1}`.
    Iii,
}

impl fmt::Display for TermType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TermType::I => "i",
            TermType::Ii => "ii",
            TermType::Iii => "iii",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ClassifiedTerm {
    pub coeff: i64,
    pub left: Atom,
    pub right: Atom,
    pub kind: TermType,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub n: usize,
    pub terms: Vec<ClassifiedTerm>,
}

impl Classification {
    pub fn count(&self, kind: TermType) -> usize {
        self.terms.iter().filter(|t| t.kind == kind).count()
    }
}

/// Labels every term of `L (Q L)^{n-1} Q L u` (atomic ranges, basis words)
/// and checks that the surviving terms project exactly onto `Z^{n-1}`.
pub fn classify_terms(n: usize) -> Result<Classification> {
    if n == 0 {
        return Err(Error::Classification(
            "classification compares with the previous order and needs n >= 1".into(),
        ));
    }
    let mut inner = FactoredSum::rhs();
    let mut ops = vec![Op::Q];
    for _ in 1..n {
        ops.extend([Op::L, Op::Q]);
    }
    for op in ops {
        inner = inner.apply(op);
    }
    let lx = inner.apply(Op::L).canonical();

    let killed = lx.killed_by_p();
    let mut terms = Vec::with_capacity(lx.len());
    let mut projected = FactoredSum::new();
    for (a, b, c) in lx.iter() {
        let kind = match killed.iter().find(|(ka, kb, _, _)| ka == a && kb == b) {
            Some((_, _, _, Kill::UnresolvedLeaf)) => TermType::I,
            Some((_, _, _, Kill::Complement)) => TermType::Ii,
            None => {
                let pa = a.prefixed(Op::P).ok_or_else(|| unclassifiable(a, b))?;
                let pb = b.prefixed(Op::P).ok_or_else(|| unclassifiable(a, b))?;
                projected.push(pa, pb, c);
                TermType::Iii
            }
        };
        terms.push(ClassifiedTerm {
            coeff: c,
            left: a.clone(),
            right: b.clone(),
            kind,
        });
    }
    let previous = expand_word(&super::word::z_word(n - 1))?;
    if projected.canonical() != previous {
        return Err(Error::Classification(format!(
            "type iii terms do not project onto Z{}",
            n - 1
        )));
    }
    Ok(Classification { n, terms })
}

fn unclassifiable(a: &Atom, b: &Atom) -> Error {
    Error::Classification(format!("term b({a}, {b}) fits no type"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::RangeMask;

    fn find<'a>(c: &'a Classification, left: &str, lm: RangeMask, right: &str, rm: RangeMask) -> &'a ClassifiedTerm {
        c.terms
            .iter()
            .find(|t| t.left.name() == left && t.left.mask == lm && t.right.name() == right && t.right.mask == rm)
            .unwrap_or_else(|| panic!("no term b({left}|{lm:?}, {right}|{rm:?})"))
    }

    #[test]
    fn second_order_examples() {
        let c = classify_terms(2).unwrap();
        // L R̂ against u on G
        let lr = [Op::L, Op::P, Op::L];
        let name: String = lr.iter().map(|o| o.to_string()).collect();
        for m in [RangeMask::F, RangeMask::G] {
            assert_eq!(find(&c, &name, m, "u", RangeMask::G).kind, TermType::I);
        }
        // Q L u on G against L u on F
        assert_eq!(find(&c, "QL", RangeMask::G, "L", RangeMask::F).kind, TermType::Ii);
        // R̂ on G against u on F survives as h - Ph
        assert_eq!(find(&c, "LQL", RangeMask::G, "u", RangeMask::F).kind, TermType::Iii);
        assert!(c.count(TermType::I) > 0 && c.count(TermType::Ii) > 0 && c.count(TermType::Iii) > 0);
        assert_eq!(
            c.count(TermType::I) + c.count(TermType::Ii) + c.count(TermType::Iii),
            c.terms.len()
        );
    }

    #[test]
    fn all_low_orders_classify() {
        for n in 1..4 {
            classify_terms(n).unwrap();
        }
        assert!(classify_terms(0).is_err());
    }
}
