//! Human-readable listings of generated terms.

use std::fmt::Write;

use super::classify::{classify_terms, TermType};
use super::plan::compile_z;
use super::word::generate_z;
use crate::error::Result;
use crate::spectral::RangeMask;

/// Listing of `Z^n`: packed sums with their ranges, counts, the degree
/// check and the i/ii/iii split of the terms of `L (Q L)^n Q L u`.
/// With `plan` set, the evaluation plan text is appended.
pub fn show_terms(n: usize, plan: bool) -> Result<String> {
    let (sum, packed) = generate_z(n)?;
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "Z{n} = P L (Q L)^{n} Q L u").ok();
    writeln!(w, "  (names are words applied to u: R = PLu, B = PLPLu, QL = QLu, ...)").ok();
    for s in &packed {
        writeln!(w, "  {s}").ok();
    }
    let degrees: Vec<usize> = packed.iter().map(|s| s.degree()).collect();
    let ok = degrees.iter().all(|&d| d == n + 3);
    writeln!(w, "sums: {}", packed.len()).ok();
    writeln!(w, "bilinear terms: {}", sum.len()).ok();
    writeln!(
        w,
        "degree: {} (expected {}) {}",
        degrees.first().copied().unwrap_or(0),
        n + 3,
        if ok { "ok" } else { "MISMATCH" }
    )
    .ok();
    let c = classify_terms(n + 1)?;
    writeln!(
        w,
        "terms of L (Q L)^{n} Q L u: {} (type i: {}, type ii: {}, type iii: {}; P of type iii = Z{n})",
        c.terms.len(),
        c.count(TermType::I),
        c.count(TermType::Ii),
        c.count(TermType::Iii)
    )
    .ok();
    if plan {
        let p = compile_z(n, RangeMask::F)?;
        writeln!(w, "# plan: {} bilinear steps", p.bilinear_count()).ok();
        write!(w, "{p}").ok();
    }
    Ok(out)
}
