//! Symbolic operator algebra for `L`, `P`, `Q` and the model terms
//! `Z^n = P L (Q L)^n Q L u`.

pub mod classify;
pub mod oracle;
pub mod plan;
pub mod poly;
pub mod report;
pub mod tree;
pub mod word;

use std::fmt;

/// One letter of an operator word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    L,
    P,
    Q,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Op::L => "L",
            Op::P => "P",
            Op::Q => "Q",
        };
        f.write_str(c)
    }
}

pub use oracle::{eval_word, poly_oracle_z, z_word};
