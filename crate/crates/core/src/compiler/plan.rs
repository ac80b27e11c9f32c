//! Executable plans: a topologically ordered list of bilinear and sum steps.
//!
//! Text form, one step per line, the last step being the output:
//!
//! ```text
//! R = BILIN(1, u, F, u, F, FG)
//! Z0.0 = BILIN(1, R, G, u, F, F)
//! Z0.1 = BILIN(1, u, F, R, G, F)
//! Z0 = SUM(Z0.0, Z0.1)
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use super::word::{expand_word, word_name, PackedSum};
use super::Op;
use crate::error::{Error, Result};
use crate::spectral::{BilinearPair, Convolver, RangeMask, SpectralField};
use crate::terms::TermOutput;

/// Name of the plan input `û`.
pub const INPUT: &str = "u";

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Bilin {
        name: String,
        coeff: f64,
        left: String,
        left_mask: RangeMask,
        right: String,
        right_mask: RangeMask,
        out_mask: RangeMask,
    },
    Sum {
        name: String,
        terms: Vec<String>,
    },
}

impl Step {
    pub fn name(&self) -> &str {
        match self {
            Step::Bilin { name, .. } | Step::Sum { name, .. } => name,
        }
    }

    fn inputs(&self) -> Vec<&str> {
        match self {
            Step::Bilin { left, right, .. } => vec![left, right],
            Step::Sum { terms, .. } => terms.iter().map(String::as_str).collect(),
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Bilin {
                name,
                coeff,
                left,
                left_mask,
                right,
                right_mask,
                out_mask,
            } => write!(
                f,
                "{name} = BILIN({coeff}, {left}, {}, {right}, {}, {})",
                left_mask.label(),
                right_mask.label(),
                out_mask.label()
            ),
            Step::Sum { name, terms } => write!(f, "{name} = SUM({})", terms.join(", ")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationPlan {
    steps: Vec<Step>,
}

impl EvaluationPlan {
    /// Checks that every step only reads earlier names and names are unique.
    pub fn new(steps: Vec<Step>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Plan("empty plan".into()));
        }
        let mut seen: Vec<&str> = vec![INPUT];
        for s in &steps {
            for i in s.inputs() {
                if !seen.contains(&i) {
                    return Err(Error::Plan(format!(
                        "step {} reads {i} before it is defined",
                        s.name()
                    )));
                }
            }
            if seen.contains(&s.name()) {
                return Err(Error::Plan(format!("{} is defined twice", s.name())));
            }
            if let Step::Sum { terms, .. } = s {
                if terms.is_empty() {
                    return Err(Error::Plan(format!("{} sums nothing", s.name())));
                }
            }
            seen.push(s.name());
        }
        Ok(EvaluationPlan { steps })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn output(&self) -> &str {
        self.steps.last().expect("plans are nonempty").name()
    }

    pub fn bilinear_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, Step::Bilin { .. }))
            .count()
    }

    /// Range on which the named value is nonzero.
    fn support(&self, name: &str) -> RangeMask {
        if name == INPUT {
            return RangeMask::F;
        }
        match self.steps.iter().find(|s| s.name() == name) {
            Some(Step::Bilin { out_mask, .. }) => *out_mask,
            Some(Step::Sum { terms, .. }) => terms
                .iter()
                .fold(RangeMask::EMPTY, |m, t| m.union(self.support(t))),
            None => RangeMask::EMPTY,
        }
    }

    /// Runs the plan on `û` (which must vanish on `G`).
    ///
    /// Bilinear steps read only by a single sum are evaluated together with
    /// that sum so their products share one set of transforms.
    pub fn execute(&self, conv: &mut Convolver, u: &SpectralField) -> Result<TermOutput> {
        let grid = conv.grid().clone();
        u.check_grid(&grid)?;
        let g = u.max_abs(&grid, RangeMask::G);
        if g > 0.0 {
            return Err(Error::UnresolvedSupport(g));
        }
        let mut readers: HashMap<&str, usize> = HashMap::new();
        for s in &self.steps {
            for i in s.inputs() {
                *readers.entry(i).or_default() += 1;
            }
        }
        let sum_fed: Vec<bool> = self
            .steps
            .iter()
            .enumerate()
            .map(|(idx, s)| {
                matches!(s, Step::Bilin { .. })
                    && idx + 1 != self.steps.len()
                    && readers.get(s.name()) == Some(&1)
                    && self.steps.iter().any(|t| match t {
                        Step::Sum { terms, .. } => terms.iter().any(|x| x == s.name()),
                        _ => false,
                    })
            })
            .collect();

        let mut env: HashMap<&str, SpectralField> = HashMap::new();
        env.insert(INPUT, u.clone());
        let mut deferred: HashMap<&str, &Step> = HashMap::new();
        for (idx, step) in self.steps.iter().enumerate() {
            match step {
                Step::Bilin { .. } if sum_fed[idx] => {
                    deferred.insert(step.name(), step);
                }
                Step::Bilin {
                    name,
                    coeff,
                    left,
                    left_mask,
                    right,
                    right_mask,
                    out_mask,
                } => {
                    let pair = BilinearPair::new(&env[left.as_str()], *left_mask, &env[right.as_str()], *right_mask)
                        .with_coeff(*coeff);
                    let value = conv.bilinear_sum(&[pair], *out_mask)?;
                    env.insert(name, value);
                }
                Step::Sum { name, terms } => {
                    let mut batches: BTreeMap<u8, Vec<BilinearPair<'_>>> = BTreeMap::new();
                    let mut direct: Vec<&str> = Vec::new();
                    for t in terms {
                        match deferred.get(t.as_str()) {
                            Some(Step::Bilin {
                                coeff,
                                left,
                                left_mask,
                                right,
                                right_mask,
                                out_mask,
                                ..
                            }) => {
                                let pair = BilinearPair::new(
                                    &env[left.as_str()],
                                    *left_mask,
                                    &env[right.as_str()],
                                    *right_mask,
                                )
                                .with_coeff(*coeff);
                                batches.entry(mask_key(*out_mask)).or_default().push(pair);
                            }
                            _ => direct.push(t),
                        }
                    }
                    let mut value = SpectralField::zeros(&grid);
                    for (key, pairs) in &batches {
                        let part = conv.bilinear_sum(pairs, mask_from_key(*key))?;
                        value.add(&part);
                    }
                    for t in direct {
                        value.add(&env[t]);
                    }
                    env.insert(name, value);
                }
            }
        }
        let out = self.output();
        let field = env
            .remove(out)
            .ok_or_else(|| Error::Plan(format!("output {out} was never computed")))?;
        Ok(TermOutput {
            field,
            support: self.support(out),
        })
    }
}

fn mask_key(m: RangeMask) -> u8 {
    match m {
        RangeMask::F => 1,
        RangeMask::G => 2,
        RangeMask::FG => 3,
        _ => 0,
    }
}

fn mask_from_key(k: u8) -> RangeMask {
    match k {
        1 => RangeMask::F,
        2 => RangeMask::G,
        3 => RangeMask::FG,
        _ => RangeMask::EMPTY,
    }
}

impl fmt::Display for EvaluationPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for EvaluationPlan {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut steps = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |why: &str| Error::Plan(format!("line {}: {why}: {line}", lineno + 1));
            let (name, rhs) = line.split_once('=').ok_or_else(|| bad("missing '='"))?;
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                return Err(bad("invalid name"));
            }
            let rhs = rhs.trim();
            let (op, args) = rhs.split_once('(').ok_or_else(|| bad("missing '('"))?;
            let args = args.strip_suffix(')').ok_or_else(|| bad("missing ')'"))?;
            let args: Vec<&str> = args.split(',').map(str::trim).collect();
            let mask = |s: &str| RangeMask::parse(s).ok_or_else(|| bad("unknown mask"));
            let step = match op.trim() {
                "BILIN" => {
                    if args.len() != 6 {
                        return Err(bad("BILIN takes six arguments"));
                    }
                    Step::Bilin {
                        name: name.into(),
                        coeff: args[0].parse().map_err(|_| bad("bad coefficient"))?,
                        left: args[1].into(),
                        left_mask: mask(args[2])?,
                        right: args[3].into(),
                        right_mask: mask(args[4])?,
                        out_mask: mask(args[5])?,
                    }
                }
                "SUM" => Step::Sum {
                    name: name.into(),
                    terms: args.iter().map(|s| s.to_string()).collect(),
                },
                other => return Err(bad(&format!("unknown operation {other}"))),
            };
            steps.push(step);
        }
        EvaluationPlan::new(steps)
    }
}

/// Compiles `W U` into a plan whose output is restricted to `out`.
///
/// Every intermediate word is computed once, on the union of the ranges its
/// readers need.
pub fn compile_word(word: &[Op], out: RangeMask) -> Result<EvaluationPlan> {
    let mut needed: BTreeMap<Vec<Op>, RangeMask> = BTreeMap::new();
    let mut sums: BTreeMap<Vec<Op>, Vec<PackedSum>> = BTreeMap::new();
    needed.insert(word.to_vec(), out);
    let order = |w: &[Op]| w.iter().filter(|o| **o == Op::L).count();
    // readers always have more L letters than what they read
    loop {
        let next = needed
            .keys()
            .filter(|w| !sums.contains_key(*w))
            .max_by_key(|w| (order(w), (*w).clone()))
            .cloned();
        let Some(w) = next else { break };
        let packed = expand_word(&w)?.pack();
        for p in &packed {
            for a in [&p.left, &p.right] {
                if !a.is_u() {
                    let m = needed.entry(a.word.clone()).or_insert(RangeMask::EMPTY);
                    *m = m.union(a.mask);
                }
            }
        }
        sums.insert(w, packed);
    }
    let mut words: Vec<&Vec<Op>> = sums.keys().collect();
    words.sort_by_key(|w| (order(w), (*w).clone()));
    let mut steps = Vec::new();
    for w in words {
        let name = word_name(w);
        let mask = needed[w];
        let packed = &sums[w];
        let bilin = |tag: String, p: &PackedSum| Step::Bilin {
            name: tag,
            coeff: p.coeff as f64,
            left: p.left.name(),
            left_mask: p.left.mask,
            right: p.right.name(),
            right_mask: p.right.mask,
            out_mask: mask,
        };
        if packed.len() == 1 {
            steps.push(bilin(name, &packed[0]));
            continue;
        }
        let mut terms = Vec::new();
        for (i, p) in packed.iter().enumerate() {
            let tag = format!("{name}.{i}");
            steps.push(bilin(tag.clone(), p));
            terms.push(tag);
        }
        steps.push(Step::Sum { name, terms });
    }
    EvaluationPlan::new(steps)
}

/// Plan for `Z^n` on `out`.
pub fn compile_z(n: usize, out: RangeMask) -> Result<EvaluationPlan> {
    compile_word(&super::word::z_word(n), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{random_field, taylor_green_field, WavenumberGrid};
    use crate::terms::TermEvaluator;

    #[test]
    fn z0_plan_text() {
        let plan = compile_z(0, RangeMask::F).unwrap();
        let text = plan.to_string();
        assert_eq!(
            text,
            "R = BILIN(1, u, F, u, F, G)\n\
             Z0.0 = BILIN(1, R, G, u, F, F)\n\
             Z0.1 = BILIN(1, u, F, R, G, F)\n\
             Z0 = SUM(Z0.0, Z0.1)\n"
        );
        assert_eq!(plan.output(), "Z0");
        let parsed: EvaluationPlan = text.parse().unwrap();
        assert_eq!(parsed, plan);
    }

    #[test]
    fn shared_intermediates_appear_once() {
        let plan = compile_z(2, RangeMask::F).unwrap();
        let names: Vec<&str> = plan.steps().iter().map(Step::name).collect();
        for n in ["R", "B", "Z0", "Z1", "Z2"] {
            assert_eq!(names.iter().filter(|x| **x == n).count(), 1, "{n}");
        }
        assert_eq!(plan.output(), "Z2");
        let z2_terms = plan
            .steps()
            .iter()
            .filter(|s| s.name().starts_with("Z2."))
            .count();
        assert_eq!(z2_terms, 12);
    }

    #[test]
    fn parse_errors() {
        assert!("x = BILIN(1, y, F, u, F, F)".parse::<EvaluationPlan>().is_err());
        assert!("x = BILIN(1, u, F, u, F)".parse::<EvaluationPlan>().is_err());
        assert!("x = BILIN(1, u, H, u, F, F)".parse::<EvaluationPlan>().is_err());
        assert!("x = FOO(u)".parse::<EvaluationPlan>().is_err());
        assert!("".parse::<EvaluationPlan>().is_err());
        assert!("x = SUM(u)\nx = SUM(u)".parse::<EvaluationPlan>().is_err());
        let ok = "# comment\nx = BILIN(-2.5, u, F, u, F, FG)\ny = SUM(x, u)\n";
        let plan: EvaluationPlan = ok.parse().unwrap();
        assert_eq!(plan.output(), "y");
    }

    #[test]
    fn plans_match_hand_coded_terms() {
        let g = WavenumberGrid::new(4, 8).unwrap();
        let mut eval = TermEvaluator::new(&g);
        let mut conv = Convolver::new(&g);
        let u = random_field(&g, RangeMask::F, 0.0, 31);
        let z0 = compile_z(0, RangeMask::F).unwrap().execute(&mut conv, &u).unwrap();
        let z1 = compile_z(1, RangeMask::F).unwrap().execute(&mut conv, &u).unwrap();
        let z2 = compile_z(2, RangeMask::F).unwrap().execute(&mut conv, &u).unwrap();
        assert_eq!(z2.support, RangeMask::F);
        let h0 = eval.z0(&u).unwrap().field.restricted(&g, RangeMask::F);
        let h1 = eval.z1(&u).unwrap().field.restricted(&g, RangeMask::F);
        let h2 = eval.z2(&u).unwrap().field;
        assert!(z0.field.rel_diff(&h0) <= 1e-13);
        assert!(z1.field.rel_diff(&h1) <= 1e-13);
        assert!(z2.field.rel_diff(&h2) <= 1e-13);
        let tg = taylor_green_field(&g).unwrap();
        let p = compile_z(0, RangeMask::F).unwrap().execute(&mut conv, &tg).unwrap();
        let h = eval.z0(&tg).unwrap().field.restricted(&g, RangeMask::F);
        assert!(p.field.rel_diff(&h) <= 1e-13);
    }

    #[test]
    fn rejects_unresolved_input() {
        let g = WavenumberGrid::new(4, 8).unwrap();
        let mut conv = Convolver::new(&g);
        let u = random_field(&g, RangeMask::FG, 0.0, 1);
        let plan = compile_z(0, RangeMask::F).unwrap();
        assert!(plan.execute(&mut conv, &u).is_err());
        let other = WavenumberGrid::new(4, 10).unwrap();
        let v = SpectralField::zeros(&other);
        assert!(plan.execute(&mut conv, &v).is_err());
    }
}
