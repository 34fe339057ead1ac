//! Symbolic entropy classification.
//!
//! For `d = k = 2` the entropy is always `0` or `ln 2`, and a chain of
//! structural rules on the two indicator vectors decides most basic sets.
//! Whatever the rules leave open is settled (or left undetermined) by the
//! numeric difference estimator. For general `(d, k)` only the symmetric and
//! dominant-vector conditions are available.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::entropy::{entropy_estimate, Estimator};
use crate::error::{Error, Result};
use crate::eval::{count_log, DEFAULT_PRECISION};
use crate::model::{BasicSet, Signature, Symbol};
use crate::snre::{derive_snre, IndicatorVector, Snre};

/// Index at which the numeric check is evaluated.
pub const NUMERIC_N: usize = 40;
/// Half-width of the decision band around `0` and `ln 2`.
pub const NUMERIC_BAND: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dominance {
    VDominates,
    WDominates,
    Both,
    Neither,
}

pub fn dominance(v: &IndicatorVector, w: &IndicatorVector) -> Result<Dominance> {
    Ok(match (v.dominates(w)?, w.dominates(v)?) {
        (true, true) => Dominance::Both,
        (true, false) => Dominance::VDominates,
        (false, true) => Dominance::WDominates,
        (false, false) => Dominance::Neither,
    })
}

/// `v + w >= (1,1,1,1)`.
pub fn is_complementary(v: &IndicatorVector, w: &IndicatorVector) -> Result<bool> {
    if v.len() != 4 || w.len() != 4 {
        return Err(Error::WrongSignature(format!(
            "complementarity needs vectors of length 4, got {} and {}",
            v.len(),
            w.len()
        )));
    }
    Ok(covers(v, w, &[1, 1, 1, 1]))
}

fn covers(v: &IndicatorVector, w: &IndicatorVector, target: &[u8]) -> bool {
    v.entries()
        .iter()
        .zip(w.entries())
        .zip(target)
        .all(|((a, b), t)| a + b >= *t)
}

/// `pi(B^(i)) = pi(B^(j))` for all roots: every symbol allows the same
/// children tuples.
pub fn is_symmetric(b: &BasicSet) -> bool {
    let s = derive_snre(b);
    let first = s.rules(1);
    b.signature().symbols().all(|i| s.rules(i) == first)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerdictValue {
    Zero,
    /// `ln d` for the tree's branching number `d`.
    LnD(usize),
    /// `ln h` for an integer `h >= 2` below `d`.
    LnH(usize),
    Undetermined,
}

impl VerdictValue {
    /// Numeric value in nats; `None` when undetermined.
    pub fn nats(&self) -> Option<f64> {
        match *self {
            VerdictValue::Zero => Some(0.0),
            VerdictValue::LnD(d) | VerdictValue::LnH(d) => Some((d as f64).ln()),
            VerdictValue::Undetermined => None,
        }
    }
}

impl fmt::Display for VerdictValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerdictValue::Zero => write!(f, "0"),
            VerdictValue::LnD(d) | VerdictValue::LnH(d) => write!(f, "ln {d}"),
            VerdictValue::Undetermined => write!(f, "undetermined"),
        }
    }
}

impl Serialize for VerdictValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Which rule decided a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Justification {
    /// Empty after essentialization, or a single surviving symbol.
    Degenerate,
    /// One vector dominates the other and has at least two terms.
    DominantType,
    /// A symbol's own square appears alongside another term.
    SelfSquare,
    /// The two vectors together cover every children tuple.
    ComplementaryType,
    /// The two vectors together cover `(1,0,1,1)` or `(1,1,0,1)`.
    ComplementaryCover,
    /// One of the six exhaustive residual cases, up to symmetry.
    Case(u8),
    /// Decided by the numeric estimator.
    Numeric,
    /// All roots allow the same children tuples.
    SymmetricType,
    /// A dominant vector whose symbol appears to full degree in its own rule.
    DominantVector,
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Justification::Degenerate => write!(f, "degenerate"),
            Justification::DominantType => write!(f, "dominant-type"),
            Justification::SelfSquare => write!(f, "self-square"),
            Justification::ComplementaryType => write!(f, "complementary-type"),
            Justification::ComplementaryCover => write!(f, "complementary-cover"),
            Justification::Case(c) => write!(f, "case-{c}"),
            Justification::Numeric => write!(f, "numeric"),
            Justification::SymmetricType => write!(f, "symmetric-type"),
            Justification::DominantVector => write!(f, "dominant-vector"),
        }
    }
}

impl Serialize for Justification {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationVerdict {
    pub value: VerdictValue,
    pub justification: Option<Justification>,
    /// Indicator vectors of the essentialized basic set, one per symbol.
    pub witnesses: Vec<IndicatorVector>,
    /// For undetermined verdicts, the values still possible.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<VerdictValue>,
    /// Difference estimate at `n = 40` on the essentialized set.
    pub numeric_check: Option<f64>,
}

impl ClassificationVerdict {
    fn new(value: VerdictValue, justification: Option<Justification>, witnesses: Vec<IndicatorVector>) -> Self {
        ClassificationVerdict {
            value,
            justification,
            witnesses,
            candidates: Vec::new(),
            numeric_check: None,
        }
    }

    /// `{value, justification, v_F, v_G, numeric_check}` for `d = k = 2`;
    /// `{value, justification, indicators, numeric_check}` otherwise.
    pub fn to_json(&self) -> serde_json::Value {
        let mut out = serde_json::json!({
            "value": self.value,
            "justification": self.justification,
        });
        let map = out.as_object_mut().unwrap();
        if self.witnesses.len() == 2 && self.witnesses[0].len() == 4 {
            map.insert("v_F".into(), serde_json::json!(self.witnesses[0]));
            map.insert("v_G".into(), serde_json::json!(self.witnesses[1]));
        } else {
            map.insert("indicators".into(), serde_json::json!(self.witnesses));
        }
        if !self.candidates.is_empty() {
            map.insert("candidates".into(), serde_json::json!(self.candidates));
        }
        map.insert("numeric_check".into(), serde_json::json!(self.numeric_check));
        out
    }
}

/// Difference estimate of `h` at `n = 40` (counting essentializes first).
pub fn numeric_entropy(b: &BasicSet) -> f64 {
    count_log(b, NUMERIC_N, DEFAULT_PRECISION, true)
        .map(|seq| entropy_estimate(&seq, Estimator::Difference).value)
        .unwrap_or(f64::NAN)
}

// Residual configurations (v_F, v_G); the last is the zero-entropy case.
const CASES: [([u8; 4], [u8; 4]); 6] = [
    ([0, 1, 1, 0], [1, 0, 1, 0]),
    ([0, 1, 1, 0], [1, 1, 0, 0]),
    ([0, 0, 1, 1], [0, 1, 1, 0]),
    ([0, 1, 1, 0], [1, 0, 0, 0]),
    ([0, 0, 1, 1], [0, 1, 0, 0]),
    ([0, 1, 1, 0], [0, 0, 0, 1]),
];

/// Entropy of a `d = k = 2` basic set.
pub fn classify_2x2(b: &BasicSet) -> Result<ClassificationVerdict> {
    let sig = b.signature();
    if sig.d() != 2 || sig.k() != 2 {
        return Err(Error::WrongSignature(format!("classify_2x2 needs d=2 k=2, got {sig}")));
    }
    let (ess, _) = b.essentialize();
    let numeric = numeric_entropy(&ess);
    let mut verdict = symbolic_2x2(&ess).unwrap_or_else(|witnesses| {
        let (value, justification) = if numeric.abs() < NUMERIC_BAND {
            (VerdictValue::Zero, Some(Justification::Numeric))
        } else if (numeric - std::f64::consts::LN_2).abs() < NUMERIC_BAND {
            (VerdictValue::LnD(2), Some(Justification::Numeric))
        } else {
            (VerdictValue::Undetermined, None)
        };
        ClassificationVerdict::new(value, justification, witnesses)
    });
    verdict.numeric_check = Some(numeric);
    Ok(verdict)
}

/// The structural rules; `Err` carries the witnesses when none applies.
fn symbolic_2x2(ess: &BasicSet) -> std::result::Result<ClassificationVerdict, Vec<IndicatorVector>> {
    use Justification::*;
    let s = derive_snre(ess);
    let (vf, vg) = (s.indicator(1), s.indicator(2));
    let witnesses = vec![vf.clone(), vg.clone()];
    let ln2 = |j| {
        Ok(ClassificationVerdict::new(
            VerdictValue::LnD(2),
            Some(j),
            witnesses.clone(),
        ))
    };

    if ess.rooting_symbols().len() <= 1 {
        return Ok(ClassificationVerdict::new(
            VerdictValue::Zero,
            Some(Degenerate),
            witnesses,
        ));
    }
    // Dominant-type. When the dominated symbol only has its own square it
    // stays at count 1, and the dominating symbol then grows doubly
    // exponentially only if it has its own square too.
    let self_square_only = |v: &IndicatorVector, own: usize| v.support() == 1 && v.get(own);
    let dominant_ok = |big: &IndicatorVector, small: &IndicatorVector, big_own: usize, small_own: usize| {
        big.support() >= 2
            && big.dominates(small).unwrap_or(false)
            && (!self_square_only(small, small_own) || big.get(big_own))
    };
    if dominant_ok(&vf, &vg, 0, 3) || dominant_ok(&vg, &vf, 3, 0) {
        return ln2(DominantType);
    }
    if covers(&vf, &vg, &[1, 1, 1, 1]) {
        return ln2(ComplementaryType);
    }
    if covers(&vf, &vg, &[1, 0, 1, 1]) || covers(&vf, &vg, &[1, 1, 0, 1]) {
        return ln2(ComplementaryCover);
    }
    if (vf.get(0) && vf.support() >= 2) || (vg.get(3) && vg.support() >= 2) {
        return ln2(SelfSquare);
    }
    for image in symmetry_images(ess) {
        let t = derive_snre(&image);
        let key = (t.indicator(1), t.indicator(2));
        for (idx, (cf, cg)) in CASES.iter().enumerate() {
            if key.0.entries() == cf && key.1.entries() == cg {
                let value = if idx == 5 {
                    VerdictValue::Zero
                } else {
                    VerdictValue::LnD(2)
                };
                return Ok(ClassificationVerdict::new(value, Some(Case(idx as u8 + 1)), witnesses));
            }
        }
    }
    Err(witnesses)
}

/// The set itself plus its images under symbol swap, child swap and both.
fn symmetry_images(b: &BasicSet) -> Vec<BasicSet> {
    let swapped = b.relabel(&[2, 1]).expect("valid permutation");
    vec![
        b.clone(),
        b.swap_children(&[1, 0]).expect("valid permutation"),
        swapped.swap_children(&[1, 0]).expect("valid permutation"),
        swapped,
    ]
}

/// Sufficient conditions for general `(d, k)`.
pub fn classify_general(s: &Snre) -> ClassificationVerdict {
    let sig: Signature = s.signature();
    let d = sig.d();
    let (ess, _) = s.to_basic_set().essentialize();
    let es = derive_snre(&ess);
    let witnesses = es.indicators();
    let alive: BTreeSet<Symbol> = ess.rooting_symbols();
    let numeric = count_log(&ess, NUMERIC_N, DEFAULT_PRECISION, false)
        .map(|seq| entropy_estimate(&seq, Estimator::Difference).value)
        .ok();
    let mut verdict = general_rules(&es, &alive, d, witnesses);
    verdict.numeric_check = numeric;
    verdict
}

fn general_rules(
    es: &Snre,
    alive: &BTreeSet<Symbol>,
    d: usize,
    witnesses: Vec<IndicatorVector>,
) -> ClassificationVerdict {
    let Some(&first) = alive.iter().next() else {
        return ClassificationVerdict::new(VerdictValue::Zero, Some(Justification::Degenerate), witnesses);
    };
    if alive.iter().all(|&i| es.rules(i) == es.rules(first)) && es.rules(first).len() >= 2 {
        return ClassificationVerdict::new(VerdictValue::LnD(d), Some(Justification::SymmetricType), witnesses);
    }
    let dominant: Vec<Symbol> = alive
        .iter()
        .copied()
        .filter(|&l| {
            let v = &witnesses[l as usize - 1];
            alive
                .iter()
                .all(|&j| v.dominates(&witnesses[j as usize - 1]).unwrap_or(false))
        })
        .collect();
    let self_degree = |l: Symbol| {
        es.rules(l)
            .iter()
            .map(|t| t.iter().filter(|&&c| c == l).count())
            .max()
            .unwrap_or(0)
    };
    if dominant.iter().any(|&l| self_degree(l) == d && es.rules(l).len() >= 2) {
        return ClassificationVerdict::new(VerdictValue::LnD(d), Some(Justification::DominantVector), witnesses);
    }
    let mut verdict = ClassificationVerdict::new(VerdictValue::Undetermined, None, witnesses);
    if let Some(h) = dominant.iter().map(|&l| self_degree(l)).max() {
        verdict.candidates.push(VerdictValue::Zero);
        if h >= 2 {
            verdict.candidates.push(VerdictValue::LnH(h));
        }
    }
    verdict
}
