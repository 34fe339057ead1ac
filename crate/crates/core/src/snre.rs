//! Systems of nonlinear recurrence equations (SNREs) and the two compilers
//! between basic sets and SNREs.
//!
//! The primary representation keeps, for every root symbol `i`, the set of
//! ordered children tuples allowed under `i`. That is exactly the image of the
//! basic set, so
//!
//! ```text
//! a^(i)_n = sum over tuples (u_0..u_{d-1}) of a^(u_0)_{n-1} * ... * a^(u_{d-1})_{n-1}
//! ```
//!
//! Monomial forms (multiset -> coefficient) and indicator vectors are derived
//! from it on demand.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BasicSet, Signature, Symbol, TwoBlock};

/// A 0/1 vector over `A^d` in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndicatorVector(Vec<u8>);

impl IndicatorVector {
    pub fn new(entries: Vec<u8>) -> Result<Self> {
        if entries.iter().any(|&e| e > 1) {
            return Err(Error::InvalidArgument("indicator entries must be 0 or 1".into()));
        }
        Ok(IndicatorVector(entries))
    }

    pub fn zeros(len: usize) -> Self {
        IndicatorVector(vec![0; len])
    }

    pub fn ones(len: usize) -> Self {
        IndicatorVector(vec![1; len])
    }

    pub fn entries(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i] == 1
    }

    /// Number of nonzero entries.
    pub fn support(&self) -> usize {
        self.0.iter().filter(|&&e| e == 1).count()
    }

    /// Entrywise `self >= other`.
    pub fn dominates(&self, other: &Self) -> Result<bool> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(self.0.iter().zip(&other.0).all(|(a, b)| a >= b))
    }
}

impl fmt::Display for IndicatorVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// A degree-`d` monomial, stored as the sorted multiset of its factors.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Monomial(Vec<Symbol>);

impl Monomial {
    pub fn new(mut factors: Vec<Symbol>) -> Self {
        factors.sort_unstable();
        Monomial(factors)
    }

    pub fn factors(&self) -> &[Symbol] {
        &self.0
    }

    /// Number of distinct orderings of the factors (the multinomial).
    pub fn orderings(&self) -> u64 {
        let mut result: u128 = 1;
        let mut placed: u128 = 0;
        let mut i = 0;
        while i < self.0.len() {
            let run = self.0[i..].iter().take_while(|&&s| s == self.0[i]).count();
            for r in 1..=run as u128 {
                placed += 1;
                result = result * placed / r;
            }
            i += run;
        }
        result.min(u64::MAX as u128) as u64
    }

    /// The first `count` distinct orderings in lexicographic order.
    pub fn smallest_orderings(&self, count: usize) -> Vec<Vec<Symbol>> {
        let mut out = Vec::with_capacity(count);
        let mut current = self.0.clone();
        while out.len() < count {
            out.push(current.clone());
            if !next_permutation(&mut current) {
                break;
            }
        }
        out
    }
}

fn next_permutation(v: &mut [Symbol]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut i = 0;
        while i < self.0.len() {
            let s = self.0[i];
            let run = self.0[i..].iter().take_while(|&&t| t == s).count();
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "a^({s})_{{n-1}}")?;
            if run > 1 {
                write!(f, "^{run}")?;
            }
            i += run;
        }
        Ok(())
    }
}

/// Per-symbol polynomial right-hand sides in monomial form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialSystem {
    signature: Signature,
    terms: Vec<BTreeMap<Monomial, u64>>,
}

impl MonomialSystem {
    pub fn new(signature: Signature, terms: Vec<BTreeMap<Monomial, u64>>) -> Result<Self> {
        if terms.len() != signature.k() {
            return Err(Error::LengthMismatch(terms.len(), signature.k()));
        }
        for m in terms.iter().flat_map(|t| t.keys()) {
            if m.0.len() != signature.d() {
                return Err(Error::Arity {
                    expected: signature.d(),
                    found: m.0.len(),
                });
            }
            m.0.iter().try_for_each(|&s| signature.check_symbol(s))?;
        }
        let terms = terms
            .into_iter()
            .map(|t| t.into_iter().filter(|&(_, c)| c > 0).collect())
            .collect();
        Ok(MonomialSystem { signature, terms })
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    /// Terms of the right-hand side for symbol `s`.
    pub fn terms(&self, s: Symbol) -> &BTreeMap<Monomial, u64> {
        &self.terms[s as usize - 1]
    }

    /// Pretty form, one line per symbol:
    /// `a^(1)_n = a^(1)_{n-1}^2 + 2*a^(1)_{n-1}*a^(2)_{n-1}`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in self.signature.symbols() {
            out.push_str(&format!("a^({s})_n = "));
            let terms = self.terms(s);
            if terms.is_empty() {
                out.push('0');
            }
            for (i, (m, &c)) in terms.iter().enumerate() {
                if i > 0 {
                    out.push_str(" + ");
                }
                if c != 1 {
                    out.push_str(&format!("{c}*"));
                }
                out.push_str(&m.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`MonomialSystem::to_text`] output. Lines starting with `#`
    /// are comments.
    pub fn parse(signature: Signature, text: &str) -> Result<Self> {
        let mut terms = vec![BTreeMap::new(); signature.k()];
        let mut seen = vec![false; signature.k()];
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| Error::Parse { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (lhs, rhs) = line
                .split_once('=')
                .ok_or_else(|| err("expected `a^(i)_n = ...`".into()))?;
            let s = parse_symbol_ref(lhs.trim(), "_n").ok_or_else(|| err(format!("bad left side `{lhs}`")))?;
            signature.check_symbol(s).map_err(|e| err(e.to_string()))?;
            if std::mem::replace(&mut seen[s as usize - 1], true) {
                return Err(err(format!("symbol {s} defined twice")));
            }
            let rhs = rhs.trim();
            if rhs == "0" {
                continue;
            }
            for term in rhs.split('+') {
                let mut coefficient = 1u64;
                let mut factors = Vec::new();
                for (j, piece) in term.split('*').map(str::trim).enumerate() {
                    if j == 0 && piece.chars().all(|c| c.is_ascii_digit()) {
                        coefficient = piece.parse().map_err(|_| err(format!("bad coefficient `{piece}`")))?;
                        continue;
                    }
                    let (base, power) = match piece.rsplit_once("}^") {
                        Some((b, p)) => (
                            format!("{b}}}"),
                            p.parse::<usize>().map_err(|_| err(format!("bad power `{p}`")))?,
                        ),
                        None => (piece.to_string(), 1),
                    };
                    let f = parse_symbol_ref(&base, "_{n-1}").ok_or_else(|| err(format!("bad factor `{piece}`")))?;
                    signature.check_symbol(f).map_err(|e| err(e.to_string()))?;
                    factors.extend(std::iter::repeat_n(f, power));
                }
                if factors.len() != signature.d() {
                    return Err(err(format!(
                        "term `{}` has degree {}, expected {}",
                        term.trim(),
                        factors.len(),
                        signature.d()
                    )));
                }
                *terms[s as usize - 1].entry(Monomial::new(factors)).or_insert(0) += coefficient;
            }
        }
        MonomialSystem::new(signature, terms)
    }
}

fn parse_symbol_ref(s: &str, suffix: &str) -> Option<Symbol> {
    s.strip_prefix("a^(")?
        .strip_suffix(suffix)?
        .strip_suffix(')')?
        .parse()
        .ok()
}

/// An SNRE of degree `(d, k)` as per-symbol sets of ordered children tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snre {
    signature: Signature,
    rules: Vec<BTreeSet<Vec<Symbol>>>,
}

impl Snre {
    pub fn new(signature: Signature, rules: Vec<BTreeSet<Vec<Symbol>>>) -> Result<Self> {
        if rules.len() != signature.k() {
            return Err(Error::LengthMismatch(rules.len(), signature.k()));
        }
        for tuple in rules.iter().flatten() {
            if tuple.len() != signature.d() {
                return Err(Error::Arity {
                    expected: signature.d(),
                    found: tuple.len(),
                });
            }
            tuple.iter().try_for_each(|&c| signature.check_symbol(c))?;
        }
        Ok(Snre { signature, rules })
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    /// Ordered tuples on the right-hand side of symbol `s`.
    pub fn rules(&self, s: Symbol) -> &BTreeSet<Vec<Symbol>> {
        &self.rules[s as usize - 1]
    }

    pub fn monomials(&self) -> MonomialSystem {
        let terms = self
            .rules
            .iter()
            .map(|tuples| {
                let mut m = BTreeMap::new();
                for t in tuples {
                    *m.entry(Monomial::new(t.clone())).or_insert(0) += 1;
                }
                m
            })
            .collect();
        MonomialSystem {
            signature: self.signature,
            terms,
        }
    }

    /// Indicator vector of `F^(s)` over `A^d`.
    pub fn indicator(&self, s: Symbol) -> IndicatorVector {
        let mut v = IndicatorVector::zeros(self.signature.tuple_count());
        for t in self.rules(s) {
            v.0[self.signature.tuple_index(t)] = 1;
        }
        v
    }

    pub fn indicators(&self) -> Vec<IndicatorVector> {
        self.signature.symbols().map(|s| self.indicator(s)).collect()
    }

    /// The basic set whose blocks are exactly the rule tuples.
    pub fn to_basic_set(&self) -> BasicSet {
        let blocks = self
            .signature
            .symbols()
            .flat_map(|s| self.rules(s).iter().map(move |t| TwoBlock::new(s, t.clone())));
        BasicSet::new(self.signature, blocks).expect("rules were validated on construction")
    }

    pub fn to_json(&self) -> serde_json::Value {
        let monomials = self.monomials();
        let symbols: Vec<SymbolJson> = self
            .signature
            .symbols()
            .map(|s| SymbolJson {
                symbol: s,
                rules: self.rules(s).iter().cloned().collect(),
                monomials: monomials
                    .terms(s)
                    .iter()
                    .map(|(m, &c)| MonomialJson {
                        coefficient: c,
                        factors: m.0.clone(),
                    })
                    .collect(),
                indicator: (self.signature.tuple_count() <= 1 << 16).then(|| self.indicator(s)),
            })
            .collect();
        serde_json::to_value(SnreJson {
            signature: self.signature,
            initial_index: 2,
            symbols,
        })
        .expect("plain data serializes")
    }

    /// Restores the ordered rule tuples from [`Snre::to_json`] output.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let parsed: SnreJson = serde_json::from_value(value.clone())
            .map_err(|e| Error::InvalidArgument(format!("malformed SNRE JSON: {e}")))?;
        let sig = Signature::new(parsed.signature.d(), parsed.signature.k())?;
        let mut rules = vec![BTreeSet::new(); sig.k()];
        for entry in parsed.symbols {
            sig.check_symbol(entry.symbol)?;
            rules[entry.symbol as usize - 1].extend(entry.rules);
        }
        Snre::new(sig, rules)
    }
}

#[derive(Serialize, Deserialize)]
struct SnreJson {
    signature: Signature,
    initial_index: usize,
    symbols: Vec<SymbolJson>,
}

#[derive(Serialize, Deserialize)]
struct SymbolJson {
    symbol: Symbol,
    rules: Vec<Vec<Symbol>>,
    monomials: Vec<MonomialJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    indicator: Option<IndicatorVector>,
}

#[derive(Serialize, Deserialize)]
struct MonomialJson {
    coefficient: u64,
    factors: Vec<Symbol>,
}

/// Basic set to SNRE: `rules[i]` holds the children tuples of the blocks
/// rooted at `i`.
pub fn derive_snre(b: &BasicSet) -> Snre {
    let sig = b.signature();
    let mut rules = vec![BTreeSet::new(); sig.k()];
    for block in b.blocks() {
        rules[block.root as usize - 1].insert(block.children.clone());
    }
    Snre { signature: sig, rules }
}

/// SNRE in monomial form to basic set: a monomial with coefficient `c` turns
/// into its `c` lexicographically smallest distinct orderings.
pub fn snre_to_basic_set(system: &MonomialSystem) -> Result<BasicSet> {
    let sig = system.signature();
    let mut blocks = Vec::new();
    for s in sig.symbols() {
        for (m, &c) in system.terms(s) {
            let orderings = m.orderings();
            if c > orderings {
                return Err(Error::Unrealizable {
                    monomial: m.to_string(),
                    coefficient: c,
                    orderings,
                });
            }
            blocks.extend(
                m.smallest_orderings(c as usize)
                    .into_iter()
                    .map(|t| TwoBlock::new(s, t)),
            );
        }
    }
    BasicSet::new(sig, blocks)
}

/// `a_2^(i)`: number of blocks rooted at `i`.
pub fn initial_counts(b: &BasicSet) -> Vec<BigUint> {
    let mut counts = vec![0u64; b.signature().k()];
    for block in b.blocks() {
        counts[block.root as usize - 1] += 1;
    }
    counts.into_iter().map(BigUint::from).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(d: usize, k: usize) -> Signature {
        Signature::new(d, k).unwrap()
    }

    fn set22(tuples: &[&[Symbol]]) -> BasicSet {
        BasicSet::from_tuples(sig(2, 2), tuples.iter().copied()).unwrap()
    }

    fn iv(entries: &[u8]) -> IndicatorVector {
        IndicatorVector::new(entries.to_vec()).unwrap()
    }

    #[test]
    fn indicator_vectors_of_worked_examples() {
        let s = derive_snre(&set22(&[&[1, 1, 1], &[1, 2, 2], &[2, 2, 2]]));
        assert_eq!(s.indicator(1), iv(&[1, 0, 0, 1]));
        assert_eq!(s.indicator(2), iv(&[0, 0, 0, 1]));

        let s = derive_snre(&set22(&[&[1, 1, 1], &[1, 1, 2], &[2, 2, 1], &[2, 2, 2]]));
        assert_eq!(s.indicator(1), iv(&[1, 1, 0, 0]));
        assert_eq!(s.indicator(2), iv(&[0, 0, 1, 1]));

        let mut tuples: Vec<Vec<Symbol>> = Vec::new();
        for i in 1..=2 {
            for c in [[1, 1, 2], [1, 2, 1], [2, 1, 1], [2, 1, 2], [2, 2, 2]] {
                tuples.push(std::iter::once(i).chain(c).collect());
            }
        }
        let b = BasicSet::from_tuples(sig(3, 2), tuples.iter().map(Vec::as_slice)).unwrap();
        let s = derive_snre(&b);
        let expected = iv(&[0, 1, 1, 0, 1, 1, 0, 1]);
        assert_eq!(s.indicator(1), expected);
        assert_eq!(s.indicator(2), expected);
        assert_eq!(expected.support(), 5);
    }

    #[test]
    fn converse_compiler_picks_smallest_orderings() {
        let mut f = BTreeMap::new();
        f.insert(Monomial::new(vec![1, 2]), 2);
        let mut g = BTreeMap::new();
        g.insert(Monomial::new(vec![2, 2]), 1);
        let system = MonomialSystem::new(sig(2, 2), vec![f, g]).unwrap();
        let b = snre_to_basic_set(&system).unwrap();
        assert_eq!(b, set22(&[&[1, 1, 2], &[1, 2, 1], &[2, 2, 2]]));
        assert_eq!(derive_snre(&b).monomials(), system);
    }

    #[test]
    fn converse_compiler_rejects_unrealizable_coefficient() {
        let mut f = BTreeMap::new();
        f.insert(Monomial::new(vec![1, 1]), 2);
        let system = MonomialSystem::new(sig(2, 2), vec![f, BTreeMap::new()]).unwrap();
        assert!(matches!(
            snre_to_basic_set(&system),
            Err(Error::Unrealizable {
                coefficient: 2,
                orderings: 1,
                ..
            })
        ));
    }

    #[test]
    fn converse_of_indicator_example() {
        let b = set22(&[&[1, 1, 1], &[1, 2, 2], &[2, 2, 2]]);
        let back = snre_to_basic_set(&derive_snre(&b).monomials()).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn initial_counts_cases() {
        let as_u64 = |v: Vec<BigUint>| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(
            as_u64(initial_counts(&set22(&[&[1, 1, 1], &[1, 2, 2], &[2, 2, 2]]))),
            ["2", "1"]
        );
        assert_eq!(as_u64(initial_counts(&BasicSet::full(sig(2, 2)))), ["4", "4"]);
        assert_eq!(as_u64(initial_counts(&BasicSet::empty(sig(2, 2)))), ["0", "0"]);
    }

    #[test]
    fn monomial_orderings() {
        assert_eq!(Monomial::new(vec![1, 1]).orderings(), 1);
        assert_eq!(Monomial::new(vec![2, 1]).orderings(), 2);
        assert_eq!(Monomial::new(vec![1, 1, 2]).orderings(), 3);
        assert_eq!(Monomial::new(vec![1, 2, 3]).orderings(), 6);
        assert_eq!(
            Monomial::new(vec![2, 1, 1]).smallest_orderings(3),
            vec![vec![1, 1, 2], vec![1, 2, 1], vec![2, 1, 1]]
        );
    }

    #[test]
    fn pretty_text_round_trip() {
        let s = derive_snre(&BasicSet::full(sig(2, 2)));
        let text = s.monomials().to_text();
        assert_eq!(
            text,
            "a^(1)_n = a^(1)_{n-1}^2 + 2*a^(1)_{n-1}*a^(2)_{n-1} + a^(2)_{n-1}^2\n\
             a^(2)_n = a^(1)_{n-1}^2 + 2*a^(1)_{n-1}*a^(2)_{n-1} + a^(2)_{n-1}^2\n"
        );
        assert_eq!(MonomialSystem::parse(sig(2, 2), &text).unwrap(), s.monomials());

        let empty = derive_snre(&BasicSet::empty(sig(2, 2))).monomials();
        assert_eq!(empty.to_text(), "a^(1)_n = 0\na^(2)_n = 0\n");
        assert_eq!(MonomialSystem::parse(sig(2, 2), &empty.to_text()).unwrap(), empty);

        assert!(MonomialSystem::parse(sig(2, 2), "a^(1)_n = a^(1)_{n-1}\n").is_err());
        assert!(MonomialSystem::parse(sig(2, 2), "a^(3)_n = 0\n").is_err());
    }

    #[test]
    fn json_round_trip_keeps_ordered_rules() {
        let b = set22(&[&[1, 2, 1], &[2, 2, 2]]);
        let s = derive_snre(&b);
        let json = s.to_json();
        assert_eq!(json["symbols"][0]["indicator"], serde_json::json!([0, 0, 1, 0]));
        let back = Snre::from_json(&json).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_basic_set(), b);
    }

    #[test]
    fn dominance_checks_lengths() {
        assert!(iv(&[1, 0, 0, 1]).dominates(&iv(&[0, 0, 0, 1])).unwrap());
        assert!(!iv(&[0, 0, 0, 1]).dominates(&iv(&[1, 0, 0, 1])).unwrap());
        assert!(iv(&[1, 0]).dominates(&iv(&[1, 0, 0])).is_err());
    }
}
