//! Tree-shifts whose entropy is the log of the Perron root of
//! `x^p - k_1 x^{p_1} - ... - k_l x^{p_l}`.
//!
//! With `q_j = p - p_j`, the construction makes
//! `a^(0)_n = 2 * prod_j (a^(0)_{n-q_j})^{k_j}` by routing symbol `a^(0)`
//! through a delay chain of `q_j - 1` symbols per term. A padding symbol `b`
//! with the single rule `(b, ..., b)` stays at count 1 and fills the unused
//! children. Then `ln a^(0)_n` satisfies a linear recurrence whose growth
//! rate is the root `rho > 1` of `1 = sum_j k_j x^{-q_j}`.
//!
//! The leading coefficient 2 is realized by two orderings of the same
//! monomial. When all its factors are equal there is only one ordering, and
//! the all-`b` tuple is added instead, giving `a^(0)_n = prod + 1`.

use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use serde::Serialize;

use crate::entropy::{entropy_estimate_lagged, EntropyEstimate};
use crate::error::{Error, Result};
use crate::eval::{evaluate_log, DEFAULT_PRECISION};
use crate::model::{BasicSet, Signature, Symbol};
use crate::snre::{derive_snre, initial_counts, Monomial, Snre};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RealizationPolynomial {
    p: u32,
    /// `(p_i, k_i)` with `p_1 > p_2 > ... > p_l`, every `k_i >= 1`.
    terms: Vec<(u32, u64)>,
}

impl RealizationPolynomial {
    /// Merges repeated exponents and drops zero coefficients.
    pub fn new(p: u32, terms: impl IntoIterator<Item = (u32, u64)>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("leading exponent must be at least 1".into()));
        }
        let mut merged = std::collections::BTreeMap::new();
        for (e, k) in terms {
            if e >= p {
                return Err(Error::InvalidArgument(format!(
                    "term exponent {e} is not below the leading exponent {p}"
                )));
            }
            *merged.entry(e).or_insert(0u64) += k;
        }
        let terms: Vec<(u32, u64)> = merged.into_iter().rev().filter(|&(_, k)| k > 0).collect();
        if terms.is_empty() {
            return Err(Error::InvalidArgument(
                "polynomial needs at least one nonzero term".into(),
            ));
        }
        Ok(RealizationPolynomial { p, terms })
    }

    /// Parses `x^p - k1*x^p1 - k2*x^p2 - ...` or the compact
    /// `p; p1:k1; p2:k2; ...`.
    pub fn parse(text: &str) -> Result<Self> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let err = |m: String| Error::Parse { line: 1, message: m };
        if compact.contains(';') || compact.chars().all(|c| c.is_ascii_digit()) {
            let mut parts = compact.split(';').filter(|s| !s.is_empty());
            let p = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(format!("bad leading exponent in `{text}`")))?;
            let terms = parts
                .map(|t| {
                    let (e, k) = t
                        .split_once(':')
                        .ok_or_else(|| err(format!("expected `exponent:coefficient`, got `{t}`")))?;
                    Ok((
                        e.parse().map_err(|_| err(format!("bad exponent `{e}`")))?,
                        k.parse().map_err(|_| err(format!("bad coefficient `{k}`")))?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            return Self::new(p, terms);
        }
        let rest = compact
            .strip_prefix('x')
            .ok_or_else(|| err(format!("polynomial must start with the monic term x^p: `{text}`")))?;
        let (p, mut rest) = parse_power(rest).ok_or_else(|| err(format!("bad leading term in `{text}`")))?;
        let mut terms = Vec::new();
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('-')
                .ok_or_else(|| err(format!("terms must be subtracted, near `{rest}`")))?;
            let end = body.find('-').unwrap_or(body.len());
            let term = &body[..end];
            rest = &body[end..];
            let (coef, var) = match term.split_once('*') {
                Some((c, v)) => (Some(c), Some(v)),
                None if term.starts_with('x') => (None, Some(term)),
                None => (Some(term), None),
            };
            let k: u64 = match coef {
                Some(c) => c.parse().map_err(|_| err(format!("bad coefficient `{c}`")))?,
                None => 1,
            };
            let e = match var {
                None => 0,
                Some(v) => {
                    let (e, tail) = v
                        .strip_prefix('x')
                        .and_then(parse_power)
                        .ok_or_else(|| err(format!("bad term `{term}`")))?;
                    if !tail.is_empty() {
                        return Err(err(format!("bad term `{term}`")));
                    }
                    e
                }
            };
            terms.push((e, k));
        }
        Self::new(p, terms)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn terms(&self) -> &[(u32, u64)] {
        &self.terms
    }

    /// Delays `q_j = p - p_j`, strictly increasing.
    pub fn delays(&self) -> Vec<u32> {
        self.terms.iter().map(|&(e, _)| self.p - e).collect()
    }

    /// `d = sum k_j`.
    pub fn degree_sum(&self) -> u64 {
        self.terms.iter().map(|&(_, k)| k).sum()
    }
}

/// `x^` followed by digits, or a bare `x` (power 1); returns the power and
/// the unparsed tail.
fn parse_power(s: &str) -> Option<(u32, &str)> {
    match s.strip_prefix('^') {
        Some(t) => {
            let end = t.find(|c: char| !c.is_ascii_digit()).unwrap_or(t.len());
            Some((t[..end].parse().ok()?, &t[end..]))
        }
        None => Some((1, s)),
    }
}

impl fmt::Display for RealizationPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x^{}", self.p)?;
        for &(e, k) in &self.terms {
            write!(f, " - ")?;
            if k != 1 || e == 0 {
                write!(f, "{k}")?;
                if e > 0 {
                    write!(f, "*")?;
                }
            }
            match e {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{e}")?,
            }
        }
        Ok(())
    }
}

/// Root `> 1` of `1 = sum_j k_j x^{-q_j}` by bisection, or exactly `k_1`
/// for the linear case. Returns 1 when `sum k_j = 1` (no root above 1).
pub fn max_root(poly: &RealizationPolynomial, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let delays = poly.delays();
    if delays == [1] {
        return Ok(poly.terms[0].1 as f64);
    }
    let total = poly.degree_sum() as f64;
    if total <= 1.0 {
        return Ok(1.0);
    }
    let f = |x: f64| {
        poly.terms
            .iter()
            .zip(&delays)
            .map(|(&(_, k), &q)| k as f64 * x.powi(-(q as i32)))
            .sum::<f64>()
            - 1.0
    };
    let (mut lo, mut hi) = (1.0, 1.0 + total);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub polynomial: RealizationPolynomial,
    pub snre: Snre,
    pub basic_set: BasicSet,
    pub d: usize,
    pub k: usize,
    /// Symbol names (`a^(0)`, `a^(j,r)`, `b`) with their integer symbols.
    pub symbol_legend: Vec<(String, Symbol)>,
    pub rho: f64,
    /// `gcd(q_j)`: `ln c_n` can oscillate with this period.
    pub period: usize,
    /// Whether `a^(0)` uses the all-`b` tuple instead of a second ordering.
    pub fallback_forcing: bool,
}

impl Realization {
    pub fn legend_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .symbol_legend
            .iter()
            .map(|(name, s)| (name.clone(), serde_json::json!(s)))
            .collect();
        serde_json::Value::Object(map)
    }
}

const ROOT_TOLERANCE: f64 = 1e-13;

pub fn build_realization(poly: &RealizationPolynomial) -> Result<Realization> {
    let d = poly.degree_sum();
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "sum of coefficients is {d}; a tree needs at least 2 children"
        )));
    }
    let d = usize::try_from(d).map_err(|_| Error::InvalidArgument("too many children".into()))?;
    let delays = poly.delays();
    let a0: Symbol = 1;
    let mut legend = vec![("a^(0)".to_string(), a0)];
    let mut next: Symbol = 2;
    let mut chains: Vec<Vec<Symbol>> = Vec::new();
    for (j, &q) in delays.iter().enumerate() {
        let chain: Vec<Symbol> = (0..q.saturating_sub(1))
            .map(|r| {
                legend.push((format!("a^({},{r})", j + 1), next));
                next += 1;
                next - 1
            })
            .collect();
        chains.push(chain);
    }
    let b = next;
    legend.push(("b".to_string(), b));
    let k = b as usize;
    let sig = Signature::new(d, k)?;

    let mut rules = vec![BTreeSet::new(); k];
    let factors: Vec<Symbol> = poly
        .terms
        .iter()
        .zip(&chains)
        .flat_map(|(&(_, kj), chain)| std::iter::repeat_n(chain.first().copied().unwrap_or(a0), kj as usize))
        .collect();
    let monomial = Monomial::new(factors);
    let fallback_forcing = monomial.orderings() < 2;
    let all_b = vec![b; d];
    let mut forcing = monomial.smallest_orderings(2);
    if fallback_forcing {
        forcing.push(all_b.clone());
    }
    rules[a0 as usize - 1].extend(forcing);
    for chain in &chains {
        for (r, &s) in chain.iter().enumerate() {
            let target = chain.get(r + 1).copied().unwrap_or(a0);
            let mut tuple = vec![b; d];
            tuple[0] = target;
            rules[s as usize - 1].insert(tuple);
        }
    }
    rules[b as usize - 1].insert(all_b);
    let snre = Snre::new(sig, rules)?;
    let basic_set = snre.to_basic_set();
    let period = delays.iter().fold(0u32, |g, &q| g.gcd(&q)) as usize;
    Ok(Realization {
        polynomial: poly.clone(),
        snre,
        basic_set,
        d,
        k,
        symbol_legend: legend,
        rho: max_root(poly, ROOT_TOLERANCE)?,
        period,
        fallback_forcing,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub entropy_estimate: EntropyEstimate,
    pub ln_rho: f64,
    pub abs_error: f64,
}

/// Evaluates the realization in log space and compares the (period-lagged)
/// difference estimator with `ln rho`.
pub fn verify_realization(r: &Realization, n_max: usize) -> Result<VerificationReport> {
    let max_q = *r.polynomial.delays().last().unwrap() as usize;
    if n_max < 10 + max_q {
        return Err(Error::InvalidArgument(format!(
            "n_max must be at least {} for this polynomial",
            10 + max_q
        )));
    }
    let seq = evaluate_log(&r.snre, &initial_counts(&r.basic_set), n_max, DEFAULT_PRECISION)?;
    let estimate = entropy_estimate_lagged(&seq, r.period);
    let ln_rho = r.rho.ln();
    Ok(VerificationReport {
        abs_error: (estimate.value - ln_rho).abs(),
        ln_rho,
        entropy_estimate: estimate,
    })
}

/// `derive_snre(basic_set) == snre`.
pub fn is_consistent(r: &Realization) -> bool {
    derive_snre(&r.basic_set) == r.snre
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{evaluate_exact, CountSequence};
    use num_bigint::BigUint;

    fn poly(s: &str) -> RealizationPolynomial {
        RealizationPolynomial::parse(s).unwrap()
    }

    #[test]
    fn parsing_both_syntaxes() {
        let a = poly("x^3 - x^2 - x - 1");
        assert_eq!(a.terms(), &[(2, 1), (1, 1), (0, 1)]);
        assert_eq!(a.delays(), vec![1, 2, 3]);
        assert_eq!(poly("3; 2:1; 1:1; 0:1"), a);
        assert_eq!(poly("x^2-2"), RealizationPolynomial::new(2, [(0, 2)]).unwrap());
        assert_eq!(poly("x - 2").terms(), &[(0, 2)]);
        assert_eq!(poly("x^4 - 3*x^2 - 0*x - x^2").terms(), &[(2, 4)]);
        assert_eq!(poly("x^3 - 2*x^2 - x").to_string(), "x^3 - 2*x^2 - x");
        for bad in ["x^2 + x", "2 - x", "x^2 - x^3", "x^2 - 0*x", "x^2 - y", "2; 1"] {
            assert!(RealizationPolynomial::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn roots() {
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((max_root(&poly("x^2 - x - 1"), 1e-12).unwrap() - golden).abs() < 1e-11);
        assert!((max_root(&poly("x^3 - x^2 - x - 1"), 1e-12).unwrap() - 1.839_286_755_2).abs() < 1e-9);
        assert_eq!(max_root(&poly("x - 2"), 1e-12).unwrap(), 2.0);
        assert_eq!(max_root(&poly("x^3 - 1"), 1e-12).unwrap(), 1.0);
        assert!(max_root(&poly("x - 2"), 0.0).is_err());
    }

    #[test]
    fn golden_construction() {
        let r = build_realization(&poly("x^2 - x - 1")).unwrap();
        assert_eq!((r.d, r.k), (2, 3));
        assert_eq!(
            r.symbol_legend,
            vec![("a^(0)".into(), 1), ("a^(2,0)".into(), 2), ("b".into(), 3)]
        );
        let rules = |s| r.snre.rules(s).iter().cloned().collect::<Vec<_>>();
        assert_eq!(rules(1), vec![vec![1, 2], vec![2, 1]]);
        assert_eq!(rules(2), vec![vec![1, 3]]);
        assert_eq!(rules(3), vec![vec![3, 3]]);
        assert!(is_consistent(&r));
        assert!(!r.fallback_forcing);
        let report = verify_realization(&r, 40).unwrap();
        assert!(report.abs_error <= 1e-6, "{report:?}");
    }

    fn exact(r: &Realization, n: usize) -> CountSequence {
        evaluate_exact(&r.snre, &initial_counts(&r.basic_set), n).unwrap()
    }

    #[test]
    fn tribonacci_log_recurrence_is_exact() {
        let r = build_realization(&poly("x^3 - x^2 - x - 1")).unwrap();
        assert_eq!((r.d, r.k), (3, 5));
        let c = exact(&r, 15);
        for n in 5..=15 {
            let rhs = BigUint::from(2u32) * c.get(n - 1, 1) * c.get(n - 2, 1) * c.get(n - 3, 1);
            assert_eq!(c.get(n, 1), &rhs, "n={n}");
        }
        assert!(verify_realization(&r, 40).unwrap().abs_error <= 1e-6);
    }

    #[test]
    fn fallback_forcing_for_single_ordering() {
        let r = build_realization(&poly("x^2 - 2")).unwrap();
        assert!(r.fallback_forcing);
        assert_eq!(r.period, 2);
        let rules: Vec<_> = r.snre.rules(1).iter().cloned().collect();
        assert_eq!(rules, vec![vec![2, 2], vec![3, 3]]);
        let c = exact(&r, 15);
        for n in 4..=15 {
            let rhs = c.get(n - 2, 1).pow(2u32) + 1u32;
            assert_eq!(c.get(n, 1), &rhs);
        }
        let report = verify_realization(&r, 40).unwrap();
        assert!((report.ln_rho - 0.5 * 2f64.ln()).abs() < 1e-12);
        assert!(report.abs_error <= 1e-6, "{report:?}");
    }

    #[test]
    fn linear_case() {
        let r = build_realization(&poly("x - 2")).unwrap();
        assert_eq!((r.d, r.k), (2, 2));
        let report = verify_realization(&r, 20).unwrap();
        assert!(report.abs_error <= 1e-9, "{report:?}");
    }

    #[test]
    fn rejects_small_degree_and_short_runs() {
        assert!(build_realization(&poly("x^2 - x")).is_err());
        let r = build_realization(&poly("x^2 - x - 1")).unwrap();
        assert!(verify_realization(&r, 11).is_err());
    }
}
