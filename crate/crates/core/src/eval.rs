//! Exact and log-space evaluation of an SNRE.
//!
//! Both backends run the same recurrence from an arbitrary base vector at an
//! arbitrary starting index, so boundary counting can reuse them with its own
//! base vectors.

use num_bigint::BigUint;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extfloat::ExtFloat;
use crate::model::{BasicSet, Symbol};
use crate::snre::{derive_snre, initial_counts, Snre};

pub const DEFAULT_BIT_BUDGET: u64 = 1 << 24;
pub const DEFAULT_PRECISION: u32 = 128;
pub const MIN_PRECISION: u32 = 53;

/// Exact counts `a_n^(i)` for `n = start..=n_max`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountSequence {
    start: usize,
    rows: Vec<Vec<BigUint>>,
    totals: Vec<BigUint>,
}

impl CountSequence {
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn n_max(&self) -> usize {
        self.start + self.rows.len() - 1
    }

    /// Per-symbol counts at index `n`.
    pub fn at(&self, n: usize) -> &[BigUint] {
        &self.rows[n - self.start]
    }

    pub fn get(&self, n: usize, s: Symbol) -> &BigUint {
        &self.at(n)[s as usize - 1]
    }

    /// `c_n`, the sum over root symbols.
    pub fn total(&self, n: usize) -> &BigUint {
        &self.totals[n - self.start]
    }

    pub fn totals(&self) -> &[BigUint] {
        &self.totals
    }

    /// Converts to log form (exact values, so no precision is lost beyond
    /// the final rounding to `f64`).
    pub fn to_log(&self) -> LogCountSequence {
        let ln = |v: &BigUint| ExtFloat::from_biguint(v, 64).ln();
        LogCountSequence {
            start: self.start,
            rows: self.rows.iter().map(|r| r.iter().map(ln).collect()).collect(),
            totals: self.totals.iter().map(ln).collect(),
            precision: 64,
        }
    }
}

/// `ln a_n^(i)` and `ln c_n` for `n = start..=n_max`; zero counts are
/// `f64::NEG_INFINITY`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogCountSequence {
    start: usize,
    rows: Vec<Vec<f64>>,
    totals: Vec<f64>,
    precision: u32,
}

impl LogCountSequence {
    /// Builds a sequence of totals only (for synthetic inputs and probes).
    pub fn from_totals(start: usize, totals: Vec<f64>) -> Self {
        LogCountSequence {
            start,
            rows: totals.iter().map(|&t| vec![t]).collect(),
            totals,
            precision: 0,
        }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn n_max(&self) -> usize {
        self.start + self.totals.len() - 1
    }

    pub fn len(&self) -> usize {
        self.totals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.totals.is_empty()
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn at(&self, n: usize) -> &[f64] {
        &self.rows[n - self.start]
    }

    pub fn get(&self, n: usize, s: Symbol) -> f64 {
        self.at(n)[s as usize - 1]
    }

    /// `ln c_n`.
    pub fn total(&self, n: usize) -> f64 {
        self.totals[n - self.start]
    }

    pub fn totals(&self) -> &[f64] {
        &self.totals
    }

    /// `(n, ln c_n)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.totals.iter().enumerate().map(|(i, &v)| (self.start + i, v))
    }
}

/// Runs `a_{n+1}^(i) = sum_{u in rules(i)} prod_j a_n^(u_j)` from `initial`
/// at index `start` up to `n_max`.
pub fn evaluate_exact_from(
    s: &Snre,
    initial: &[BigUint],
    start: usize,
    n_max: usize,
    bit_budget: u64,
) -> Result<CountSequence> {
    check_run(s, initial.len(), start, n_max)?;
    let sig = s.signature();
    let log2_terms = (sig.tuple_count() as f64).log2().ceil() as u64;
    let mut rows = vec![initial.to_vec()];
    for _ in start..n_max {
        let prev = rows.last().unwrap();
        let max_bits = prev.iter().map(|v| v.bits()).max().unwrap_or(0);
        let bits = max_bits.saturating_mul(sig.d() as u64) + log2_terms;
        if bits > bit_budget {
            return Err(Error::BitBudgetExceeded {
                bits,
                budget: bit_budget,
            });
        }
        let next = sig
            .symbols()
            .map(|i| {
                s.rules(i)
                    .iter()
                    .map(|t| {
                        t.iter().fold(BigUint::from(1u32), |acc, &c| {
                            let f = &prev[c as usize - 1];
                            if acc.is_zero() || f.is_zero() {
                                BigUint::zero()
                            } else {
                                acc * f
                            }
                        })
                    })
                    .sum()
            })
            .collect();
        rows.push(next);
    }
    let totals = rows.iter().map(|r| r.iter().sum()).collect();
    Ok(CountSequence { start, rows, totals })
}

/// Log-space counterpart of [`evaluate_exact_from`] with `precision`
/// mantissa bits.
pub fn evaluate_log_from(
    s: &Snre,
    initial: &[BigUint],
    start: usize,
    n_max: usize,
    precision: u32,
) -> Result<LogCountSequence> {
    if precision < MIN_PRECISION {
        return Err(Error::Precision(precision));
    }
    check_run(s, initial.len(), start, n_max)?;
    let sig = s.signature();
    let p = precision;
    let mut current: Vec<ExtFloat> = initial.iter().map(|v| ExtFloat::from_biguint(v, p)).collect();
    let mut rows = Vec::with_capacity(n_max - start + 1);
    let mut totals = Vec::with_capacity(n_max - start + 1);
    let mut record = |values: &[ExtFloat]| {
        rows.push(values.iter().map(ExtFloat::ln).collect());
        let total = values.iter().fold(ExtFloat::zero(), |acc, v| acc.add(v, p));
        totals.push(total.ln());
    };
    record(&current);
    for _ in start..n_max {
        let next: Vec<ExtFloat> = sig
            .symbols()
            .map(|i| {
                s.rules(i).iter().fold(ExtFloat::zero(), |sum, t| {
                    let mut prod = current[t[0] as usize - 1].clone();
                    for &c in &t[1..] {
                        if prod.is_zero() {
                            break;
                        }
                        prod = prod.mul(&current[c as usize - 1], p);
                    }
                    sum.add(&prod, p)
                })
            })
            .collect();
        record(&next);
        current = next;
    }
    Ok(LogCountSequence {
        start,
        rows,
        totals,
        precision,
    })
}

/// Exact counts for `n = 2..=n_max` from the given initial vector at `n = 2`.
pub fn evaluate_exact(s: &Snre, initial: &[BigUint], n_max: usize) -> Result<CountSequence> {
    evaluate_exact_from(s, initial, 2, n_max, DEFAULT_BIT_BUDGET)
}

/// Log counts for `n = 2..=n_max` from the given initial vector at `n = 2`.
pub fn evaluate_log(s: &Snre, initial: &[BigUint], n_max: usize, precision: u32) -> Result<LogCountSequence> {
    evaluate_log_from(s, initial, 2, n_max, precision)
}

fn check_run(s: &Snre, initial_len: usize, start: usize, n_max: usize) -> Result<()> {
    if initial_len != s.signature().k() {
        return Err(Error::LengthMismatch(initial_len, s.signature().k()));
    }
    if n_max < start {
        return Err(Error::InvalidArgument(format!(
            "n_max={n_max} is below the starting index {start}"
        )));
    }
    Ok(())
}

fn prepared(b: &BasicSet, essentialize: bool) -> BasicSet {
    if essentialize {
        b.essentialize().0
    } else {
        b.clone()
    }
}

/// Block counts `|B_n(X_i)|` for `n = 2..=n_max`, via the recurrence.
pub fn count_exact(b: &BasicSet, n_max: usize, essentialize: bool) -> Result<CountSequence> {
    let b = prepared(b, essentialize);
    evaluate_exact(&derive_snre(&b), &initial_counts(&b), n_max)
}

/// Log block counts for `n = 2..=n_max`, via the recurrence.
pub fn count_log(b: &BasicSet, n_max: usize, precision: u32, essentialize: bool) -> Result<LogCountSequence> {
    let b = prepared(b, essentialize);
    evaluate_log(&derive_snre(&b), &initial_counts(&b), n_max, precision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Signature;

    fn sig(d: usize, k: usize) -> Signature {
        Signature::new(d, k).unwrap()
    }

    fn set22(tuples: &[&[Symbol]]) -> BasicSet {
        BasicSet::from_tuples(sig(2, 2), tuples.iter().copied()).unwrap()
    }

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn dominant_example_counts() {
        let c = count_exact(&set22(&[&[1, 1, 1], &[1, 2, 2], &[2, 2, 2]]), 4, true).unwrap();
        assert_eq!(c.at(2), [big(2), big(1)]);
        assert_eq!(c.at(3), [big(5), big(1)]);
        assert_eq!(c.total(4), &big(27));
    }

    #[test]
    fn full_shift_closed_form() {
        let c = count_exact(&BasicSet::full(sig(2, 2)), 6, true).unwrap();
        assert_eq!(c.total(3), &big(128));
        assert_eq!(c.total(4), &big(32768));
        for n in 2..=6 {
            assert_eq!(c.total(n), &(BigUint::from(1u32) << ((1u32 << n) - 1)));
        }
    }

    #[test]
    fn case_six_counts() {
        let c = count_exact(&set22(&[&[1, 1, 2], &[1, 2, 1], &[2, 2, 2]]), 20, true).unwrap();
        for n in 2..=20 {
            assert_eq!(c.get(n, 2), &big(1));
            assert_eq!(c.get(n, 1), &big(1 << (n - 1)));
        }
        assert_eq!(c.total(5), &big(17));
    }

    #[test]
    fn log_backend_matches_closed_form_and_exact() {
        let l = count_log(&BasicSet::full(sig(2, 2)), 10, DEFAULT_PRECISION, true).unwrap();
        let expected = 1023.0 * std::f64::consts::LN_2;
        assert!((l.total(10) - expected).abs() <= 1e-9 * expected);

        let b = set22(&[&[1, 1, 1], &[1, 2, 2], &[2, 2, 2]]);
        let exact = count_exact(&b, 5, true).unwrap().to_log();
        let log = count_log(&b, 5, DEFAULT_PRECISION, true).unwrap();
        for n in 2..=5 {
            let (a, e) = (log.total(n), exact.total(n));
            assert!((a - e).abs() <= 1e-9 * e.abs().max(1.0), "n={n}: {a} vs {e}");
        }
    }

    #[test]
    fn empty_set_is_negative_infinity() {
        let l = count_log(&BasicSet::empty(sig(2, 2)), 6, DEFAULT_PRECISION, true).unwrap();
        for n in 2..=6 {
            assert_eq!(l.total(n), f64::NEG_INFINITY);
            assert!(l.at(n).iter().all(|&v| v == f64::NEG_INFINITY));
        }
    }

    #[test]
    fn essentialization_flag_changes_counts() {
        let b = set22(&[&[1, 1, 1], &[1, 1, 2]]);
        assert_eq!(count_exact(&b, 3, false).unwrap().total(3), &big(4));
        assert_eq!(count_exact(&b, 3, true).unwrap().total(3), &big(1));
    }

    #[test]
    fn budgets_and_precision_are_enforced() {
        let full = BasicSet::full(sig(2, 2));
        let s = derive_snre(&full);
        let init = initial_counts(&full);
        assert!(matches!(
            evaluate_exact_from(&s, &init, 2, 30, 1 << 12),
            Err(Error::BitBudgetExceeded { .. })
        ));
        assert_eq!(evaluate_log(&s, &init, 5, 40), Err(Error::Precision(40)));
        assert!(evaluate_exact(&s, &init, 1).is_err());
        assert!(evaluate_exact(&s, &init[..1], 3).is_err());
    }

    #[test]
    fn deep_log_evaluation_stays_finite() {
        let l = count_log(&BasicSet::full(sig(2, 2)), 80, DEFAULT_PRECISION, true).unwrap();
        let expected = ((2f64).powi(80) - 1.0) * std::f64::consts::LN_2;
        assert!((l.total(80) - expected).abs() <= 1e-12 * expected);
    }
}
