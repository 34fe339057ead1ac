//! Entropy and hidden-entropy estimation from log count sequences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::LogCountSequence;

/// Successive estimates closer than this are reported as converged.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// `ln ln c_n / n`.
    Ratio,
    /// `ln ln c_n - ln ln c_{n-1}`.
    #[default]
    Difference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Diagnostic {
    Converged,
    Slow,
    DegenerateZero,
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub estimator: Estimator,
    /// Step of the difference estimator (1 unless a lag was requested).
    pub lag: usize,
    pub n_used: usize,
    pub diagnostic: Diagnostic,
}

/// `ln ln c_n` where defined (`ln c_n > 0`).
fn lnln(seq: &LogCountSequence, n: usize) -> Option<f64> {
    let l = seq.total(n);
    (l > 0.0 && l.is_finite()).then(|| l.ln())
}

fn estimate_at(seq: &LogCountSequence, estimator: Estimator, lag: usize, n: usize) -> Option<f64> {
    match estimator {
        Estimator::Ratio => lnln(seq, n).map(|v| v / n as f64),
        Estimator::Difference => {
            let prev = n.checked_sub(lag).filter(|&m| m >= seq.start())?;
            Some((lnln(seq, n)? - lnln(seq, prev)?) / lag as f64)
        }
    }
}

/// Estimates `h = lim ln ln c_n / n` at the last usable index.
pub fn entropy_estimate(seq: &LogCountSequence, estimator: Estimator) -> EntropyEstimate {
    estimate_with_lag(seq, estimator, 1)
}

/// Difference estimator over `lag` steps, `(ln ln c_n - ln ln c_{n-lag}) / lag`.
/// Needed when `ln c_n` oscillates with a period, as for realizations whose
/// delays share a common factor.
pub fn entropy_estimate_lagged(seq: &LogCountSequence, lag: usize) -> EntropyEstimate {
    estimate_with_lag(seq, Estimator::Difference, lag.max(1))
}

fn estimate_with_lag(seq: &LogCountSequence, estimator: Estimator, lag: usize) -> EntropyEstimate {
    let degenerate = |diagnostic| EntropyEstimate {
        value: 0.0,
        estimator,
        lag,
        n_used: seq.n_max(),
        diagnostic,
    };
    if seq.is_empty() || seq.total(seq.n_max()) == f64::NEG_INFINITY {
        return degenerate(Diagnostic::Empty);
    }
    if seq.totals().iter().all(|&l| l <= 1.0) {
        return degenerate(Diagnostic::DegenerateZero);
    }
    let mut usable = (seq.start()..=seq.n_max())
        .rev()
        .filter_map(|n| estimate_at(seq, estimator, lag, n).map(|v| (n, v)));
    let Some((n_used, value)) = usable.next() else {
        return degenerate(Diagnostic::DegenerateZero);
    };
    let diagnostic = match usable.next() {
        Some((_, prev)) if (value - prev).abs() <= CONVERGENCE_TOLERANCE => Diagnostic::Converged,
        _ => Diagnostic::Slow,
    };
    EntropyEstimate {
        value,
        estimator,
        lag,
        n_used,
        diagnostic,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HiddenEntropyEstimate {
    pub alpha: f64,
    pub kappa_used: f64,
    pub n_used: usize,
    /// The last (up to) five `ln c_n / kappa^n` values, oldest first.
    pub trend: Vec<f64>,
}

fn alpha_at(seq: &LogCountSequence, kappa: f64, n: usize) -> f64 {
    let l = seq.total(n);
    if l == f64::NEG_INFINITY {
        0.0
    } else {
        l / kappa.powi(n as i32)
    }
}

/// Heuristic `alpha` in `c_n ~ exp(alpha kappa^n)`.
pub fn hidden_entropy_estimate(seq: &LogCountSequence, kappa: f64) -> Result<HiddenEntropyEstimate> {
    if !(kappa > 1.0) {
        return Err(Error::InvalidArgument(format!("kappa must exceed 1, got {kappa}")));
    }
    if seq.is_empty() {
        return Err(Error::InvalidArgument("empty sequence".into()));
    }
    let n_max = seq.n_max();
    let from = n_max.saturating_sub(4).max(seq.start());
    let trend: Vec<f64> = (from..=n_max).map(|n| alpha_at(seq, kappa, n)).collect();
    Ok(HiddenEntropyEstimate {
        alpha: *trend.last().unwrap(),
        kappa_used: kappa,
        n_used: n_max,
        trend,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitVerdict {
    Positive,
    Zero,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitDiagnostic {
    pub verdict: LimitVerdict,
    /// `ln c_n / d^n` over the last (up to) five indices.
    pub trend: Vec<f64>,
    pub empty: bool,
}

/// Whether `ln c_n / d^n` looks bounded away from zero.
///
/// A trend that keeps shrinking by a constant factor is heading to zero; a
/// trend whose last relative step is below `1e-3` has settled.
pub fn limit_existence_diagnostic(seq: &LogCountSequence, d: usize) -> Result<LimitDiagnostic> {
    if seq.len() < 3 {
        return Err(Error::InvalidArgument("need at least three terms".into()));
    }
    if d < 1 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    let n_max = seq.n_max();
    let from = n_max.saturating_sub(4).max(seq.start());
    let trend: Vec<f64> = (from..=n_max).map(|n| alpha_at(seq, d as f64, n)).collect();
    let empty = seq.total(n_max) == f64::NEG_INFINITY;
    let last = *trend.last().unwrap();
    let verdict = if empty || last <= 1e-12 {
        LimitVerdict::Zero
    } else {
        let shrinking = trend.windows(2).all(|w| w[1] < 0.9 * w[0]);
        let prev = trend[trend.len() - 2];
        if shrinking {
            LimitVerdict::Zero
        } else if ((last - prev) / last).abs() < 1e-3 {
            LimitVerdict::Positive
        } else {
            LimitVerdict::Inconclusive
        }
    };
    Ok(LimitDiagnostic { verdict, trend, empty })
}

/// Perturbation `g_n` in `x_{n+1} = x_n^2 + |g_n|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PerturbationRule {
    Zero,
    /// `g_n = x_n`.
    Maximal,
    /// `g_n = U_n x_n` with `U_n` uniform on `[0, 1)`, seeded.
    Uniform {
        seed: u64,
    },
    /// `g_n = c`; violates the bound whenever `c > x_n`.
    Constant(f64),
}

/// `ln x_n` for `n = 1..=n_max`, checking `|g_n| <= x_n` at every step.
pub fn aho_sloane_sequence(x1: f64, rule: PerturbationRule, n_max: usize) -> Result<LogCountSequence> {
    if !(x1 >= 1.0) || !x1.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "x1 must be a finite value >= 1, got {x1}"
        )));
    }
    if n_max < 1 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let mut rng = match rule {
        PerturbationRule::Uniform { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut lx = x1.ln();
    let mut logs = vec![lx];
    for n in 1..n_max {
        let lg = match rule {
            PerturbationRule::Zero => f64::NEG_INFINITY,
            PerturbationRule::Maximal => lx,
            PerturbationRule::Uniform { .. } => lx + rng.as_mut().unwrap().random::<f64>().ln(),
            PerturbationRule::Constant(c) => c.abs().ln(),
        };
        if lg > lx {
            return Err(Error::PerturbationBound { n });
        }
        lx = 2.0 * lx + (lg - 2.0 * lx).exp().ln_1p();
        logs.push(lx);
    }
    Ok(LogCountSequence::from_totals(1, logs))
}

/// Entropy of the perturbed squaring recurrence, by the difference estimator.
pub fn aho_sloane_probe(x1: f64, rule: PerturbationRule, n_max: usize) -> Result<EntropyEstimate> {
    Ok(entropy_estimate(
        &aho_sloane_sequence(x1, rule, n_max)?,
        Estimator::Difference,
    ))
}

/// One CSV row of an entropy report; `None` marks an undefined field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyRow {
    pub n: usize,
    pub ln_c_n: f64,
    pub ratio_estimate: Option<f64>,
    pub difference_estimate: Option<f64>,
    pub alpha_hat: Option<f64>,
}

/// Per-index estimates; `alpha_hat` uses `kappa` when given.
pub fn entropy_rows(seq: &LogCountSequence, kappa: Option<f64>) -> Vec<EntropyRow> {
    seq.iter()
        .map(|(n, ln_c_n)| EntropyRow {
            n,
            ln_c_n,
            ratio_estimate: estimate_at(seq, Estimator::Ratio, 1, n),
            difference_estimate: estimate_at(seq, Estimator::Difference, 1, n),
            alpha_hat: kappa.filter(|&k| k > 1.0).map(|k| alpha_at(seq, k, n)),
        })
        .collect()
}
