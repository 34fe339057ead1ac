//! Block counting under leaf constraints, and the `d = k = 2` criteria for
//! when a boundary condition keeps the full entropy.
//!
//! Every boundary count is the block recurrence run from a different base
//! vector at height 1, where `â_1^(j)` weighs a leaf labeled `j`:
//!
//! - Dirichlet(i): leaves must be `i`, so `â_1 = e_i` and the count is
//!   `sum_j â_n^(j)`.
//! - Neumann: a leaf copies its parent, so a depth `n-2` node labeled `j`
//!   needs the constant block `(j; j, ..., j)`. With
//!   `â_1^(j) = [(j; j, ..., j) in B]` the count is `sum_j â_{n-1}^(j)`.
//! - Periodic: leaves equal the root, so for each root `i` the count is
//!   `â_n^(i)` from base `e_i`, summed over `i`.
//!
//! The periodic count is defined the same way for every `(d, k)`; the
//! theorem checks below only apply to `d = k = 2`.

use num_bigint::BigUint;
use serde::{Serialize, Serializer};

use crate::classify::{classify_2x2, VerdictValue};
use crate::entropy::{entropy_estimate, EntropyEstimate, Estimator};
use crate::error::{Error, Result};
use crate::eval::{
    count_log, evaluate_exact_from, evaluate_log_from, LogCountSequence, DEFAULT_BIT_BUDGET, DEFAULT_PRECISION,
};
use crate::model::{BasicSet, Symbol, TwoBlock};
use crate::snre::{derive_snre, Snre};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    Periodic,
    Dirichlet(Symbol),
    Neumann,
}

impl std::fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryKind::Periodic => write!(f, "periodic"),
            BoundaryKind::Dirichlet(i) => write!(f, "dirichlet:{i}"),
            BoundaryKind::Neumann => write!(f, "neumann"),
        }
    }
}

impl std::str::FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(BoundaryKind::Periodic),
            "neumann" => Ok(BoundaryKind::Neumann),
            _ => s
                .strip_prefix("dirichlet:")
                .and_then(|i| i.parse().ok())
                .map(BoundaryKind::Dirichlet)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown boundary `{s}`"))),
        }
    }
}

impl Serialize for BoundaryKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Exact,
    Log,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCount {
    Exact(BigUint),
    /// Natural log of the count; `-inf` for zero.
    Log(f64),
}

fn unit(k: usize, i: Symbol) -> Vec<BigUint> {
    (1..=k as Symbol).map(|j| BigUint::from(u8::from(j == i))).collect()
}

/// Base vectors, each paired with the recurrence length and which entries
/// to read off (`None` = sum all).
fn runs(s: &Snre, b: &BasicSet, kind: BoundaryKind, n: usize) -> Result<Vec<(Vec<BigUint>, usize, Option<Symbol>)>> {
    let sig = b.signature();
    let k = sig.k();
    Ok(match kind {
        BoundaryKind::Dirichlet(i) => {
            sig.check_symbol(i)?;
            vec![(unit(k, i), n, None)]
        }
        BoundaryKind::Neumann => {
            let base = sig
                .symbols()
                .map(|j| BigUint::from(u8::from(s.rules(j).contains(&vec![j; sig.d()]))))
                .collect();
            vec![(base, n - 1, None)]
        }
        BoundaryKind::Periodic => sig.symbols().map(|i| (unit(k, i), n, Some(i))).collect(),
    })
}

fn prepared(b: &BasicSet, essentialize: bool) -> BasicSet {
    if essentialize {
        b.essentialize().0
    } else {
        b.clone()
    }
}

/// `|B_n^kind|` for `n = 2..=n_max`, exactly.
pub fn boundary_counts_exact(
    b: &BasicSet,
    kind: BoundaryKind,
    n_max: usize,
    essentialize: bool,
) -> Result<Vec<BigUint>> {
    if n_max < 2 {
        return Err(Error::InvalidArgument("boundary counts need n >= 2".into()));
    }
    let b = prepared(b, essentialize);
    let s = derive_snre(&b);
    let mut totals = vec![BigUint::default(); n_max - 1];
    for (base, len, pick) in runs(&s, &b, kind, n_max)? {
        let seq = evaluate_exact_from(&s, &base, 1, len.max(1), DEFAULT_BIT_BUDGET)?;
        let shift = n_max - len;
        for (n, total) in (2..=n_max).zip(totals.iter_mut()) {
            let m = n - shift;
            *total += match pick {
                None => seq.total(m).clone(),
                Some(i) => seq.get(m, i).clone(),
            };
        }
    }
    Ok(totals)
}

/// `ln |B_n^kind|` for `n = 2..=n_max`.
pub fn boundary_counts_log(
    b: &BasicSet,
    kind: BoundaryKind,
    n_max: usize,
    precision: u32,
    essentialize: bool,
) -> Result<LogCountSequence> {
    if n_max < 2 {
        return Err(Error::InvalidArgument("boundary counts need n >= 2".into()));
    }
    let b = prepared(b, essentialize);
    let s = derive_snre(&b);
    let mut parts: Vec<Vec<f64>> = vec![Vec::new(); n_max - 1];
    for (base, len, pick) in runs(&s, &b, kind, n_max)? {
        let seq = evaluate_log_from(&s, &base, 1, len.max(1), precision)?;
        let shift = n_max - len;
        for (n, slot) in (2..=n_max).zip(parts.iter_mut()) {
            let m = n - shift;
            slot.push(match pick {
                None => seq.total(m),
                Some(i) => seq.get(m, i),
            });
        }
    }
    Ok(LogCountSequence::from_totals(
        2,
        parts.iter().map(|p| log_sum_exp(p)).collect(),
    ))
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `|B_n^kind|` on the essentialized set.
pub fn count_boundary(b: &BasicSet, kind: BoundaryKind, n: usize, backend: Backend) -> Result<BoundaryCount> {
    Ok(match backend {
        Backend::Exact => BoundaryCount::Exact(boundary_counts_exact(b, kind, n, true)?.pop().unwrap()),
        Backend::Log => BoundaryCount::Log(boundary_counts_log(b, kind, n, DEFAULT_PRECISION, true)?.total(n)),
    })
}

/// Difference estimate of `h^kind` at `n_max`.
pub fn boundary_entropy(b: &BasicSet, kind: BoundaryKind, n_max: usize) -> Result<EntropyEstimate> {
    if n_max < 4 {
        return Err(Error::InvalidArgument("boundary entropy needs n_max >= 4".into()));
    }
    let seq = boundary_counts_log(b, kind, n_max, DEFAULT_PRECISION, true)?;
    Ok(entropy_estimate(&seq, Estimator::Difference))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Equal,
    StrictlyLess,
    Unknown,
}

/// One subset condition of a criterion and whether it holds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub condition: String,
    #[serde(serialize_with = "blocks_as_strings")]
    pub blocks: Vec<TwoBlock>,
    pub holds: bool,
}

fn blocks_as_strings<S: Serializer>(blocks: &[TwoBlock], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(blocks.iter().map(|b| b.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryNumerics {
    pub h: f64,
    pub h_boundary: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub kind: BoundaryKind,
    pub relation: Relation,
    pub witnesses: Vec<Witness>,
    pub numeric: Option<BoundaryNumerics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Index at which the numeric comparison is evaluated.
pub const CHECK_N: usize = 30;

fn tb(root: Symbol, c: Symbol) -> TwoBlock {
    TwoBlock::new(root, vec![c, c])
}

fn witness(b: &BasicSet, condition: &str, blocks: Vec<TwoBlock>) -> Witness {
    Witness {
        condition: condition.to_string(),
        holds: blocks.iter().all(|x| b.contains(x)),
        blocks,
    }
}

/// Shared scaffolding: signature check, hypothesis `h > 0`, numerics.
fn check_with(
    b: &BasicSet,
    kind: BoundaryKind,
    decide: impl FnOnce(&BasicSet) -> (Relation, Vec<Witness>),
) -> Result<TheoremCheck> {
    let sig = b.signature();
    if sig.d() != 2 || sig.k() != 2 {
        return Err(Error::WrongSignature(format!(
            "boundary criteria need d=2 k=2, got {sig}"
        )));
    }
    let ess = b.essentialize().0;
    let h = count_log(&ess, CHECK_N, DEFAULT_PRECISION, false)
        .map(|seq| entropy_estimate(&seq, Estimator::Difference).value)?;
    let numeric = Some(BoundaryNumerics {
        h,
        h_boundary: boundary_entropy(&ess, kind, CHECK_N)?.value,
    });
    let (relation, witnesses) = decide(&ess);
    if classify_2x2(&ess)?.value != VerdictValue::LnD(2) {
        return Ok(TheoremCheck {
            kind,
            relation: Relation::Unknown,
            witnesses,
            numeric,
            note: Some("theorem hypothesis not met".into()),
        });
    }
    let note =
        (relation == Relation::Unknown).then(|| "sufficient condition fails but necessary condition holds".into());
    Ok(TheoremCheck {
        kind,
        relation,
        witnesses,
        numeric,
        note,
    })
}

fn equal_if_any(witnesses: Vec<Witness>) -> (Relation, Vec<Witness>) {
    let relation = if witnesses.iter().any(|w| w.holds) {
        Relation::Equal
    } else {
        Relation::StrictlyLess
    };
    (relation, witnesses)
}

/// `h^N = h` iff `{(1,1,1),(2,2,2)}` or `{(1,i,i),(2,i,i)}` lies in the set.
pub fn check_neumann(b: &BasicSet) -> Result<TheoremCheck> {
    check_with(b, BoundaryKind::Neumann, |b| {
        equal_if_any(vec![
            witness(b, "constant blocks", vec![tb(1, 1), tb(2, 2)]),
            witness(b, "i=1 under both roots", vec![tb(1, 1), tb(2, 1)]),
            witness(b, "i=2 under both roots", vec![tb(1, 2), tb(2, 2)]),
        ])
    })
}

/// `h^{D_i} = h` iff `{(1,i,i),(2,i,i)}` or `{(j,i,i),(1,j,j),(2,j,j)}`
/// lies in the set, `j` being the other symbol.
pub fn check_dirichlet(b: &BasicSet, i: Symbol) -> Result<TheoremCheck> {
    if !(1..=2).contains(&i) {
        return Err(Error::SymbolOutOfRange { symbol: i, k: 2 });
    }
    let j = 3 - i;
    check_with(b, BoundaryKind::Dirichlet(i), |b| {
        equal_if_any(vec![
            witness(b, "i under both roots", vec![tb(1, i), tb(2, i)]),
            witness(
                b,
                "i under the other symbol, which sits under both roots",
                vec![tb(j, i), tb(1, j), tb(2, j)],
            ),
        ])
    })
}

/// Sufficient: `v_i >= v_j` and `{(1,i,i),(2,i,i)}` in the set for one `i`.
/// Necessary: `{(1,i,i),(2,i,i)}` in the set for some `i`.
pub fn check_periodic(b: &BasicSet) -> Result<TheoremCheck> {
    check_with(b, BoundaryKind::Periodic, |b| {
        let s = derive_snre(b);
        let mut witnesses = Vec::new();
        let mut sufficient = false;
        let mut necessary = false;
        for i in 1..=2 {
            let w = witness(b, &format!("i={i} under both roots"), vec![tb(1, i), tb(2, i)]);
            let dominates = s.indicator(i).dominates(&s.indicator(3 - i)).unwrap_or(false);
            necessary |= w.holds;
            sufficient |= w.holds && dominates;
            witnesses.push(Witness {
                condition: format!("v_{i} dominates v_{}", 3 - i),
                blocks: Vec::new(),
                holds: dominates,
            });
            witnesses.push(w);
        }
        let relation = if sufficient {
            Relation::Equal
        } else if necessary {
            Relation::Unknown
        } else {
            Relation::StrictlyLess
        };
        (relation, witnesses)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Signature;
    use crate::oracle::{oracle_boundary_count, OracleQuery};
    use std::f64::consts::LN_2;

    fn set(tuples: &[&[Symbol]]) -> BasicSet {
        BasicSet::from_tuples(Signature::new(2, 2).unwrap(), tuples.iter().copied()).unwrap()
    }

    fn exact(b: &BasicSet, kind: BoundaryKind, n: usize) -> u64 {
        match count_boundary(b, kind, n, Backend::Exact).unwrap() {
            BoundaryCount::Exact(v) => u64::try_from(v).unwrap(),
            BoundaryCount::Log(_) => unreachable!(),
        }
    }

    fn dominant() -> BasicSet {
        set(&[&[1, 1, 1], &[1, 2, 2], &[2, 2, 2]])
    }

    #[test]
    fn worked_counts() {
        let full = BasicSet::full(Signature::new(2, 2).unwrap());
        assert_eq!(exact(&full, BoundaryKind::Periodic, 3), 8);
        for n in 2..=6 {
            assert_eq!(exact(&dominant(), BoundaryKind::Dirichlet(1), n), 1);
        }
        let alt = set(&[&[1, 1, 2], &[1, 2, 1], &[2, 1, 2], &[2, 2, 1]]);
        assert_eq!(exact(&alt, BoundaryKind::Neumann, 3), 0);
    }

    #[test]
    fn recurrence_matches_oracle() {
        for mask in [0u64, 37, 91, 150, 201, 255] {
            let b = BasicSet::from_mask(Signature::new(2, 2).unwrap(), mask)
                .unwrap()
                .essentialize()
                .0;
            for kind in [
                BoundaryKind::Periodic,
                BoundaryKind::Dirichlet(1),
                BoundaryKind::Dirichlet(2),
                BoundaryKind::Neumann,
            ] {
                for n in 2..=4 {
                    let o = oracle_boundary_count(&OracleQuery::new(&b, n).boundary(kind)).unwrap();
                    assert_eq!(exact(&b, kind, n), o, "mask={mask} {kind} n={n}");
                }
            }
        }
    }

    #[test]
    fn log_and_exact_agree() {
        let b = dominant();
        for kind in [
            BoundaryKind::Periodic,
            BoundaryKind::Dirichlet(2),
            BoundaryKind::Neumann,
        ] {
            let e = boundary_counts_exact(&b, kind, 8, true).unwrap();
            let l = boundary_counts_log(&b, kind, 8, 128, true).unwrap();
            for (n, v) in (2..=8).zip(&e) {
                let ln = crate::extfloat::ExtFloat::from_biguint(v, 64).ln();
                assert!((l.total(n) - ln).abs() <= 1e-9 * ln.abs().max(1.0), "{kind} n={n}");
            }
        }
    }

    #[test]
    fn boundary_entropies() {
        let full = BasicSet::full(Signature::new(2, 2).unwrap());
        for kind in [
            BoundaryKind::Periodic,
            BoundaryKind::Dirichlet(1),
            BoundaryKind::Neumann,
        ] {
            assert!((boundary_entropy(&full, kind, 30).unwrap().value - LN_2).abs() < 1e-6);
        }
        assert_eq!(
            boundary_entropy(&dominant(), BoundaryKind::Dirichlet(1), 30).unwrap().value,
            0.0
        );
        assert!((boundary_entropy(&dominant(), BoundaryKind::Dirichlet(2), 30).unwrap().value - LN_2).abs() < 1e-6);
        assert!(boundary_entropy(&full, BoundaryKind::Neumann, 3).is_err());
    }

    #[test]
    fn neumann_checks() {
        let full = BasicSet::full(Signature::new(2, 2).unwrap());
        assert_eq!(check_neumann(&full).unwrap().relation, Relation::Equal);
        let alt = set(&[&[1, 1, 2], &[1, 2, 1], &[2, 1, 2], &[2, 2, 1]]);
        let c = check_neumann(&alt).unwrap();
        assert_eq!(c.relation, Relation::StrictlyLess);
        let num = c.numeric.unwrap();
        assert!((num.h - LN_2).abs() < 0.05 && num.h_boundary.abs() < 0.05);
        let c = check_neumann(&set(&[&[1, 1, 1], &[2, 1, 1], &[1, 2, 2], &[2, 2, 2]])).unwrap();
        assert_eq!(c.relation, Relation::Equal);
        assert!(c.witnesses[1].holds);
    }

    #[test]
    fn dirichlet_checks() {
        assert_eq!(check_dirichlet(&dominant(), 2).unwrap().relation, Relation::Equal);
        let c = check_dirichlet(&dominant(), 1).unwrap();
        assert_eq!(c.relation, Relation::StrictlyLess);
        assert!(c.numeric.unwrap().h_boundary.abs() < 0.05);
        let full = BasicSet::full(Signature::new(2, 2).unwrap());
        assert_eq!(check_dirichlet(&full, 1).unwrap().relation, Relation::Equal);
        assert!(check_dirichlet(&full, 3).is_err());
    }

    #[test]
    fn periodic_checks() {
        // Symbol 1 dominates but only i=2 has both (1,2,2) and (2,2,2): the gap.
        let c = check_periodic(&dominant()).unwrap();
        assert_eq!(c.relation, Relation::Unknown);
        assert!(c.numeric.unwrap().h_boundary.abs() < 0.05);
        let alt = set(&[&[1, 1, 2], &[1, 2, 1], &[2, 1, 2], &[2, 2, 1]]);
        assert_eq!(check_periodic(&alt).unwrap().relation, Relation::StrictlyLess);
        let full = BasicSet::full(Signature::new(2, 2).unwrap());
        assert_eq!(check_periodic(&full).unwrap().relation, Relation::Equal);
    }

    #[test]
    fn hypothesis_not_met() {
        let c = check_neumann(&set(&[&[1, 1, 2], &[1, 2, 1], &[2, 2, 2]])).unwrap();
        assert_eq!(c.relation, Relation::Unknown);
        assert_eq!(c.note.as_deref(), Some("theorem hypothesis not met"));
        assert!(check_neumann(&BasicSet::full(Signature::new(2, 3).unwrap())).is_err());
    }

    #[test]
    fn kind_parsing() {
        for kind in [
            BoundaryKind::Periodic,
            BoundaryKind::Dirichlet(2),
            BoundaryKind::Neumann,
        ] {
            assert_eq!(kind.to_string().parse::<BoundaryKind>().unwrap(), kind);
        }
        assert!("dirichlet:x".parse::<BoundaryKind>().is_err());
    }
}
