//! Brute-force block enumeration.
//!
//! Walks every labeling of the height-`n` tree in breadth-first order and
//! prunes as soon as a completed 2-block falls outside the basic set. This
//! is the ground truth every recurrence in the crate is checked against, so
//! it deliberately shares no code with the recurrence evaluators.

use crate::boundary::BoundaryKind;
use crate::error::{Error, Result};
use crate::model::{BasicSet, Symbol};

pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Clone, Debug)]
pub struct OracleQuery<'a> {
    pub basic_set: &'a BasicSet,
    pub height: usize,
    pub root_filter: Option<Symbol>,
    pub boundary: Option<BoundaryKind>,
    /// When positive, only blocks that extend to an admissible block of
    /// height `height + extend_horizon` are counted.
    pub extend_horizon: usize,
    /// Maximum number of node assignments before giving up.
    pub budget: u64,
}

impl<'a> OracleQuery<'a> {
    pub fn new(basic_set: &'a BasicSet, height: usize) -> Self {
        OracleQuery {
            basic_set,
            height,
            root_filter: None,
            boundary: None,
            extend_horizon: 0,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn root(mut self, s: Symbol) -> Self {
        self.root_filter = Some(s);
        self
    }

    pub fn boundary(mut self, kind: BoundaryKind) -> Self {
        self.boundary = Some(kind);
        self
    }

    pub fn extend(mut self, horizon: usize) -> Self {
        self.extend_horizon = horizon;
        self
    }

    pub fn budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleCounts {
    /// Count of admissible blocks with root `i + 1`.
    pub per_symbol: Vec<u64>,
    pub total: u64,
}

/// Counts admissible `n`-blocks, optionally filtered by root symbol, leaf
/// boundary predicate and extendability.
pub fn oracle_count(q: &OracleQuery<'_>) -> Result<OracleCounts> {
    let sig = q.basic_set.signature();
    if q.height == 0 {
        return Err(Error::InvalidArgument("height must be at least 1".into()));
    }
    if let Some(s) = q.root_filter {
        sig.check_symbol(s)?;
    }
    if let Some(BoundaryKind::Dirichlet(i)) = q.boundary {
        sig.check_symbol(i)?;
    }
    let mut visits = 0u64;
    let extendable = if q.extend_horizon > 0 {
        let mut ok = Vec::with_capacity(sig.k());
        for s in sig.symbols() {
            let probe = Search::new(q.basic_set, q.extend_horizon + 1, Some(s), None, None);
            ok.push(probe.run(true, q.budget, &mut visits)?[s as usize - 1] > 0);
        }
        Some(ok)
    } else {
        None
    };
    let search = Search::new(q.basic_set, q.height, q.root_filter, q.boundary, extendable);
    let per_symbol = search.run(false, q.budget, &mut visits)?;
    let total = per_symbol.iter().sum();
    Ok(OracleCounts { per_symbol, total })
}

/// Same as [`oracle_count`], for a query carrying a boundary condition.
pub fn oracle_boundary_count(q: &OracleQuery<'_>) -> Result<u64> {
    if q.boundary.is_none() {
        return Err(Error::InvalidArgument("query has no boundary condition".into()));
    }
    Ok(oracle_count(q)?.total)
}

struct Search {
    d: usize,
    k: usize,
    nodes: usize,
    internal: usize,
    tuple_count: usize,
    allowed: Vec<bool>,
    root_filter: Option<Symbol>,
    boundary: Option<BoundaryKind>,
    extendable: Option<Vec<bool>>,
}

impl Search {
    fn new(
        b: &BasicSet,
        height: usize,
        root_filter: Option<Symbol>,
        boundary: Option<BoundaryKind>,
        extendable: Option<Vec<bool>>,
    ) -> Self {
        let sig = b.signature();
        Search {
            d: sig.d(),
            k: sig.k(),
            nodes: sig.node_count(height),
            internal: sig.node_count(height - 1),
            tuple_count: sig.tuple_count(),
            allowed: b.allowed_table(),
            root_filter,
            boundary,
            extendable,
        }
    }

    /// Per-root counts; with `stop_at_first` the search ends at the first hit.
    fn run(&self, stop_at_first: bool, budget: u64, visits: &mut u64) -> Result<Vec<u64>> {
        let mut counts = vec![0u64; self.k];
        let mut labels = vec![0 as Symbol; self.nodes];
        self.dfs(0, &mut labels, &mut counts, stop_at_first, budget, visits)?;
        Ok(counts)
    }

    fn dfs(
        &self,
        p: usize,
        labels: &mut [Symbol],
        counts: &mut [u64],
        stop_at_first: bool,
        budget: u64,
        visits: &mut u64,
    ) -> Result<bool> {
        if p == self.nodes {
            counts[labels[0] as usize - 1] += 1;
            return Ok(stop_at_first);
        }
        for s in 1..=self.k as Symbol {
            *visits += 1;
            if *visits > budget {
                return Err(Error::BudgetExceeded { budget });
            }
            if p == 0 && self.root_filter.is_some_and(|r| r != s) {
                continue;
            }
            labels[p] = s;
            if p >= self.internal && !self.leaf_ok(p, labels) {
                continue;
            }
            if p > 0 && (p - 1) % self.d == self.d - 1 {
                let parent = (p - 1) / self.d;
                if !self.allowed[self.block_index(parent, labels)] {
                    continue;
                }
            }
            if self.dfs(p + 1, labels, counts, stop_at_first, budget, visits)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn block_index(&self, parent: usize, labels: &[Symbol]) -> usize {
        let first = self.d * parent + 1;
        let tuple = labels[first..first + self.d]
            .iter()
            .fold(0, |acc, &c| acc * self.k + (c as usize - 1));
        (labels[parent] as usize - 1) * self.tuple_count + tuple
    }

    fn leaf_ok(&self, p: usize, labels: &[Symbol]) -> bool {
        let s = labels[p];
        let boundary_ok = match self.boundary {
            None => true,
            Some(BoundaryKind::Periodic) => s == labels[0],
            Some(BoundaryKind::Dirichlet(i)) => s == i,
            // A single-node block has no parent to copy.
            Some(BoundaryKind::Neumann) => p == 0 || s == labels[(p - 1) / self.d],
        };
        boundary_ok && self.extendable.as_ref().is_none_or(|ext| ext[s as usize - 1])
    }
}
