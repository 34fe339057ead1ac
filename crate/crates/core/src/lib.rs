//! Markov tree-shifts of finite type: block counting through nonlinear
//! recurrences, entropy estimation and classification, boundary conditions,
//! and explicit realizations of Perron-root entropies.
//!
//! Symbols are `1..=k`, child positions `0..d`. Blocks are stored in
//! breadth-first order, node `p` having children `d*p + 1 ..= d*p + d`.

pub mod boundary;
pub mod classify;
pub mod entropy;
pub mod error;
pub mod eval;
pub mod extfloat;
pub mod model;
pub mod oracle;
pub mod realize;
pub mod snre;
pub mod sweep;

pub use boundary::{
    boundary_counts_exact, boundary_counts_log, boundary_entropy, check_dirichlet, check_neumann, check_periodic,
    count_boundary, Backend, BoundaryCount, BoundaryKind, Relation, TheoremCheck,
};
pub use classify::{
    classify_2x2, classify_general, dominance, is_complementary, is_symmetric, ClassificationVerdict, Dominance,
    Justification, VerdictValue,
};
pub use entropy::{
    aho_sloane_probe, entropy_estimate, entropy_estimate_lagged, hidden_entropy_estimate, limit_existence_diagnostic,
    Diagnostic, EntropyEstimate, Estimator, HiddenEntropyEstimate, PerturbationRule,
};
pub use error::{Error, Result};
pub use eval::{count_exact, count_log, evaluate_exact, evaluate_log, CountSequence, LogCountSequence};
pub use model::{BasicSet, Block, Signature, Symbol, TwoBlock};
pub use oracle::{oracle_boundary_count, oracle_count, OracleCounts, OracleQuery};
pub use realize::{build_realization, max_root, verify_realization, Realization, RealizationPolynomial};
pub use snre::{derive_snre, initial_counts, snre_to_basic_set, IndicatorVector, Monomial, MonomialSystem, Snre};
pub use sweep::{sweep, SweepRow};
