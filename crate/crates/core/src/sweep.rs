//! Exhaustive classification of every basic set of a small signature.

use rayon::prelude::*;

use crate::classify::{classify_2x2, classify_general, ClassificationVerdict};
use crate::error::{Error, Result};
use crate::model::{BasicSet, Signature};
use crate::snre::derive_snre;

/// Largest number of 2-blocks (mask bits) a sweep accepts.
pub const MAX_SWEEP_BITS: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    /// Bit `i` set iff the `i`-th 2-block in lexicographic order is allowed.
    pub mask: u64,
    pub verdict: ClassificationVerdict,
    /// Difference estimate at `n = 40` on the essentialized set.
    pub h_numeric: f64,
}

/// Classifies all `2^(k^(d+1))` basic sets, in parallel, sorted by mask.
pub fn sweep(sig: Signature) -> Result<Vec<SweepRow>> {
    let bits = sig.two_block_count();
    if bits > MAX_SWEEP_BITS {
        return Err(Error::InvalidArgument(format!(
            "{sig} has {bits} two-blocks; sweeps are limited to {MAX_SWEEP_BITS}"
        )));
    }
    let two_by_two = sig.d() == 2 && sig.k() == 2;
    let mut rows = (0..1u64 << bits)
        .into_par_iter()
        .map(|mask| {
            let b = BasicSet::from_mask(sig, mask)?;
            let verdict = if two_by_two {
                classify_2x2(&b)?
            } else {
                classify_general(&derive_snre(&b))
            };
            let h_numeric = verdict.numeric_check.unwrap_or(f64::NAN);
            Ok(SweepRow {
                mask,
                verdict,
                h_numeric,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.mask);
    Ok(rows)
}
