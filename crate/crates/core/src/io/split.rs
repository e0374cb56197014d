//! Deterministic train/val/test splitting.
//!
//! Ids are sorted, shuffled with a Fisher-Yates pass driven by a ChaCha8
//! stream seeded from the split seed, and cut into prefix slices. The
//! uniform index draw is done here (not through `rand`'s range sampling) so
//! the permutation only depends on the ChaCha8 output stream.

use std::collections::HashSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SplitError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_count: u64,
    pub val_count: u64,
    pub test_count: u64,
    pub seed: u64,
}

impl SplitSpec {
    /// The published partition sizes.
    pub const fn published(seed: u64) -> Self {
        SplitSpec {
            train_count: 480_005,
            val_count: 10_000,
            test_count: 50_000,
            seed,
        }
    }

    pub fn total(&self) -> u64 {
        self.train_count + self.val_count + self.test_count
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

/// Uniform integer in `0..bound` by rejection, `bound > 0`.
pub(crate) fn uniform_below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % bound;
        }
    }
}

/// Sorts `ids` and applies a seeded Fisher-Yates shuffle to the first
/// `prefix` positions (the full shuffle when `prefix == ids.len()`).
pub(crate) fn seeded_permutation<T: Ord>(ids: &mut [T], seed: u64, prefix: usize) {
    ids.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ids.len();
    for i in 0..prefix.min(n.saturating_sub(1)) {
        let j = i + uniform_below(&mut rng, (n - i) as u64) as usize;
        ids.swap(i, j);
    }
}

pub fn split_dataset(ids: &[String], spec: &SplitSpec) -> Result<Split, SplitError> {
    if spec.total() > ids.len() as u64 {
        return Err(SplitError::CountsExceedCorpus {
            requested: spec.total(),
            available: ids.len(),
        });
    }
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(SplitError::DuplicateId(id.clone()));
        }
    }
    let mut order: Vec<&str> = ids.iter().map(String::as_str).collect();
    let n = order.len();
    seeded_permutation(&mut order, spec.seed, n);

    let (train_n, val_n, test_n) = (
        spec.train_count as usize,
        spec.val_count as usize,
        spec.test_count as usize,
    );
    let take = |from: usize, n: usize| order[from..from + n].iter().map(|s| s.to_string()).collect();
    Ok(Split {
        train: take(0, train_n),
        val: take(train_n, val_n),
        test: take(train_n + val_n, test_n),
    })
}
