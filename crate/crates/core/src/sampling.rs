use thiserror::Error;

use crate::io::seeded_permutation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sample of {requested} requested from {available} ids")]
pub struct SampleTooLarge {
    pub requested: usize,
    pub available: usize,
}

/// Draws `size` distinct ids. The draw depends only on the set of ids, the
/// size and the seed; input order is irrelevant.
pub fn sample_without_replacement(
    ids: &[String],
    size: usize,
    seed: u64,
) -> Result<Vec<String>, SampleTooLarge> {
    let mut pool: Vec<&str> = ids.iter().map(String::as_str).collect();
    pool.sort_unstable();
    pool.dedup();
    if size > pool.len() {
        return Err(SampleTooLarge {
            requested: size,
            available: pool.len(),
        });
    }
    seeded_permutation(&mut pool, seed, size);
    Ok(pool[..size].iter().map(|s| s.to_string()).collect())
}
