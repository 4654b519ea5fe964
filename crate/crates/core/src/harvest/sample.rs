use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::registry::PackageRecord;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("cannot sample {requested} participants from {available} unique email addresses")]
pub struct SampleError {
    pub requested: usize,
    pub available: usize,
}

/// Unique contact addresses of all healthy records, lowercased and sorted.
pub fn unique_emails(records: &[PackageRecord]) -> Vec<String> {
    records
        .iter()
        .filter(|r| r.is_ok())
        .flat_map(|r| r.emails.iter().map(|e| e.to_lowercase()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Uniform sample without replacement. The same seed and records always
/// produce the same list in the same order.
pub fn sample_participants(
    records: &[PackageRecord],
    n: usize,
    seed: u64,
) -> Result<Vec<String>, SampleError> {
    let population = unique_emails(records);
    if n > population.len() {
        return Err(SampleError {
            requested: n,
            available: population.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, population.len(), n)
        .into_iter()
        .map(|i| population[i].clone())
        .collect())
}
