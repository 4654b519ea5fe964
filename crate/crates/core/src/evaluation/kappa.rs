//! Free-marginal multi-rater kappa.

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KappaError {
    #[error("at least 2 categories are required, got {0}")]
    Categories(usize),
    #[error("item {item} has {got} category counts, expected {expected}")]
    Shape { item: usize, got: usize, expected: usize },
}

/// Randolph's kappa over items given as per-category rating counts.
///
/// Items with fewer than two ratings carry no agreement information and are
/// skipped. Returns `None` when no item qualifies.
pub fn randolph_kappa<C: AsRef<[u32]>>(items: &[C], k: usize) -> Result<Option<f64>, KappaError> {
    if k < 2 {
        return Err(KappaError::Categories(k));
    }
    let mut sum = 0.0;
    let mut eligible = 0usize;
    for (i, item) in items.iter().enumerate() {
        let counts = item.as_ref();
        if counts.len() != k {
            return Err(KappaError::Shape { item: i, got: counts.len(), expected: k });
        }
        let n: u64 = counts.iter().map(|&c| u64::from(c)).sum();
        if n < 2 {
            continue;
        }
        let agree: u64 = counts.iter().map(|&c| u64::from(c) * u64::from(c).saturating_sub(1)).sum();
        sum += agree as f64 / (n * (n - 1)) as f64;
        eligible += 1;
    }
    if eligible == 0 {
        return Ok(None);
    }
    let observed = sum / eligible as f64;
    let chance = 1.0 / k as f64;
    Ok(Some((observed - chance) / (1.0 - chance)))
}

/// `[yes, no]` counts from boolean ratings.
pub fn binary_counts(ratings: impl IntoIterator<Item = bool>) -> [u32; 2] {
    ratings.into_iter().fold([0, 0], |[y, n], r| if r { [y + 1, n] } else { [y, n + 1] })
}
