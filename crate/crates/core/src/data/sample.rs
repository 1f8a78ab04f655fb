use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::squad::{RcExample, SquadFile};
use crate::{Error, Result};

/// Number of paragraphs kept for a percentage: `round(pct / 100 * n)`.
pub fn fraction_count(n: usize, pct: f64) -> Result<usize> {
    if !(pct > 0.0 && pct <= 100.0) {
        return Err(Error::Contract(format!("fraction {pct}% outside (0, 100]")));
    }
    Ok((pct / 100.0 * n as f64).round() as usize)
}

/// Seeded paragraph-level sample: shuffle the distinct ids and keep the
/// first `round(pct/100 * N)`.
pub fn sample_paragraph_ids(ids: &[String], pct: f64, seed: u64) -> Result<HashSet<String>> {
    let mut seen = HashSet::new();
    let mut unique: Vec<&String> = ids.iter().filter(|id| seen.insert(id.as_str())).collect();
    let k = fraction_count(unique.len(), pct)?;
    unique.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(unique.into_iter().take(k).cloned().collect())
}

/// Keeps every question of the sampled paragraphs, in input order.
pub fn sample_fraction(examples: &[RcExample], pct: f64, seed: u64) -> Result<Vec<RcExample>> {
    let ids: Vec<String> = examples.iter().map(|e| e.paragraph_id.clone()).collect();
    let keep = sample_paragraph_ids(&ids, pct, seed)?;
    Ok(examples.iter().filter(|e| keep.contains(&e.paragraph_id)).cloned().collect())
}

/// File-level variant used by the CLI.
pub fn sample_squad(file: &SquadFile, pct: f64, seed: u64) -> Result<SquadFile> {
    let keep = sample_paragraph_ids(&file.paragraph_ids(), pct, seed)?;
    Ok(file.retain_paragraphs(&keep))
}
