use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Gradients, ParamId, ParamStore};
use crate::{Error, Result};

/// Compares analytic gradients against central differences
/// `(f(θ+h) - f(θ-h)) / 2h` at the sampled scalar coordinates and returns
/// the largest `|a - n| / max(1, |a|, |n|)`.
///
/// `forward` must return the loss and, when asked, the analytic gradients.
pub fn gradient_check<F>(store: &ParamStore, forward: F, samples: &[(ParamId, usize)], h: f64) -> Result<f64>
where
    F: Fn(&ParamStore) -> Result<(f64, Gradients)>,
{
    let (_, analytic) = forward(store)?;
    let mut probe = store.clone();
    let mut worst: f64 = 0.0;
    for &(id, i) in samples {
        let orig = probe.value(id).data()[i];
        probe.value_mut(id).data_mut()[i] = orig + h;
        let (plus, _) = forward(&probe)?;
        probe.value_mut(id).data_mut()[i] = orig - h;
        let (minus, _) = forward(&probe)?;
        probe.value_mut(id).data_mut()[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Numeric(format!("non-finite loss probing {}", store.name(id))));
        }
        let numeric = (plus - minus) / (2.0 * h);
        let a = analytic.get(id).map_or(0.0, |g| g[i]);
        let rel = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Draws up to `n` distinct `(param, index)` coordinates, covering every
/// parameter at least once when `n` allows.
pub fn sample_coordinates(store: &ParamStore, n: usize, seed: u64) -> Vec<(ParamId, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all: Vec<(ParamId, usize)> = store
        .ids()
        .flat_map(|id| (0..store.value(id).len()).map(move |i| (id, i)))
        .collect();
    all.shuffle(&mut rng);
    let mut picked: Vec<(ParamId, usize)> = Vec::with_capacity(n);
    for id in store.ids() {
        if picked.len() >= n {
            break;
        }
        if let Some(c) = all.iter().find(|(p, _)| *p == id) {
            picked.push(*c);
        }
    }
    for c in all {
        if picked.len() >= n {
            break;
        }
        if !picked.contains(&c) {
            picked.push(c);
        }
    }
    picked
}
