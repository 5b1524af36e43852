//! Seeded flight-level train/test split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_TRAIN_RATIO: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit<T> {
    pub train: Vec<T>,
    pub test: Vec<T>,
    pub seed: u64,
}

/// Assigns `round(ratio * n)` items to training uniformly at random. Items
/// are ordered by `key` first, so the result does not depend on input order.
/// Both halves come back ordered by `key`.
pub fn split<T, K, F>(items: Vec<T>, key: F, ratio: f64, seed: u64) -> DatasetSplit<T>
where
    F: Fn(&T) -> K,
    K: Ord,
{
    let mut items = items;
    items.sort_by(|a, b| key(a).cmp(&key(b)));
    let n = items.len();
    let n_train = ((ratio.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_train = vec![false; n];
    for &i in &idx[..n_train] {
        is_train[i] = true;
    }
    let (mut train, mut test) = (Vec::with_capacity(n_train), Vec::with_capacity(n - n_train));
    for (item, t) in items.into_iter().zip(is_train) {
        if t {
            train.push(item);
        } else {
            test.push(item);
        }
    }
    DatasetSplit { train, test, seed }
}
