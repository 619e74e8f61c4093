use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::labels::AttributeLabels;

/// Default training-set size per attribute.
pub const DEFAULT_TRAIN: usize = 2048;
/// Default validation-set size per attribute.
pub const DEFAULT_VAL: usize = 6144;

/// The generator behind every seeded operation in this crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Disjoint, class-balanced train/validation row indices (each sorted ascending).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSplit {
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
    pub seed: u64,
}

pub fn balanced_sample(
    labels: &AttributeLabels,
    attr: &str,
    n_train: usize,
    n_val: usize,
    seed: u64,
) -> Result<SampleSplit> {
    balanced_split(&labels.column(attr)?, n_train, n_val, seed)
}

/// Draws `n/2` positives and `n/2` negatives for each split without replacement.
///
/// Positives are shuffled first, then negatives, from a single seeded stream.
pub fn balanced_split(column: &[u8], n_train: usize, n_val: usize, seed: u64) -> Result<SampleSplit> {
    if !n_train.is_multiple_of(2) || !n_val.is_multiple_of(2) {
        return Err(Error::Parameter(format!(
            "split sizes must be even (train {n_train}, val {n_val})"
        )));
    }
    let mut positives: Vec<usize> = (0..column.len()).filter(|&i| column[i] == 1).collect();
    let mut negatives: Vec<usize> = (0..column.len()).filter(|&i| column[i] == 0).collect();
    let per_class = (n_train + n_val) / 2;
    if positives.len() < per_class {
        return Err(Error::Capacity {
            class: "positive",
            needed: per_class,
            available: positives.len(),
        });
    }
    if negatives.len() < per_class {
        return Err(Error::Capacity {
            class: "negative",
            needed: per_class,
            available: negatives.len(),
        });
    }

    let mut rng = seeded_rng(seed);
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);

    let half_train = n_train / 2;
    let half_val = n_val / 2;
    let mut train: Vec<usize> = positives[..half_train]
        .iter()
        .chain(&negatives[..half_train])
        .copied()
        .collect();
    let mut val: Vec<usize> = positives[half_train..half_train + half_val]
        .iter()
        .chain(&negatives[half_train..half_train + half_val])
        .copied()
        .collect();
    train.sort_unstable();
    val.sort_unstable();
    Ok(SampleSplit {
        train_indices: train,
        val_indices: val,
        seed,
    })
}
