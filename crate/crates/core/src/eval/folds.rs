//! Seeded rotating train/validation/test splits.
//!
//! Documents are sorted, shuffled once with the seed, and laid on a ring.
//! Fold `k` starts at offset `k * n / folds`; its test window is the next
//! `round(test * n)` documents, the validation window follows, and the rest
//! train.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for Split {
    fn default() -> Self {
        Split {
            train: 0.7,
            validation: 0.1,
            test: 0.2,
        }
    }
}

impl Split {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("split fractions must lie in [0, 1]".into()));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("split fractions must sum to 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold: usize,
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

pub fn fold_splits(doc_ids: &[String], folds: usize, split: Split, seed: u64) -> Result<Vec<FoldSplit>> {
    split.validate()?;
    let n = doc_ids.len();
    if folds == 0 {
        return Err(Error::Config("folds must be positive".into()));
    }
    if n < folds {
        return Err(Error::Evaluation(format!(
            "{n} labeled documents are too few for {folds} folds"
        )));
    }
    let n_test = (split.test * n as f64).round() as usize;
    let n_val = (split.validation * n as f64).round() as usize;
    if n_test == 0 || n_test + n_val >= n {
        return Err(Error::Evaluation(format!(
            "{n} labeled documents cannot fill a {}/{}/{} split",
            split.train, split.validation, split.test
        )));
    }

    let mut ring = doc_ids.to_vec();
    ring.sort();
    if ring.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("duplicate document in evaluation set".into()));
    }
    ring.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    Ok((0..folds)
        .map(|k| {
            let offset = k * n / folds;
            let at = |i: usize| ring[(offset + i) % n].clone();
            FoldSplit {
                fold: k,
                test: (0..n_test).map(at).collect(),
                validation: (n_test..n_test + n_val).map(at).collect(),
                train: (n_test + n_val..n).map(at).collect(),
            }
        })
        .collect())
}

/// Seeded train/validation split of a whole labeled set, for training a
/// deployable ensemble outside cross-validation. The validation slice may be
/// empty when `validation` rounds to zero documents.
pub fn holdout_split(doc_ids: &[String], validation: f64, seed: u64) -> Result<(Vec<String>, Vec<String>)> {
    if !(0.0..1.0).contains(&validation) {
        return Err(Error::Config("validation fraction must lie in [0, 1)".into()));
    }
    let mut ids = doc_ids.to_vec();
    ids.sort();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("duplicate document in training set".into()));
    }
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = (validation * ids.len() as f64).round() as usize;
    if ids.len() <= n_val {
        return Err(Error::Evaluation(format!("{} labeled documents are too few to train", ids.len())));
    }
    let train = ids.split_off(n_val);
    Ok((train, ids))
}
