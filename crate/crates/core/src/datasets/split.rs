use rand::seq::SliceRandom;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    /// Fraction of samples sent to the test side, in (0, 1).
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn stratified(test_fraction: f64, seed: u64) -> Self {
        Self {
            test_fraction,
            seed,
            stratified: true,
        }
    }
}

/// Splits `ds` into disjoint train and test sets.
///
/// Stratified splits shuffle each class independently and send
/// `round(test_fraction * n_class)` of its samples to the test side, keeping at
/// least one sample per class on each side. Both sides preserve the original
/// row order.
pub fn split(ds: &LabeledDataset, spec: SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    let f = spec.test_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::param(format!("test fraction must lie in (0, 1), got {f}")));
    }
    let mut rng = rng_from(spec.seed);
    let mut is_test = vec![false; ds.len()];
    if spec.stratified {
        for class in 0..ds.class_count() {
            let mut idx = ds.indices_of_class(class);
            if idx.len() < 2 {
                return Err(Error::data(format!(
                    "class {class} has {} sample(s); stratification needs at least 2",
                    idx.len()
                )));
            }
            idx.shuffle(&mut rng);
            let n_test = ((f * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
            for &i in &idx[..n_test] {
                is_test[i] = true;
            }
        }
    } else {
        let mut idx: Vec<usize> = (0..ds.len()).collect();
        idx.shuffle(&mut rng);
        let n_test = ((f * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        for &i in &idx[..n_test] {
            is_test[i] = true;
        }
    }
    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| is_test[i]);
    let train = ds
        .subset(&train_idx)
        .map_err(|e| Error::data(format!("train side of split: {e}")))?;
    let test = ds
        .subset(&test_idx)
        .map_err(|e| Error::data(format!("test side of split: {e}")))?;
    Ok((train, test))
}
