//! Seeded dataset split: shuffle once, cut twice.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::SplitSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

/// Shuffle the ids with a ChaCha8 generator seeded from the spec, then cut at
/// `round(train * N)` and `round((train + val) * N)`. The partitions are
/// disjoint, cover the input, and are identical for identical seeds.
pub fn split_dataset(ids: &[String], spec: &SplitSpec) -> Result<DatasetSplit> {
    if ids.is_empty() {
        return Err(Error::Config("cannot split an empty id list".into()));
    }
    let mut shuffled: Vec<String> = ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    shuffled.shuffle(&mut rng);

    let n = shuffled.len();
    let cut1 = ((spec.train * n as f64).round() as usize).min(n);
    let cut2 = (((spec.train + spec.val) * n as f64).round() as usize).clamp(cut1, n);

    let test = shuffled.split_off(cut2);
    let val = shuffled.split_off(cut1);
    Ok(DatasetSplit { train: shuffled, val, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("img{i:04}")).collect()
    }

    #[test]
    fn exact_division_sizes() {
        let split = split_dataset(&ids(10), &SplitSpec::seven_two_one(7)).unwrap();
        assert_eq!(split.train.len(), 7);
        assert_eq!(split.val.len(), 2);
        assert_eq!(split.test.len(), 1);
    }

    #[test]
    fn bccd_sized_input_rounds_to_documented_sizes() {
        let split = split_dataset(&ids(364), &SplitSpec::seven_two_one(42)).unwrap();
        assert_eq!(split.train.len(), 255);
        assert_eq!(split.val.len(), 73);
        assert_eq!(split.test.len(), 36);
    }

    #[test]
    fn same_seed_same_partition() {
        let a = split_dataset(&ids(50), &SplitSpec::seven_two_one(123)).unwrap();
        let b = split_dataset(&ids(50), &SplitSpec::seven_two_one(123)).unwrap();
        assert_eq!(a, b);
        let c = split_dataset(&ids(50), &SplitSpec::seven_two_one(124)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn partitions_are_disjoint_and_exhaustive() {
        for n in [1usize, 2, 3, 9, 37, 100] {
            let input = ids(n);
            let split = split_dataset(&input, &SplitSpec::seven_two_one(5)).unwrap();
            let mut all: Vec<&String> =
                split.train.iter().chain(&split.val).chain(&split.test).collect();
            assert_eq!(all.len(), n);
            let unique: BTreeSet<&String> = all.drain(..).collect();
            assert_eq!(unique.len(), n);
            assert_eq!(unique, input.iter().collect());
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            split_dataset(&[], &SplitSpec::seven_two_one(0)),
            Err(Error::Config(_))
        ));
    }
}
