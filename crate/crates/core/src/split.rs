use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::SampleId;
use crate::rng;

/// Partition of a dataset into per-iteration training parts plus held-out
/// validation and test sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub parts: Vec<Vec<SampleId>>,
    pub val: Vec<SampleId>,
    pub test: Vec<SampleId>,
}

impl DatasetSplit {
    /// The training pool: union of all parts, ascending.
    pub fn pool(&self) -> Vec<SampleId> {
        let mut all: Vec<SampleId> = self.parts.iter().flatten().copied().collect();
        all.sort();
        all
    }

    /// Pool restricted to the first `n` parts.
    pub fn pool_of(&self, n: usize) -> Vec<SampleId> {
        let mut all: Vec<SampleId> = self.parts[..n].iter().flatten().copied().collect();
        all.sort();
        all
    }

    pub fn n_samples(&self) -> usize {
        self.parts.iter().map(Vec::len).sum::<usize>() + self.val.len() + self.test.len()
    }

    /// Every split name with its members, in layout order.
    pub fn named(&self) -> Vec<(String, &[SampleId])> {
        let mut out: Vec<(String, &[SampleId])> = self
            .parts
            .iter()
            .enumerate()
            .map(|(k, p)| (format!("part{}", k + 1), p.as_slice()))
            .collect();
        out.push(("val".into(), &self.val));
        out.push(("test".into(), &self.test));
        out
    }

    pub fn check_disjoint(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (name, ids) in self.named() {
            for id in ids {
                if !seen.insert(*id) {
                    return Err(Error::Config(format!("sample {id} repeated (in {name})")));
                }
            }
        }
        Ok(())
    }
}

fn count_for(n: usize, frac: f64) -> usize {
    ((n as f64 * frac).round() as usize).max(1)
}

/// Deterministically shuffle `0..n_samples` and cut it into validation,
/// test, and `n_iters` near-equal training parts.
pub fn make_splits(
    n_samples: usize,
    n_iters: usize,
    val_frac: f64,
    test_frac: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    let frac_ok = |f: f64| f > 0.0 && f < 1.0;
    if !frac_ok(val_frac) || !frac_ok(test_frac) || val_frac + test_frac >= 1.0 {
        return Err(Error::Config(format!(
            "fractions must lie in (0,1) and sum below 1, got val={val_frac} test={test_frac}"
        )));
    }
    if n_iters == 0 {
        return Err(Error::Config("at least one training part is required".into()));
    }
    if n_samples < n_iters + 2 {
        return Err(Error::Config(format!(
            "{n_samples} samples cannot fill {n_iters} parts plus val and test"
        )));
    }
    let n_val = count_for(n_samples, val_frac);
    let n_test = count_for(n_samples, test_frac);
    let pool = n_samples.checked_sub(n_val + n_test).unwrap_or(0);
    if pool < n_iters || n_val + n_test > n_samples {
        return Err(Error::Config(format!(
            "{n_samples} samples leave {pool} for {n_iters} training parts"
        )));
    }

    let mut ids: Vec<SampleId> = (0..n_samples as u32).map(SampleId).collect();
    ids.shuffle(&mut rng::stream(seed, &[rng::label("splits")]));

    let sorted = |s: &[SampleId]| {
        let mut v = s.to_vec();
        v.sort();
        v
    };
    let val = sorted(&ids[..n_val]);
    let test = sorted(&ids[n_val..n_val + n_test]);
    let rest = &ids[n_val + n_test..];

    let mut parts = Vec::with_capacity(n_iters);
    let base = pool / n_iters;
    let extra = pool % n_iters;
    let mut start = 0;
    for k in 0..n_iters {
        let len = base + usize::from(k < extra);
        parts.push(sorted(&rest[start..start + len]));
        start += len;
    }
    Ok(DatasetSplit { parts, val, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_split_sizes() {
        let s = make_splits(10, 2, 0.1, 0.1, 0).unwrap();
        assert_eq!(s.parts.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 4]);
        assert_eq!(s.val.len(), 1);
        assert_eq!(s.test.len(), 1);
        assert_eq!(s, make_splits(10, 2, 0.1, 0.1, 0).unwrap());
    }

    #[test]
    fn every_id_exactly_once() {
        let s = make_splits(100, 2, 0.1, 0.1, 7).unwrap();
        let mut all: Vec<u32> = s.named().iter().flat_map(|(_, ids)| ids.iter().map(|i| i.0)).collect();
        all.sort();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn infeasible_configs() {
        assert!(make_splits(3, 2, 0.1, 0.1, 0).is_err());
        assert!(make_splits(10, 0, 0.1, 0.1, 0).is_err());
        assert!(make_splits(10, 2, 0.0, 0.1, 0).is_err());
        assert!(make_splits(10, 2, 0.6, 0.5, 0).is_err());
    }

    proptest! {
        #[test]
        fn splits_are_disjoint_and_balanced(
            n in 4usize..300, iters in 1usize..4, seed in any::<u64>()
        ) {
            prop_assume!(n >= iters + 2);
            if let Ok(s) = make_splits(n, iters, 0.1, 0.15, seed) {
                s.check_disjoint().unwrap();
                prop_assert_eq!(s.n_samples(), n);
                let lens: Vec<usize> = s.parts.iter().map(Vec::len).collect();
                if let (Some(lo), Some(hi)) = (lens.iter().min(), lens.iter().max()) {
                    prop_assert!(hi - lo <= 1);
                }
            }
        }
    }
}
