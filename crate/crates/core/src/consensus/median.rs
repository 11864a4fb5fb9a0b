use crate::error::{Error, Result};

/// Smallest value whose cumulative weight reaches half the total mass.
///
/// Pairs are sorted by `(value, weight)` first, so the result does not
/// depend on input order. Weights need not be normalized.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Config("weighted median of an empty list".into()));
    }
    if values.len() != weights.len() {
        return Err(Error::Shape(format!(
            "weighted median over {} values and {} weights",
            values.len(),
            weights.len()
        )));
    }
    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().copied()).collect();
    if pairs.iter().any(|(v, w)| !v.is_finite() || !w.is_finite() || *w < 0.0) {
        return Err(Error::Numerics("weighted median needs finite values and weights >= 0".into()));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if !(total > 0.0) {
        return Err(Error::Config("weighted median with zero total weight".into()));
    }
    let half = 0.5 * total;
    let mut acc = 0.0;
    for (v, w) in &pairs {
        acc += w;
        if acc >= half {
            return Ok(*v);
        }
    }
    Ok(pairs[pairs.len() - 1].0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(weighted_median(&[3.0, 1.0, 2.0], &[1.0, 1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(weighted_median(&[0.0, 0.5, 0.52], &[1e-6, 0.49, 0.51]).unwrap(), 0.52);
        assert_eq!(weighted_median(&[1.0, 2.0], &[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(weighted_median(&[1.0, 2.0, 9.0], &[0.0, 0.0, 1.0]).unwrap(), 9.0);
        assert!(matches!(weighted_median(&[], &[]), Err(Error::Config(_))));
        assert!(matches!(weighted_median(&[1.0], &[0.0]), Err(Error::Config(_))));
        assert!(matches!(weighted_median(&[1.0], &[1.0, 2.0]), Err(Error::Shape(_))));
        assert!(weighted_median(&[1.0], &[f64::NAN]).is_err());
    }

    /// Brute force: the smallest candidate `m` with `Σ_{v ≤ m} w ≥ total/2`.
    fn oracle(values: &[f64], weights: &[f64]) -> f64 {
        let total: f64 = weights.iter().sum();
        let mut best = f64::INFINITY;
        for &m in values {
            let below: f64 = values
                .iter()
                .zip(weights)
                .filter(|(v, _)| **v <= m)
                .map(|(_, w)| *w)
                .sum();
            if below >= 0.5 * total - 1e-12 && m < best {
                best = m;
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            pairs in prop::collection::vec((0u8..20, 1u32..100), 1..12)
        ) {
            // grid values and integer weights keep the oracle exact
            let values: Vec<f64> = pairs.iter().map(|p| f64::from(p.0) / 20.0).collect();
            let weights: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
            prop_assert_eq!(weighted_median(&values, &weights).unwrap(), oracle(&values, &weights));
        }

        #[test]
        fn permutation_invariant(
            pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..10),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            prop_assume!(pairs.iter().map(|p| p.1).sum::<f64>() > 0.0);
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let split = |v: &[(f64, f64)]| -> (Vec<f64>, Vec<f64>) { v.iter().copied().unzip() };
            let (a, wa) = split(&pairs);
            let (b, wb) = split(&shuffled);
            prop_assert_eq!(weighted_median(&a, &wa).unwrap(), weighted_median(&b, &wb).unwrap());
        }

        #[test]
        fn result_is_a_candidate_within_range(
            pairs in prop::collection::vec((-5.0f64..5.0, 0.01f64..1.0), 1..10)
        ) {
            let (v, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let m = weighted_median(&v, &w).unwrap();
            prop_assert!(v.contains(&m));
        }
    }
}
