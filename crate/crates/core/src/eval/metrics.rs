use crate::error::{Error, Result};
use crate::maps::PredictionMap;

/// `100 · mean |pred − gt|` over every pixel and channel.
pub fn l1_x100(pred: &PredictionMap, gt: &PredictionMap) -> Result<f64> {
    if !pred.same_dims(gt) {
        return Err(Error::Shape(format!("{:?} vs {:?}", pred.dims(), gt.dims())));
    }
    let sum: f64 = pred
        .data()
        .iter()
        .zip(gt.data())
        .map(|(a, b)| (f64::from(*a) - f64::from(*b)).abs())
        .sum();
    Ok(100.0 * sum / pred.data().len() as f64)
}

/// Mean of [`l1_x100`] over aligned lists of maps.
pub fn mean_l1_x100(preds: &[PredictionMap], gts: &[PredictionMap]) -> Result<f64> {
    if preds.len() != gts.len() || preds.is_empty() {
        return Err(Error::Shape(format!("{} predictions vs {} references", preds.len(), gts.len())));
    }
    let mut total = 0.0;
    for (p, g) in preds.iter().zip(gts) {
        total += l1_x100(p, g)?;
    }
    Ok(total / preds.len() as f64)
}

/// Mean over pixels and channels of the population variance across maps.
pub fn candidate_variance(maps: &[PredictionMap]) -> Result<f64> {
    let first = maps.first().ok_or_else(|| Error::Shape("no maps".into()))?;
    for m in maps {
        first.check_same_dims(m)?;
    }
    let n = maps.len() as f64;
    let len = first.data().len();
    let mut total = 0.0;
    for i in 0..len {
        let mean = maps.iter().map(|m| f64::from(m.data()[i])).sum::<f64>() / n;
        total += maps.iter().map(|m| (f64::from(m.data()[i]) - mean).powi(2)).sum::<f64>() / n;
    }
    Ok(total / len as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_map(seed: u64) -> PredictionMap {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        PredictionMap::from_fn(7, 5, 2, |_, _, _| rng.random())
    }

    #[test]
    fn examples() {
        let a = PredictionMap::filled(4, 4, 1, 0.25);
        let b = PredictionMap::filled(4, 4, 1, 0.5);
        assert_eq!(l1_x100(&a, &a).unwrap(), 0.0);
        assert_eq!(l1_x100(&a, &b).unwrap(), 25.0);
        assert!(matches!(
            l1_x100(&a, &PredictionMap::filled(4, 3, 1, 0.0)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn double_loop_oracle() {
        let a = random_map(1);
        let b = random_map(2);
        let mut s = 0.0;
        for y in 0..7 {
            for x in 0..5 {
                for c in 0..2 {
                    s += (f64::from(a.get(y, x, c)) - f64::from(b.get(y, x, c))).abs();
                }
            }
        }
        assert!((l1_x100(&a, &b).unwrap() - 100.0 * s / 70.0).abs() < 1e-6);
    }

    #[test]
    fn variance_of_two_constants() {
        let maps = [PredictionMap::filled(3, 3, 1, 0.0), PredictionMap::filled(3, 3, 1, 1.0)];
        assert_eq!(candidate_variance(&maps).unwrap(), 0.25);
        let same = vec![random_map(3); 4];
        assert_eq!(candidate_variance(&same).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn metric_axioms(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
            let (a, b, c) = (random_map(s1), random_map(s2), random_map(s3));
            let ab = l1_x100(&a, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, l1_x100(&b, &a).unwrap());
            prop_assert!(ab <= l1_x100(&a, &c).unwrap() + l1_x100(&c, &b).unwrap() + 1e-9);
            prop_assert_eq!(l1_x100(&a, &a).unwrap(), 0.0);
        }
    }
}
