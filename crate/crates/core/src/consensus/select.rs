use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::maps::PredictionMap;

use super::median::weighted_median;
use super::metric::MetricKind;
use super::weights::{canonical_sum, compute_weights, CandidateSet, EnsembleWeights, KernelKind, WeightInput};

/// Weighted median of every channel at every pixel, with one weight vector
/// per pixel shared by all channels. Classification outputs are
/// renormalized onto the simplex.
pub fn median_with_weights(cands: &CandidateSet, weights: &EnsembleWeights) -> Result<PredictionMap> {
    let (h, w, c) = cands.dims();
    if (weights.height, weights.width, weights.n) != (h, w, cands.len()) {
        return Err(Error::Shape("weights do not match the candidate set".into()));
    }
    let rows: Vec<Vec<f64>> = (0..h * w)
        .into_par_iter()
        .map(|p| {
            let wp = weights.pixel(p);
            let mut values = vec![0.0; cands.len()];
            (0..c)
                .map(|ch| {
                    for (slot, e) in values.iter_mut().zip(cands.entries()) {
                        *slot = f64::from(e.map.data()[p * c + ch]);
                    }
                    weighted_median(&values, wp)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let data: Vec<f64> = rows.into_iter().flatten().collect();
    let mut out = PredictionMap::from_f64(h, w, c, &data)?;
    if cands.task.is_classification() {
        out.renormalize_simplex();
    }
    Ok(out)
}

/// The consensus-shift selection: adaptive per-pixel weights followed by a
/// weighted median.
pub fn cshift_select(
    cands: &CandidateSet,
    metric: MetricKind,
    kernel: KernelKind,
    input: WeightInput,
) -> Result<PredictionMap> {
    let weights = compute_weights(cands, metric, kernel, input)?;
    median_with_weights(cands, &weights)
}

/// Per-pixel arithmetic mean of the candidates.
pub fn mean_ensemble(cands: &CandidateSet) -> Result<PredictionMap> {
    let (h, w, c) = cands.dims();
    let n = cands.len() as f64;
    let mut column = vec![0.0; cands.len()];
    let data: Vec<f64> = (0..h * w * c)
        .map(|i| {
            for (slot, e) in column.iter_mut().zip(cands.entries()) {
                *slot = f64::from(e.map.data()[i]);
            }
            canonical_sum(&column) / n
        })
        .collect();
    let mut out = PredictionMap::from_f64(h, w, c, &data)?;
    if cands.task.is_classification() {
        out.renormalize_simplex();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::Candidate;
    use crate::maps::TaskSpec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn set_from(maps: Vec<PredictionMap>, task: TaskSpec) -> CandidateSet {
        let n = maps.len();
        let entries = maps
            .into_iter()
            .enumerate()
            .map(|(i, m)| Candidate {
                tag: format!("c{i}"),
                map: m,
            })
            .collect();
        CandidateSet::new(task, entries, n - 1).unwrap()
    }

    #[test]
    fn hand_evaluated_selection() {
        let maps = [0.0f32, 0.5, 0.52].map(|v| PredictionMap::filled(1, 1, 1, v)).to_vec();
        let set = set_from(maps, TaskSpec::regression("depth", 1));
        let out = cshift_select(&set, MetricKind::L1, KernelKind::Identity, WeightInput::Similarity).unwrap();
        assert_eq!(out.get(0, 0, 0), 0.52);
        let mean = mean_ensemble(&set).unwrap();
        assert!((mean.get(0, 0, 0) - 0.34).abs() < 1e-6);
    }

    #[test]
    fn identical_candidates_are_a_fixed_point() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let m = PredictionMap::from_fn(8, 8, 3, |_, _, _| rng.random());
        let set = set_from(vec![m.clone(); 4], TaskSpec::regression("rgb", 3));
        for metric in MetricKind::ALL {
            let out = cshift_select(&set, metric, KernelKind::Identity, WeightInput::Similarity).unwrap();
            assert_eq!(out, m, "{metric:?}");
        }
    }

    #[test]
    fn classification_output_on_simplex() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let maps = (0..4)
            .map(|_| {
                let mut m = PredictionMap::from_fn(6, 6, 4, |_, _, _| rng.random::<f32>() + 0.01);
                m.renormalize_simplex();
                m
            })
            .collect();
        let task = TaskSpec::classification("seg", 4);
        let set = set_from(maps, task.clone());
        let out = cshift_select(&set, MetricKind::L2, KernelKind::Identity, WeightInput::Similarity).unwrap();
        out.validate(&task).unwrap();
    }

    #[test]
    fn constant_kernel_matches_unweighted_median() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let maps: Vec<PredictionMap> = (0..5).map(|_| PredictionMap::from_fn(4, 4, 1, |_, _, _| rng.random())).collect();
        let set = set_from(maps.clone(), TaskSpec::regression("depth", 1));
        let out = cshift_select(&set, MetricKind::L1, KernelKind::Constant, WeightInput::Similarity).unwrap();
        for p in 0..16 {
            let mut v: Vec<f32> = maps.iter().map(|m| m.data()[p]).collect();
            v.sort_by(f32::total_cmp);
            assert_eq!(out.data()[p], v[2]);
        }
    }

    fn arb_maps() -> impl Strategy<Value = (Vec<PredictionMap>, Vec<usize>)> {
        (2usize..6, any::<u64>()).prop_flat_map(|(n, seed)| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let maps: Vec<PredictionMap> = (0..n)
                .map(|_| PredictionMap::from_fn(5, 5, 2, |_, _, _| rng.random()))
                .collect();
            (Just(maps), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn selection_is_permutation_invariant(
            (maps, perm) in arb_maps(),
            metric_idx in 0usize..6,
            gaussian in any::<bool>(),
        ) {
            let metric = MetricKind::ALL[metric_idx];
            let kernel = if gaussian { KernelKind::Gaussian { sigma: 0.2 } } else { KernelKind::Identity };
            let set = set_from(maps, TaskSpec::regression("normals", 2));
            let a = cshift_select(&set, metric, kernel, WeightInput::Similarity).unwrap();
            let b = cshift_select(&set.permuted(&perm).unwrap(), metric, kernel, WeightInput::Similarity).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn weights_are_normalized(
            (maps, _) in arb_maps(),
            metric_idx in 0usize..6,
        ) {
            let set = set_from(maps, TaskSpec::regression("normals", 2));
            let w = compute_weights(&set, MetricKind::ALL[metric_idx], KernelKind::Identity, WeightInput::Similarity).unwrap();
            for p in 0..25 {
                let s: f64 = w.pixel(p).iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
                prop_assert!(w.pixel(p).iter().all(|v| *v >= 0.0));
            }
        }

        #[test]
        fn output_within_candidate_range((maps, _) in arb_maps()) {
            let set = set_from(maps.clone(), TaskSpec::regression("normals", 2));
            let out = cshift_select(&set, MetricKind::L1, KernelKind::Identity, WeightInput::Similarity).unwrap();
            for i in 0..out.data().len() {
                let lo = maps.iter().map(|m| m.data()[i]).fold(f32::INFINITY, f32::min);
                let hi = maps.iter().map(|m| m.data()[i]).fold(f32::NEG_INFINITY, f32::max);
                prop_assert!(out.data()[i] >= lo && out.data()[i] <= hi);
            }
        }
    }

    #[test]
    fn outlier_is_rejected() {
        // three agreeing views and one far outlier; the current view agrees
        let good = PredictionMap::filled(4, 4, 1, 0.4);
        let near = PredictionMap::filled(4, 4, 1, 0.42);
        let bad = PredictionMap::filled(4, 4, 1, 1.0);
        let set = set_from(vec![bad, near.clone(), near, good], TaskSpec::regression("depth", 1));
        let cs = cshift_select(&set, MetricKind::L1, KernelKind::Identity, WeightInput::Similarity).unwrap();
        let mean = mean_ensemble(&set).unwrap();
        assert!((cs.get(0, 0, 0) - 0.4).abs() <= 0.02 + 1e-6);
        assert!(mean.get(0, 0, 0) > 0.55);
    }
}
