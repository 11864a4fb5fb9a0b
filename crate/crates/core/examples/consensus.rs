//! Per-pixel selection on a hand-built candidate set: one good current view,
//! two noisy edge predictions, and one edge that predicts garbage.

use cshift::consensus::{
    compute_weights, cshift_select, mean_ensemble, CandidateSet, KernelKind, MetricKind, WeightInput,
};
use cshift::eval::l1_x100;
use cshift::{PredictionMap, TaskSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> cshift::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (h, w) = (24, 24);
    let truth = PredictionMap::from_fn(h, w, 1, |y, x, _| if x + y < 24 { 0.2 } else { 0.7 });
    let mut noisy = |amp: f32| {
        let mut m = truth.clone();
        for v in m.data_mut() {
            *v = (*v + rng.random_range(-amp..amp)).clamp(0.0, 1.0);
        }
        m
    };
    let current = noisy(0.05);
    let edges = vec![
        ("a".to_string(), noisy(0.1)),
        ("b".to_string(), noisy(0.1)),
        ("junk".to_string(), PredictionMap::filled(h, w, 1, 1.0)),
    ];
    let cands = CandidateSet::from_edges(TaskSpec::regression("depth", 1), edges, current)?;

    let mean = mean_ensemble(&cands)?;
    println!("mean ensemble   L1x100 {:6.2}", l1_x100(&mean, &truth)?);
    for metric in MetricKind::ALL {
        let out = cshift_select(&cands, metric, KernelKind::Identity, WeightInput::Similarity)?;
        println!("cshift {:8} L1x100 {:6.2}", metric.name(), l1_x100(&out, &truth)?);
    }

    let wts = compute_weights(&cands, MetricKind::L1, KernelKind::Identity, WeightInput::Similarity)?;
    let tags: Vec<&str> = cands.entries().iter().map(|c| c.tag.as_str()).collect();
    println!("weights at pixel 0 {tags:?}: {:.3?}", wts.pixel(0));
    Ok(())
}
