#![allow(dead_code)]

use cshift::edge::{Arch, EdgeModel};
use cshift::maps::TaskSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random edge model plus one input/target pair for it.
pub struct GradCase {
    pub model: EdgeModel,
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    pub h: usize,
    pub w: usize,
}

fn simplex(rng: &mut ChaCha8Rng, n: usize, c: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * c);
    for _ in 0..n {
        let raw: Vec<f64> = (0..c).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        out.extend(raw.iter().map(|v| v / s));
    }
    out
}

pub fn grad_case(seed: u64, arch: Arch, classification: bool) -> GradCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w) = (rng.random_range(5..9), rng.random_range(5..9));
    let cin = rng.random_range(1..4);
    let cout = rng.random_range(2..5);
    let src = TaskSpec::regression("src", cin);
    let dst = if classification {
        TaskSpec::classification("dst", cout)
    } else {
        TaskSpec::regression("dst", cout)
    };
    let mut model = EdgeModel::new(src, dst, arch, seed);
    for p in model.params_mut() {
        *p += rng.random_range(-0.3..0.3);
    }
    let input = (0..h * w * cin).map(|_| rng.random::<f64>()).collect();
    let target = if classification {
        simplex(&mut rng, h * w, cout)
    } else {
        (0..h * w * cout).map(|_| rng.random::<f64>()).collect()
    };
    GradCase { model, input, target, h, w }
}

/// Largest relative disagreement between the analytic gradient and central
/// differences over every parameter.
pub fn max_grad_rel_error(case: &GradCase) -> f64 {
    let GradCase { model, input, target, h, w } = case;
    let mut grad = vec![0.0; model.param_count()];
    model.loss_and_grad(input, target, *h, *w, &mut grad);
    let loss = |m: &EdgeModel| {
        let mut scratch = vec![0.0; m.param_count()];
        m.loss_and_grad(input, target, *h, *w, &mut scratch)
    };
    let step = 1e-5;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (i, &g) in grad.iter().enumerate() {
        let p0 = probe.params()[i];
        probe.params_mut()[i] = p0 + step;
        let up = loss(&probe);
        probe.params_mut()[i] = p0 - step;
        let down = loss(&probe);
        probe.params_mut()[i] = p0;
        let numeric = (up - down) / (2.0 * step);
        let scale = g.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((g - numeric).abs() / scale);
    }
    worst
}
