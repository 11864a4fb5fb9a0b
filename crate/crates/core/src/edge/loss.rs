use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{PredictionMap, TaskKind};
use crate::ssim;

/// Probability floor inside the log of the cross-entropy.
const CE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSpec {
    /// `0.5·MSE + 0.5·(1 − mean SSIM)`.
    L2Ssim,
    /// Mean per-pixel cross-entropy against (soft) target distributions.
    CrossEntropy,
}

impl LossSpec {
    pub fn for_kind(kind: TaskKind) -> Self {
        match kind {
            TaskKind::Regression => LossSpec::L2Ssim,
            TaskKind::Classification => LossSpec::CrossEntropy,
        }
    }

    pub fn matches(&self, kind: TaskKind) -> bool {
        *self == Self::for_kind(kind)
    }
}

/// Loss value and gradient w.r.t. the prediction, on raw `h×w×c` buffers.
pub fn loss_with_grad(
    pred: &[f64],
    target: &[f64],
    h: usize,
    w: usize,
    c: usize,
    spec: LossSpec,
) -> (f64, Vec<f64>) {
    debug_assert_eq!(pred.len(), h * w * c);
    debug_assert_eq!(target.len(), h * w * c);
    match spec {
        LossSpec::L2Ssim => {
            let n = pred.len() as f64;
            let mut mse = 0.0;
            let (mean_ssim, ssim_grad) = ssim::mean_ssim_with_grad(pred, target, h, w, c);
            let mut grad = Vec::with_capacity(pred.len());
            for ((p, t), sg) in pred.iter().zip(target).zip(&ssim_grad) {
                let d = p - t;
                mse += d * d;
                grad.push(0.5 * 2.0 * d / n - 0.5 * sg);
            }
            (0.5 * mse / n + 0.5 * (1.0 - mean_ssim), grad)
        }
        LossSpec::CrossEntropy => {
            let pixels = (h * w) as f64;
            let mut value = 0.0;
            let grad = pred
                .iter()
                .zip(target)
                .map(|(&p, &t)| {
                    let pc = p.max(CE_FLOOR);
                    value -= t * pc.ln();
                    -t / pc / pixels
                })
                .collect();
            (value / pixels, grad)
        }
    }
}

/// Loss between two maps; the gradient is w.r.t. `pred`, channel-last.
pub fn composite_loss(
    pred: &PredictionMap,
    target: &PredictionMap,
    spec: LossSpec,
) -> Result<(f64, Vec<f64>)> {
    if !pred.same_dims(target) {
        return Err(Error::Shape(format!(
            "loss between {:?} and {:?}",
            pred.dims(),
            target.dims()
        )));
    }
    let (h, w, c) = pred.dims();
    Ok(loss_with_grad(&pred.to_f64(), &target.to_f64(), h, w, c, spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_regression_maps_have_zero_loss() {
        let m = PredictionMap::from_fn(8, 8, 1, |y, x, _| (y * 8 + x) as f32 / 64.0);
        let (v, g) = composite_loss(&m, &m, LossSpec::L2Ssim).unwrap();
        assert!(v.abs() < 1e-12);
        assert!(g.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn constant_maps() {
        let zero = PredictionMap::filled(8, 8, 1, 0.0);
        let one = PredictionMap::filled(8, 8, 1, 1.0);
        let (v, _) = composite_loss(&zero, &one, LossSpec::L2Ssim).unwrap();
        let expected = 0.5 * 1.0 + 0.5 * (1.0 - ssim::C1 / (1.0 + ssim::C1));
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_of_one_hot() {
        let t = PredictionMap::new(1, 2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let p = PredictionMap::new(1, 2, 2, vec![0.5, 0.5, 0.25, 0.75]).unwrap();
        let (v, _) = composite_loss(&p, &t, LossSpec::CrossEntropy).unwrap();
        let expected = -(0.5f64.ln() + 0.75f64.ln()) / 2.0;
        assert!((v - expected).abs() < 1e-7);
    }

    #[test]
    fn shape_mismatch() {
        let a = PredictionMap::zeros(4, 4, 1);
        let b = PredictionMap::zeros(4, 4, 2);
        assert!(matches!(
            composite_loss(&a, &b, LossSpec::L2Ssim),
            Err(Error::Shape(_))
        ));
    }
}
