//! Per-pixel distance and similarity maps between two prediction maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgops::{box_blur, sobel_magnitude, SOBEL_MAX};
use crate::maps::PredictionMap;
use crate::ssim;

/// Upper clamp for PSNR in dB.
pub const PSNR_MAX: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    L1,
    L2,
    Psnr,
    Ssim,
    Variance,
    /// Handcrafted multi-scale stand-in for a learned perceptual metric
    /// (value plus gradient magnitude at three scales, per channel).
    /// Not LPIPS.
    Perceptual,
}

impl MetricKind {
    pub const ALL: [MetricKind; 6] = [
        MetricKind::L1,
        MetricKind::L2,
        MetricKind::Psnr,
        MetricKind::Ssim,
        MetricKind::Variance,
        MetricKind::Perceptual,
    ];

    /// `true` for metrics where a larger value means more alike.
    pub fn larger_is_similar(self) -> bool {
        matches!(self, MetricKind::Psnr | MetricKind::Ssim)
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::L1 => "l1",
            MetricKind::L2 => "l2",
            MetricKind::Psnr => "psnr",
            MetricKind::Ssim => "ssim",
            MetricKind::Variance => "var",
            MetricKind::Perceptual => "perc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "l1" => MetricKind::L1,
            "l2" => MetricKind::L2,
            "psnr" => MetricKind::Psnr,
            "ssim" => MetricKind::Ssim,
            "var" | "variance" => MetricKind::Variance,
            "perc" | "perceptual" => MetricKind::Perceptual,
            other => return Err(Error::Config(format!("unknown metric `{other}`"))),
        })
    }
}

/// Radii of the box pre-blur for the three gradient scales of the
/// perceptual surrogate.
const PERCEPTUAL_SCALES: [usize; 3] = [0, 1, 3];

/// Feature stack of the perceptual surrogate for one channel: the value
/// itself plus Sobel magnitude at three blur scales, each in `[0, 1]`.
fn perceptual_features(values: &[f64], h: usize, w: usize) -> Vec<Vec<f64>> {
    let mut feats = Vec::with_capacity(1 + PERCEPTUAL_SCALES.len());
    feats.push(values.to_vec());
    for r in PERCEPTUAL_SCALES {
        let g = sobel_magnitude(&box_blur(values, h, w, r), h, w);
        feats.push(g.into_iter().map(|v| v / SOBEL_MAX).collect());
    }
    feats
}

fn psnr(a: &PredictionMap, b: &PredictionMap) -> f64 {
    let mut mse = 0.0;
    for (x, y) in a.data().iter().zip(b.data()) {
        let d = f64::from(*x) - f64::from(*y);
        mse += d * d;
    }
    mse /= a.data().len() as f64;
    if mse <= 0.0 {
        PSNR_MAX
    } else {
        (10.0 * (1.0 / mse).log10()).clamp(0.0, PSNR_MAX)
    }
}

/// Per-pixel comparison of `a` and `b` as an `h·w` buffer.
///
/// Orientation follows [`MetricKind::larger_is_similar`]: L1, L2 and the
/// perceptual surrogate are distances; SSIM is mapped to `(s + 1) / 2` and
/// PSNR is a per-map scalar (dB, clamped to `[0, 100]`) broadcast to every
/// pixel. Multi-channel maps average over channels. `Variance` is set-wise
/// and rejected here.
pub fn distance_map(a: &PredictionMap, b: &PredictionMap, metric: MetricKind) -> Result<Vec<f64>> {
    a.check_same_dims(b)?;
    let (h, w, c) = a.dims();
    let per_pixel = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        a.data()
            .chunks_exact(c)
            .zip(b.data().chunks_exact(c))
            .map(|(pa, pb)| {
                pa.iter()
                    .zip(pb)
                    .map(|(x, y)| f(f64::from(*x) - f64::from(*y)))
                    .sum::<f64>()
                    / c as f64
            })
            .collect()
    };
    Ok(match metric {
        MetricKind::L1 => per_pixel(&|d| d.abs()),
        MetricKind::L2 => per_pixel(&|d| d * d),
        MetricKind::Psnr => vec![psnr(a, b); h * w],
        MetricKind::Ssim => ssim::ssim_map(&a.to_f64(), &b.to_f64(), h, w, c)
            .into_iter()
            .map(|s| ((s + 1.0) / 2.0).clamp(0.0, 1.0))
            .collect(),
        MetricKind::Perceptual => {
            let mut out = vec![0.0; h * w];
            for ch in 0..c {
                let fa = perceptual_features(&a.channel(ch).to_f64(), h, w);
                let fb = perceptual_features(&b.channel(ch).to_f64(), h, w);
                let n = (fa.len() * c) as f64;
                for (x, y) in fa.iter().zip(&fb) {
                    for (o, (u, v)) in out.iter_mut().zip(x.iter().zip(y)) {
                        *o += (u - v).abs() / n;
                    }
                }
            }
            out
        }
        MetricKind::Variance => {
            return Err(Error::Config(
                "variance is computed over a candidate set, not a pair".into(),
            ))
        }
    })
}
