//! Simulated out-of-distribution experts: ground truth passed through a
//! seeded corruption model.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgops::box_blur;
use crate::maps::{PredictionMap, SampleId, TaskSpec};
use crate::rng;

/// Probability floor used when re-encoding corrupted labels.
pub const LABEL_FLOOR: f64 = 1e-3;

/// Bias fields and region relabels live on this coarse grid.
const REGION_GRID: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Corruption {
    /// Std-dev of additive i.i.d. Gaussian noise.
    pub noise_sigma: f64,
    pub blur_radius: usize,
    /// Regression: amplitude of a smooth per-region bias field.
    /// Classification: probability that a grid cell is relabeled.
    pub region_bias: f64,
    /// Classification only: per-pixel label flip probability.
    pub flip_rate: f64,
}

impl Corruption {
    pub const NONE: Corruption = Corruption {
        noise_sigma: 0.0,
        blur_radius: 0,
        region_bias: 0.0,
        flip_rate: 0.0,
    };

    /// One-knob corruption: noise, region bias and flip rate all equal to
    /// `level`.
    pub fn structured(level: f64) -> Self {
        Self {
            noise_sigma: level,
            blur_radius: 0,
            region_bias: level,
            flip_rate: level,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.noise_sigma == 0.0
            && self.blur_radius == 0
            && self.region_bias == 0.0
            && self.flip_rate == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0) || !(self.region_bias >= 0.0) {
            return Err(Error::Config("corruption amplitudes must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.flip_rate) {
            return Err(Error::Config(format!(
                "flip_rate {} outside [0,1)",
                self.flip_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertSimulator {
    pub task: TaskSpec,
    pub corruption: Corruption,
    pub seed: u64,
}

impl ExpertSimulator {
    pub fn new(task: TaskSpec, corruption: Corruption, seed: u64) -> Result<Self> {
        corruption.validate()?;
        Ok(Self {
            task,
            corruption,
            seed,
        })
    }

    fn stream(&self, id: SampleId, what: &str) -> rand_chacha::ChaCha8Rng {
        rng::stream(
            self.seed,
            &[rng::label(&self.task.name), u64::from(id.0), rng::label(what)],
        )
    }

    /// Smooth field in `[-amp, amp]`: bilinear interpolation of a random
    /// lattice over a `REGION_GRID × REGION_GRID` tiling.
    fn bias_field(&self, id: SampleId, channel: usize, h: usize, w: usize) -> Vec<f64> {
        let amp = self.corruption.region_bias;
        let mut rng = self.stream(id, &format!("bias{channel}"));
        let n = REGION_GRID + 1;
        let lattice: Vec<f64> = (0..n * n)
            .map(|_| rng.random_range(-1.0..=1.0) * amp)
            .collect();
        let mut out = Vec::with_capacity(h * w);
        for y in 0..h {
            let gy = y as f64 / (h - 1).max(1) as f64 * REGION_GRID as f64;
            let y0 = (gy.floor() as usize).min(REGION_GRID - 1);
            let ty = gy - y0 as f64;
            for x in 0..w {
                let gx = x as f64 / (w - 1).max(1) as f64 * REGION_GRID as f64;
                let x0 = (gx.floor() as usize).min(REGION_GRID - 1);
                let tx = gx - x0 as f64;
                let at = |r: usize, c: usize| lattice[r * n + c];
                let top = at(y0, x0) * (1.0 - tx) + at(y0, x0 + 1) * tx;
                let bot = at(y0 + 1, x0) * (1.0 - tx) + at(y0 + 1, x0 + 1) * tx;
                out.push(top * (1.0 - ty) + bot * ty);
            }
        }
        out
    }

    fn corrupt_regression(&self, gt: &PredictionMap, id: SampleId) -> Result<PredictionMap> {
        let (h, w, c) = gt.dims();
        let cor = &self.corruption;
        let mut noise = self.stream(id, "noise");
        let mut out = vec![0.0f64; h * w * c];
        for ch in 0..c {
            let plane: Vec<f64> = gt.channel(ch).to_f64();
            let blurred = box_blur(&plane, h, w, cor.blur_radius);
            let bias = if cor.region_bias > 0.0 {
                self.bias_field(id, ch, h, w)
            } else {
                vec![0.0; h * w]
            };
            for p in 0..h * w {
                out[p * c + ch] = blurred[p] + bias[p];
            }
        }
        // noise drawn in storage order so the realization is shared across σ
        for v in out.iter_mut() {
            let z: f64 = noise.sample(StandardNormal);
            *v = (*v + cor.noise_sigma * z).clamp(0.0, 1.0);
        }
        PredictionMap::from_f64(h, w, c, &out)
    }

    fn corrupt_classification(&self, gt: &PredictionMap, id: SampleId) -> Result<PredictionMap> {
        let (h, w, c) = gt.dims();
        let cor = &self.corruption;
        let mut probs = vec![0.0f64; h * w * c];
        for ch in 0..c {
            let blurred = box_blur(&gt.channel(ch).to_f64(), h, w, cor.blur_radius);
            for p in 0..h * w {
                probs[p * c + ch] = blurred[p];
            }
        }
        let mut noise = self.stream(id, "noise");
        for v in probs.iter_mut() {
            let z: f64 = noise.sample(StandardNormal);
            *v += cor.noise_sigma * z;
        }
        let mut labels: Vec<usize> = probs
            .chunks_exact(c)
            .map(|px| {
                let mut best = 0;
                for k in 1..c {
                    if px[k] > px[best] {
                        best = k;
                    }
                }
                best
            })
            .collect();

        let mut flips = self.stream(id, "flip");
        for l in labels.iter_mut() {
            let u: f64 = flips.random();
            let other: usize = flips.random_range(1..c);
            if u < cor.flip_rate {
                *l = (*l + other) % c;
            }
        }

        if cor.region_bias > 0.0 {
            let mut regions = self.stream(id, "regions");
            for gy in 0..REGION_GRID {
                for gx in 0..REGION_GRID {
                    let u: f64 = regions.random();
                    let class = regions.random_range(0..c);
                    if u >= cor.region_bias {
                        continue;
                    }
                    let (y0, y1) = (gy * h / REGION_GRID, (gy + 1) * h / REGION_GRID);
                    let (x0, x1) = (gx * w / REGION_GRID, (gx + 1) * w / REGION_GRID);
                    for y in y0..y1 {
                        for x in x0..x1 {
                            labels[y * w + x] = class;
                        }
                    }
                }
            }
        }

        let norm = 1.0 + LABEL_FLOOR * (c - 1) as f64;
        let mut out = Vec::with_capacity(h * w * c);
        for l in labels {
            for k in 0..c {
                let v = if k == l { 1.0 } else { LABEL_FLOOR };
                out.push(v / norm);
            }
        }
        PredictionMap::from_f64(h, w, c, &out)
    }

    /// Corrupted copy of `gt` for sample `id`.
    pub fn predict(&self, gt: &PredictionMap, gt_task: &TaskSpec, id: SampleId) -> Result<PredictionMap> {
        if gt_task != &self.task {
            return Err(Error::Config(format!(
                "expert for `{}` given a `{}` map",
                self.task.name, gt_task.name
            )));
        }
        if gt.channels() != self.task.channels {
            return Err(Error::Config(format!(
                "expert for `{}` expects {} channels, got {}",
                self.task.name,
                self.task.channels,
                gt.channels()
            )));
        }
        if self.corruption.is_identity() {
            return Ok(gt.clone());
        }
        let out = if self.task.is_classification() {
            self.corrupt_classification(gt, id)?
        } else {
            self.corrupt_regression(gt, id)?
        };
        out.conform(&self.task)
    }
}
