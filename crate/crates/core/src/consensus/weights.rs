use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{PredictionMap, TaskSpec};

use super::metric::{distance_map, MetricKind, PSNR_MAX};

/// Offset added when turning distances into similarities, so the farthest
/// candidate keeps a small positive score.
pub const SIM_EPS: f64 = 1e-6;

/// One member of a destination's neighbourhood.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// `edge:<source>` for transformed views, `current` for the pseudo-label.
    pub tag: String,
    pub map: PredictionMap,
}

/// The neighbourhood of one destination view: every in-edge prediction plus
/// the current pseudo-label, held exactly once at `current`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub task: TaskSpec,
    entries: Vec<Candidate>,
    current: usize,
}

impl CandidateSet {
    pub fn new(task: TaskSpec, entries: Vec<Candidate>, current: usize) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::Config("candidate set is empty".into()))?;
        if current >= entries.len() {
            return Err(Error::Config(format!(
                "current index {current} out of {} candidates",
                entries.len()
            )));
        }
        for e in &entries {
            first.map.check_same_dims(&e.map)?;
        }
        if first.map.channels() != task.channels {
            return Err(Error::Shape(format!(
                "task {} has {} channels, candidates have {}",
                task.name,
                task.channels,
                first.map.channels()
            )));
        }
        Ok(Self {
            task,
            entries,
            current,
        })
    }

    /// Edge predictions followed by the current view.
    pub fn from_edges(task: TaskSpec, edges: Vec<(String, PredictionMap)>, current: PredictionMap) -> Result<Self> {
        let mut entries: Vec<Candidate> = edges
            .into_iter()
            .map(|(src, map)| Candidate {
                tag: format!("edge:{src}"),
                map,
            })
            .collect();
        let idx = entries.len();
        entries.push(Candidate {
            tag: "current".into(),
            map: current,
        });
        Self::new(task, entries, idx)
    }

    pub fn entries(&self) -> &[Candidate] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn current_index(&self) -> usize {
        self.current
    }

    pub fn current(&self) -> &PredictionMap {
        &self.entries[self.current].map
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.entries[0].map.dims()
    }

    /// Same set with entries reordered by `perm` (`perm[i]` = old index).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let entries = perm.iter().map(|&i| self.entries[i].clone()).collect();
        let current = perm
            .iter()
            .position(|&i| i == self.current)
            .ok_or_else(|| Error::Config("permutation drops the current view".into()))?;
        Self::new(self.task.clone(), entries, current)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Identity,
    /// `exp(−d² / 2σ²)` of the dissimilarity implied by the score.
    Gaussian { sigma: f64 },
    /// `K ≡ 1`: uniform weights.
    Constant,
}

/// What the kernel is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightInput {
    /// Distances are turned into similarities first, so closer candidates
    /// get more weight.
    Similarity,
    /// The metric value is fed to the kernel unchanged.
    Raw,
}

/// Per-pixel weights over a candidate set, `h·w·n` with candidate order
/// matching the set.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleWeights {
    pub height: usize,
    pub width: usize,
    pub n: usize,
    data: Vec<f64>,
}

impl EnsembleWeights {
    pub fn pixel(&self, p: usize) -> &[f64] {
        &self.data[p * self.n..(p + 1) * self.n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Weights as an `h×w×n` map for inspection dumps.
    pub fn to_map(&self) -> PredictionMap {
        PredictionMap::from_f64(self.height, self.width, self.n, &self.data).expect("positive dims")
    }
}

/// Sum in ascending order so the result depends only on the multiset.
pub(crate) fn canonical_sum(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// Raw per-candidate scores, `scores[s][p]`.
fn raw_scores(cands: &CandidateSet, metric: MetricKind) -> Result<Vec<Vec<f64>>> {
    let (h, w, c) = cands.dims();
    match metric {
        MetricKind::Variance => {
            let n = cands.len() as f64;
            let mut column = vec![0.0; cands.len()];
            let mean: Vec<f64> = (0..h * w * c)
                .map(|i| {
                    for (slot, e) in column.iter_mut().zip(cands.entries()) {
                        *slot = f64::from(e.map.data()[i]);
                    }
                    canonical_sum(&column) / n
                })
                .collect();
            Ok(cands
                .entries()
                .iter()
                .map(|e| {
                    e.map
                        .data()
                        .chunks_exact(c)
                        .zip(mean.chunks_exact(c))
                        .map(|(px, mu)| {
                            px.iter()
                                .zip(mu)
                                .map(|(v, m)| (f64::from(*v) - m).powi(2))
                                .sum::<f64>()
                                / c as f64
                        })
                        .collect()
                })
                .collect())
        }
        m => cands
            .entries()
            .iter()
            .map(|e| distance_map(&e.map, cands.current(), m))
            .collect(),
    }
}

/// `as_similarity`: larger scores mean closer; `best` is the per-pixel
/// maximum score in that case.
fn apply_kernel(kernel: KernelKind, score: f64, best: f64, as_similarity: bool) -> f64 {
    match kernel {
        KernelKind::Constant => 1.0,
        KernelKind::Identity => score.max(0.0),
        KernelKind::Gaussian { sigma } => {
            let d = if as_similarity { best - score } else { score };
            (-d * d / (2.0 * sigma * sigma)).exp()
        }
    }
}

/// Per-pixel normalized kernel weights over the candidate set.
///
/// Distances are taken against the current view (variance: against the
/// per-pixel candidate mean). In [`WeightInput::Similarity`] mode a distance
/// `d` becomes `max_t d_t − d + ε` at each pixel; SSIM and PSNR are already
/// similarities and only rescaled to `[0, 1]`. A pixel whose kernel mass is
/// zero falls back to uniform weights.
pub fn compute_weights(
    cands: &CandidateSet,
    metric: MetricKind,
    kernel: KernelKind,
    input: WeightInput,
) -> Result<EnsembleWeights> {
    if let KernelKind::Gaussian { sigma } = kernel {
        if !(sigma > 0.0) {
            return Err(Error::Config("gaussian kernel needs sigma > 0".into()));
        }
    }
    let (h, w, _) = cands.dims();
    let n = cands.len();
    let scores = if kernel == KernelKind::Constant {
        Vec::new()
    } else {
        raw_scores(cands, metric)?
    };
    let larger = metric.larger_is_similar();
    let mut data = vec![0.0; h * w * n];
    let mut k = vec![0.0; n];
    for p in 0..h * w {
        if kernel == KernelKind::Constant {
            k.fill(1.0);
        } else {
            let mut sim: Vec<f64> = scores.iter().map(|s| s[p]).collect();
            if metric == MetricKind::Psnr {
                for v in &mut sim {
                    *v /= PSNR_MAX;
                }
            }
            if input == WeightInput::Similarity && !larger {
                let dmax = sim.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                for v in &mut sim {
                    *v = dmax - *v + SIM_EPS;
                }
            }
            let best = sim.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let as_similarity = input == WeightInput::Similarity || larger;
            for (kv, s) in k.iter_mut().zip(&sim) {
                *kv = apply_kernel(kernel, *s, best, as_similarity);
            }
        }
        let mass = canonical_sum(&k);
        let out = &mut data[p * n..(p + 1) * n];
        if mass > 0.0 && mass.is_finite() {
            for (o, kv) in out.iter_mut().zip(&k) {
                *o = kv / mass;
            }
        } else {
            out.fill(1.0 / n as f64);
        }
    }
    Ok(EnsembleWeights {
        height: h,
        width: w,
        n,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_set(values: &[f32], current: usize) -> CandidateSet {
        let entries = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Candidate {
                tag: format!("c{i}"),
                map: PredictionMap::filled(1, 1, 1, v),
            })
            .collect();
        CandidateSet::new(TaskSpec::regression("depth", 1), entries, current).unwrap()
    }

    #[test]
    fn hand_evaluated_l1_weights() {
        let set = scalar_set(&[0.0, 0.5, 0.52], 2);
        let wts = compute_weights(&set, MetricKind::L1, KernelKind::Identity, WeightInput::Similarity).unwrap();
        // d = {0.52, 0.02, 0}; sim = {ε, 0.5 + ε, 0.52 + ε}
        let cur = f64::from(0.52f32);
        let d = [0.0f32, 0.5, 0.52].map(|v| (f64::from(v) - cur).abs());
        let sims = d.map(|v| d[0] - v + SIM_EPS);
        let total: f64 = sims.iter().sum();
        for (wv, s) in wts.pixel(0).iter().zip(sims) {
            assert!((wv - s / total).abs() < 1e-12);
        }
        assert!(wts.pixel(0)[0] < 1e-5);
        assert!((wts.pixel(0)[1] - 0.490).abs() < 1e-3);
        assert!((wts.pixel(0)[2] - 0.510).abs() < 1e-3);
    }

    #[test]
    fn identical_candidates_give_uniform_weights() {
        let set = scalar_set(&[0.3, 0.3, 0.3, 0.3], 1);
        for m in MetricKind::ALL {
            for k in [KernelKind::Identity, KernelKind::Gaussian { sigma: 0.1 }] {
                let wts = compute_weights(&set, m, k, WeightInput::Similarity).unwrap();
                for v in wts.pixel(0) {
                    assert!((v - 0.25).abs() < 1e-12, "{m:?} {k:?}");
                }
            }
        }
    }

    #[test]
    fn constant_kernel_is_uniform() {
        let set = scalar_set(&[0.0, 0.9, 0.2], 0);
        let wts = compute_weights(&set, MetricKind::L2, KernelKind::Constant, WeightInput::Similarity).unwrap();
        assert_eq!(wts.pixel(0), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn raw_identity_l1_on_identical_falls_back_to_uniform() {
        // every raw distance is 0 → zero kernel mass → uniform
        let set = scalar_set(&[0.4, 0.4], 0);
        let wts = compute_weights(&set, MetricKind::L1, KernelKind::Identity, WeightInput::Raw).unwrap();
        assert_eq!(wts.pixel(0), &[0.5, 0.5]);
    }

    #[test]
    fn set_construction_rules() {
        let t = TaskSpec::regression("depth", 1);
        assert!(CandidateSet::new(t.clone(), vec![], 0).is_err());
        let e = vec![Candidate {
            tag: "current".into(),
            map: PredictionMap::filled(2, 2, 1, 0.5),
        }];
        assert!(CandidateSet::new(t.clone(), e.clone(), 1).is_err());
        let mut bad = e.clone();
        bad.push(Candidate {
            tag: "x".into(),
            map: PredictionMap::filled(2, 3, 1, 0.5),
        });
        assert!(CandidateSet::new(t, bad, 0).is_err());
    }

    #[test]
    fn gaussian_sigma_must_be_positive() {
        let set = scalar_set(&[0.0, 0.9], 0);
        assert!(compute_weights(&set, MetricKind::L1, KernelKind::Gaussian { sigma: 0.0 }, WeightInput::Similarity).is_err());
    }
}
