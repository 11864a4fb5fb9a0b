use crate::error::{Error, Result};
use crate::maps::PredictionMap;

/// Piecewise-linear empirical CDF over `bins` equal bins on `[lo, hi]`.
struct BinnedCdf {
    lo: f64,
    width: f64,
    /// `edges[k]` = fraction of values below bin `k`; `bins + 1` entries.
    edges: Vec<f64>,
}

impl BinnedCdf {
    /// `None` for a constant sample.
    fn new(values: &[f64], bins: usize) -> Option<Self> {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return None;
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &v in values {
            counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
        }
        let n = values.len() as f64;
        let mut edges = Vec::with_capacity(bins + 1);
        let mut acc = 0usize;
        edges.push(0.0);
        for c in counts {
            acc += c;
            edges.push(acc as f64 / n);
        }
        Some(Self { lo, width, edges })
    }

    fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    fn cdf(&self, v: f64) -> f64 {
        let t = ((v - self.lo) / self.width).clamp(0.0, self.bins() as f64);
        let k = (t as usize).min(self.bins() - 1);
        let frac = t - k as f64;
        self.edges[k] + frac * (self.edges[k + 1] - self.edges[k])
    }

    fn inverse(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        // first bin whose upper edge reaches u and that holds mass
        let mut k = self.edges[1..].partition_point(|&e| e < u).min(self.bins() - 1);
        while k + 1 < self.bins() && self.edges[k + 1] <= self.edges[k] {
            k += 1;
        }
        let mass = self.edges[k + 1] - self.edges[k];
        let frac = if mass > 0.0 {
            ((u - self.edges[k]) / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        self.lo + (k as f64 + frac) * self.width
    }
}

/// Remap `source` so its value distribution follows `reference`:
/// `out = G⁻¹(F(source))` with binned, linearly interpolated CDFs.
///
/// A constant source sits at `F = 0.5` and lands on the reference median;
/// a constant reference maps everything to that constant.
pub fn histogram_specification(
    source: &PredictionMap,
    reference: &PredictionMap,
    bins: usize,
) -> Result<PredictionMap> {
    if source.channels() != 1 || reference.channels() != 1 {
        return Err(Error::Shape("histogram specification needs single-channel maps".into()));
    }
    if bins == 0 {
        return Err(Error::Config("bins must be >= 1".into()));
    }
    let src = source.to_f64();
    let reference = reference.to_f64();
    let (h, w) = (source.height(), source.width());
    let Some(g) = BinnedCdf::new(&reference, bins) else {
        return Ok(PredictionMap::filled(h, w, 1, reference[0] as f32));
    };
    let f = BinnedCdf::new(&src, bins);
    let out: Vec<f64> = src
        .iter()
        .map(|&v| g.inverse(f.as_ref().map_or(0.5, |f| f.cdf(v))))
        .collect();
    PredictionMap::from_f64(h, w, 1, &out)
}
