use crate::error::{Error, Result};

/// RBF bandwidth selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Median pairwise distance over the pooled samples; 1 if that is zero.
    MedianHeuristic,
    Fixed(f64),
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn median_distance(all: &[&Vec<f64>]) -> f64 {
    let mut d = Vec::with_capacity(all.len() * (all.len() - 1) / 2);
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            d.push(sq_dist(all[i], all[j]).sqrt());
        }
    }
    d.sort_by(f64::total_cmp);
    let n = d.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        d[n / 2]
    } else {
        0.5 * (d[n / 2 - 1] + d[n / 2])
    }
}

fn sorted(v: &[Vec<f64>]) -> Vec<&Vec<f64>> {
    let mut s: Vec<&Vec<f64>> = v.iter().collect();
    s.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    s
}

/// Unbiased estimate of squared MMD under an RBF kernel
/// `k(u, v) = exp(−‖u − v‖² / 2σ²)`. Not scaled by 100.
///
/// For equal sample sizes the cross term also skips `i = j`, so the
/// estimator is a single U-statistic and `X = Y` gives exactly zero.
/// Samples are put in a canonical order first, so only the multisets
/// matter.
pub fn mmd2_unbiased(x: &[Vec<f64>], y: &[Vec<f64>], bandwidth: Bandwidth) -> Result<f64> {
    let (m, n) = (x.len(), y.len());
    if m < 2 || n < 2 {
        return Err(Error::Config(format!("MMD needs >= 2 samples per side, got {m} and {n}")));
    }
    let dim = x[0].len();
    if x.iter().chain(y).any(|v| v.len() != dim) {
        return Err(Error::Shape("embeddings differ in dimension".into()));
    }
    let x = sorted(x);
    let y = sorted(y);
    let sigma = match bandwidth {
        Bandwidth::Fixed(s) if s > 0.0 => s,
        Bandwidth::Fixed(_) => return Err(Error::Config("bandwidth must be > 0".into())),
        Bandwidth::MedianHeuristic => {
            let pooled: Vec<&Vec<f64>> = x.iter().chain(&y).copied().collect();
            let med = median_distance(&pooled);
            if med > 0.0 {
                med
            } else {
                1.0
            }
        }
    };
    let k = |a: &[f64], b: &[f64]| (-sq_dist(a, b) / (2.0 * sigma * sigma)).exp();

    if m == n {
        let mut total = 0.0;
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    total += k(x[i], x[j]) + k(y[i], y[j]) - k(x[i], y[j]) - k(x[j], y[i]);
                }
            }
        }
        return Ok(total / (m * (m - 1)) as f64);
    }
    let within = |s: &[&Vec<f64>]| {
        let mut t = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if i != j {
                    t += k(s[i], s[j]);
                }
            }
        }
        t / (s.len() * (s.len() - 1)) as f64
    };
    let mut cross = 0.0;
    for a in &x {
        for b in &y {
            cross += k(a, b);
        }
    }
    Ok(within(&x) + within(&y) - 2.0 * cross / (m * n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn cloud(seed: u64, n: usize, mu: f64) -> Vec<Vec<f64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(mu, 1.0).unwrap();
        (0..n).map(|_| (0..4).map(|_| d.sample(&mut rng)).collect()).collect()
    }

    #[test]
    fn identical_multisets_give_zero() {
        let x = cloud(1, 12, 0.0);
        assert_eq!(mmd2_unbiased(&x, &x, Bandwidth::MedianHeuristic).unwrap(), 0.0);
        let mut y = x.clone();
        y.reverse();
        assert_eq!(mmd2_unbiased(&x, &y, Bandwidth::Fixed(0.7)).unwrap(), 0.0);
    }

    #[test]
    fn two_point_example() {
        let x = vec![vec![0.0], vec![0.0]];
        let y = vec![vec![1.0], vec![1.0]];
        let v = mmd2_unbiased(&x, &y, Bandwidth::Fixed(1.0)).unwrap();
        assert!((v - (2.0 - 2.0 * (-0.5f64).exp())).abs() < 1e-12);
        assert!(mmd2_unbiased(&[vec![0.0]], &[vec![1.0]], Bandwidth::Fixed(1.0)).is_err());
    }

    #[test]
    fn unequal_sizes_match_direct_formula() {
        let x = vec![vec![0.0], vec![1.0], vec![3.0]];
        let y = vec![vec![0.5], vec![2.0]];
        let k = |a: f64, b: f64| (-(a - b) * (a - b) / 2.0).exp();
        let xx = 2.0 * (k(0.0, 1.0) + k(0.0, 3.0) + k(1.0, 3.0)) / 6.0;
        let yy = 2.0 * k(0.5, 2.0) / 2.0;
        let mut xy = 0.0;
        for a in [0.0, 1.0, 3.0] {
            for b in [0.5, 2.0] {
                xy += k(a, b);
            }
        }
        let expect = xx + yy - 2.0 * xy / 6.0;
        assert!((mmd2_unbiased(&x, &y, Bandwidth::Fixed(1.0)).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn median_heuristic_falls_back_on_degenerate_samples() {
        let x = vec![vec![2.0, 2.0]; 3];
        assert_eq!(mmd2_unbiased(&x, &x, Bandwidth::MedianHeuristic).unwrap(), 0.0);
    }

    #[test]
    fn cross_distribution_exceeds_within() {
        let mut wins = 0;
        for seed in 0..20 {
            let a = cloud(seed, 40, 0.0);
            let b = cloud(1000 + seed, 20, 1.0);
            let cross = mmd2_unbiased(&a[..20], &b, Bandwidth::MedianHeuristic).unwrap();
            let within = mmd2_unbiased(&a[..20], &a[20..], Bandwidth::MedianHeuristic).unwrap();
            wins += usize::from(cross > within);
        }
        assert!(wins >= 19, "{wins}/20");
    }
}
