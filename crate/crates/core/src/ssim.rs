//! Structural similarity with an 11×11 Gaussian window (σ = 1.5),
//! `C1 = (0.01·L)²`, `C2 = (0.03·L)²`, `L = 1`.
//!
//! The window is truncated at the image border and renormalized, which keeps
//! statistics unbiased on small maps and gives an exact adjoint for the
//! gradient.

use crate::imgops::GaussianWindow;

pub const C1: f64 = 0.01 * 0.01;
pub const C2: f64 = 0.03 * 0.03;

struct Stats {
    mu_x: Vec<f64>,
    mu_y: Vec<f64>,
    var_x: Vec<f64>,
    var_y: Vec<f64>,
    cov: Vec<f64>,
}

fn plane(data: &[f64], channels: usize, c: usize) -> Vec<f64> {
    data.iter().skip(c).step_by(channels).copied().collect()
}

fn stats(g: &GaussianWindow, x: &[f64], y: &[f64], h: usize, w: usize, mass: &[f64]) -> Stats {
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).collect::<Vec<_>>();
    let mu_x = g.apply(x, h, w, mass);
    let mu_y = g.apply(y, h, w, mass);
    let exx = g.apply(&sq(x, x), h, w, mass);
    let eyy = g.apply(&sq(y, y), h, w, mass);
    let exy = g.apply(&sq(x, y), h, w, mass);
    let n = h * w;
    let mut var_x = vec![0.0; n];
    let mut var_y = vec![0.0; n];
    let mut cov = vec![0.0; n];
    for p in 0..n {
        var_x[p] = exx[p] - mu_x[p] * mu_x[p];
        var_y[p] = eyy[p] - mu_y[p] * mu_y[p];
        cov[p] = exy[p] - mu_x[p] * mu_y[p];
    }
    Stats {
        mu_x,
        mu_y,
        var_x,
        var_y,
        cov,
    }
}

fn ssim_at(s: &Stats, p: usize) -> f64 {
    let a1 = 2.0 * s.mu_x[p] * s.mu_y[p] + C1;
    let a2 = 2.0 * s.cov[p] + C2;
    let b1 = s.mu_x[p] * s.mu_x[p] + s.mu_y[p] * s.mu_y[p] + C1;
    let b2 = s.var_x[p] + s.var_y[p] + C2;
    a1 * a2 / (b1 * b2)
}

/// Per-pixel SSIM averaged over channels. Inputs are `h×w×c` channel-last.
pub fn ssim_map(x: &[f64], y: &[f64], h: usize, w: usize, c: usize) -> Vec<f64> {
    let g = GaussianWindow::ssim();
    let mass = g.mass(h, w);
    let mut out = vec![0.0; h * w];
    for ch in 0..c {
        let s = stats(&g, &plane(x, c, ch), &plane(y, c, ch), h, w, &mass);
        for (p, o) in out.iter_mut().enumerate() {
            *o += ssim_at(&s, p) / c as f64;
        }
    }
    out
}

/// Mean SSIM over all pixels and channels, with its gradient w.r.t. `x`.
pub fn mean_ssim_with_grad(x: &[f64], y: &[f64], h: usize, w: usize, c: usize) -> (f64, Vec<f64>) {
    let g = GaussianWindow::ssim();
    let mass = g.mass(h, w);
    let n = (h * w * c) as f64;
    let mut total = 0.0;
    let mut grad = vec![0.0; h * w * c];
    for ch in 0..c {
        let xp = plane(x, c, ch);
        let yp = plane(y, c, ch);
        let s = stats(&g, &xp, &yp, h, w, &mass);
        // dS/d(first moment), dS/d(second moment of x), dS/d(cross moment)
        let mut da = vec![0.0; h * w];
        let mut db = vec![0.0; h * w];
        let mut dc = vec![0.0; h * w];
        for p in 0..h * w {
            let (mx, my) = (s.mu_x[p], s.mu_y[p]);
            let a1 = 2.0 * mx * my + C1;
            let a2 = 2.0 * s.cov[p] + C2;
            let b1 = mx * mx + my * my + C1;
            let b2 = s.var_x[p] + s.var_y[p] + C2;
            let ssim = a1 * a2 / (b1 * b2);
            total += ssim;
            let d_mu = 2.0 * my * a2 / (b1 * b2) - ssim * 2.0 * mx / b1;
            let d_var = -ssim / b2;
            let d_cov = 2.0 * a1 / (b1 * b2);
            da[p] = (d_mu - 2.0 * mx * d_var - my * d_cov) / n;
            db[p] = d_var / n;
            dc[p] = d_cov / n;
        }
        let ga = g.apply_adjoint(&da, h, w, &mass);
        let gb = g.apply_adjoint(&db, h, w, &mass);
        let gc = g.apply_adjoint(&dc, h, w, &mass);
        for p in 0..h * w {
            grad[p * c + ch] = ga[p] + 2.0 * xp[p] * gb[p] + yp[p] * gc[p];
        }
    }
    (total / n, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identical_inputs_score_one() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..12 * 10 * 2).map(|_| rng.random()).collect();
        for v in ssim_map(&x, &x, 12, 10, 2) {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let (m, g) = mean_ssim_with_grad(&x, &x, 12, 10, 2);
        assert!((m - 1.0).abs() < 1e-12);
        assert!(g.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn constants() {
        let x = vec![0.0; 64];
        let y = vec![1.0; 64];
        let (m, _) = mean_ssim_with_grad(&x, &y, 8, 8, 1);
        assert!((m - C1 / (1.0 + C1)).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let (h, w, c) = (7, 9, 2);
        let x: Vec<f64> = (0..h * w * c).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..h * w * c).map(|_| rng.random()).collect();
        let (_, g) = mean_ssim_with_grad(&x, &y, h, w, c);
        let eps = 1e-5;
        for i in (0..x.len()).step_by(5) {
            let mut xp = x.clone();
            xp[i] += eps;
            let mut xm = x.clone();
            xm[i] -= eps;
            let fd = (mean_ssim_with_grad(&xp, &y, h, w, c).0 - mean_ssim_with_grad(&xm, &y, h, w, c).0)
                / (2.0 * eps);
            assert!((fd - g[i]).abs() < 1e-8 + 1e-5 * fd.abs(), "{i}: {fd} vs {}", g[i]);
        }
    }
}
