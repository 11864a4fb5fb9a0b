//! Single-plane filters on `f64` buffers (`h × w`, row-major).

/// Box mean over a `(2r+1)²` window with edge replication.
pub fn box_blur(src: &[f64], h: usize, w: usize, r: usize) -> Vec<f64> {
    if r == 0 {
        return src.to_vec();
    }
    let clampi = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let norm = 1.0 / (2 * r + 1) as f64;
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for d in -(r as isize)..=(r as isize) {
                acc += src[y * w + clampi(x as isize + d, w)];
            }
            tmp[y * w + x] = acc * norm;
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for d in -(r as isize)..=(r as isize) {
                acc += tmp[clampi(y as isize + d, h) * w + x];
            }
            out[y * w + x] = acc * norm;
        }
    }
    out
}

/// Largest Sobel gradient magnitude attainable on an image with values in
/// `[0, 1]`: both 3×3 responses reach 4.
pub const SOBEL_MAX: f64 = 5.656_854_249_492_381; // 4·√2

/// Sobel gradient magnitude with edge replication (unnormalized).
pub fn sobel_magnitude(src: &[f64], h: usize, w: usize) -> Vec<f64> {
    let at = |y: isize, x: isize| {
        let yy = y.clamp(0, h as isize - 1) as usize;
        let xx = x.clamp(0, w as isize - 1) as usize;
        src[yy * w + xx]
    };
    let mut out = vec![0.0; h * w];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
            let gy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
            out[y as usize * w + x as usize] = (gx * gx + gy * gy).sqrt();
        }
    }
    out
}

/// Separable Gaussian window truncated to the image and renormalized per
/// output pixel, so each output is a proper weighted mean of the pixels it
/// covers.
#[derive(Debug, Clone)]
pub struct GaussianWindow {
    taps: Vec<f64>,
    radius: usize,
}

impl GaussianWindow {
    pub fn new(radius: usize, sigma: f64) -> Self {
        let taps = (0..=2 * radius)
            .map(|i| {
                let d = i as f64 - radius as f64;
                (-d * d / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        Self { taps, radius }
    }

    /// The 11×11, σ = 1.5 window used for SSIM.
    pub fn ssim() -> Self {
        Self::new(5, 1.5)
    }

    fn conv1d(&self, src: &[f64], h: usize, w: usize, horizontal: bool) -> Vec<f64> {
        let r = self.radius as isize;
        let mut out = vec![0.0; h * w];
        for y in 0..h {
            for x in 0..w {
                let (pos, len) = if horizontal { (x, w) } else { (y, h) };
                let lo = (pos as isize - r).max(0) as usize;
                let hi = (pos as isize + r).min(len as isize - 1) as usize;
                let mut acc = 0.0;
                for q in lo..=hi {
                    let tap = self.taps[(q as isize - pos as isize + r) as usize];
                    let v = if horizontal {
                        src[y * w + q]
                    } else {
                        src[q * w + x]
                    };
                    acc += tap * v;
                }
                out[y * w + x] = acc;
            }
        }
        out
    }

    fn mass_1d(&self, len: usize) -> Vec<f64> {
        let r = self.radius as isize;
        (0..len as isize)
            .map(|p| {
                let lo = (p - r).max(0);
                let hi = (p + r).min(len as isize - 1);
                (lo..=hi).map(|q| self.taps[(q - p + r) as usize]).sum()
            })
            .collect()
    }

    /// Per-pixel window mass `Z(y, x)`.
    pub fn mass(&self, h: usize, w: usize) -> Vec<f64> {
        let my = self.mass_1d(h);
        let mx = self.mass_1d(w);
        let mut out = Vec::with_capacity(h * w);
        for zy in &my {
            for zx in &mx {
                out.push(zy * zx);
            }
        }
        out
    }

    /// Unnormalized separable filter with zero outside the image.
    pub fn apply_raw(&self, src: &[f64], h: usize, w: usize) -> Vec<f64> {
        let t = self.conv1d(src, h, w, true);
        self.conv1d(&t, h, w, false)
    }

    /// Windowed mean at every pixel.
    pub fn apply(&self, src: &[f64], h: usize, w: usize, mass: &[f64]) -> Vec<f64> {
        let mut out = self.apply_raw(src, h, w);
        for (o, z) in out.iter_mut().zip(mass) {
            *o /= z;
        }
        out
    }

    /// Adjoint of [`GaussianWindow::apply`].
    pub fn apply_adjoint(&self, src: &[f64], h: usize, w: usize, mass: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = src.iter().zip(mass).map(|(v, z)| v / z).collect();
        self.apply_raw(&scaled, h, w)
    }
}
