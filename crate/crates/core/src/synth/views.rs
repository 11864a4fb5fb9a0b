//! Views computed directly from an rgb image.

use crate::error::{Error, Result};
use crate::imgops::{box_blur, sobel_magnitude, SOBEL_MAX};
use crate::maps::{PredictionMap, TaskSpec};
use crate::tasks;

const BAYER4: [[u8; 4]; 4] = [[0, 8, 2, 10], [12, 4, 14, 6], [3, 11, 1, 9], [15, 7, 13, 5]];

fn luma(px: &[f32]) -> f64 {
    0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2])
}

pub fn grayscale(rgb: &PredictionMap) -> Vec<f64> {
    (0..rgb.pixels()).map(|p| luma(rgb.pixel(p))).collect()
}

/// RGB → HSV with hue scaled to `[0, 1)`.
pub fn rgb_to_hsv(r: f64, g: f64, b: f64) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    [(h / 6.0).rem_euclid(1.0), s, max]
}

fn edges(rgb: &PredictionMap, radius: usize) -> Vec<f64> {
    let (h, w) = (rgb.height(), rgb.width());
    let gray = box_blur(&grayscale(rgb), h, w, radius);
    sobel_magnitude(&gray, h, w)
        .into_iter()
        .map(|m| (m / SOBEL_MAX).min(1.0))
        .collect()
}

fn halftone(rgb: &PredictionMap) -> Vec<f64> {
    let w = rgb.width();
    let gray = grayscale(rgb);
    let mut out = Vec::with_capacity(gray.len() * 2);
    for (p, g) in gray.into_iter().enumerate() {
        let (y, x) = (p / w, p % w);
        let threshold = (f64::from(BAYER4[y % 4][x % 4]) + 0.5) / 16.0;
        if g > threshold {
            out.extend([0.0, 1.0]);
        } else {
            out.extend([1.0, 0.0]);
        }
    }
    out
}

/// Compute `task` from an rgb map.
pub fn derive_view(rgb: &PredictionMap, task: &TaskSpec) -> Result<PredictionMap> {
    if rgb.channels() != 3 {
        return Err(Error::Config(format!(
            "derive_view needs 3-channel rgb, got {}",
            rgb.channels()
        )));
    }
    let (h, w) = (rgb.height(), rgb.width());
    let data = match task.name.as_str() {
        tasks::GRAYSCALE => grayscale(rgb),
        tasks::HSV => (0..rgb.pixels())
            .flat_map(|p| {
                let px = rgb.pixel(p);
                rgb_to_hsv(f64::from(px[0]), f64::from(px[1]), f64::from(px[2]))
            })
            .collect(),
        tasks::EDGES_SMALL => edges(rgb, 0),
        tasks::EDGES_MEDIUM => edges(rgb, 2),
        tasks::EDGES_LARGE => edges(rgb, 4),
        tasks::HALFTONE => halftone(rgb),
        other => {
            return Err(Error::Config(format!(
                "`{other}` cannot be derived from rgb"
            )))
        }
    };
    let mut map = PredictionMap::from_f64(h, w, task.channels, &data)?;
    if !task.is_classification() {
        map.clamp_unit();
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn task(name: &str) -> TaskSpec {
        tasks::builtin(name, 6, 3).unwrap()
    }

    // Independent HSV -> RGB (sector formula).
    fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
        let c = v * s;
        let hp = h * 6.0;
        let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
        let (r, g, b) = match hp as u32 {
            0 => (c, x, 0.0),
            1 => (x, c, 0.0),
            2 => (0.0, c, x),
            3 => (0.0, x, c),
            4 => (x, 0.0, c),
            _ => (c, 0.0, x),
        };
        let m = v - c;
        [r + m, g + m, b + m]
    }

    #[test]
    fn red_grayscale() {
        let rgb = PredictionMap::from_fn(16, 16, 3, |_, _, c| if c == 0 { 1.0 } else { 0.0 });
        let g = derive_view(&rgb, &task("grayscale")).unwrap();
        assert!(g.data().iter().all(|&v| (v - 0.299).abs() < 1e-7));
    }

    #[test]
    fn constant_image_has_no_edges() {
        let rgb = PredictionMap::filled(16, 16, 3, 0.4);
        for name in ["edges_small", "edges_medium", "edges_large"] {
            let e = derive_view(&rgb, &task(name)).unwrap();
            assert!(e.data().iter().all(|&v| v == 0.0), "{name}");
        }
    }

    #[test]
    fn hsv_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let rgb = PredictionMap::from_fn(16, 16, 3, |_, _, _| rng.random::<f32>());
        let hsv = derive_view(&rgb, &task("hsv")).unwrap();
        for p in 0..rgb.pixels() {
            let hv = hsv.pixel(p);
            let back = hsv_to_rgb(f64::from(hv[0]), f64::from(hv[1]), f64::from(hv[2]));
            for c in 0..3 {
                assert!(
                    (back[c] - f64::from(rgb.pixel(p)[c])).abs() < 1e-5,
                    "pixel {p} channel {c}"
                );
            }
        }
    }

    #[test]
    fn halftone_is_one_hot() {
        let rgb = PredictionMap::from_fn(16, 16, 3, |y, x, _| (y * 16 + x) as f32 / 255.0);
        let t = task("halftone");
        let ht = derive_view(&rgb, &t).unwrap();
        ht.validate(&t).unwrap();
        // dark corner is off, bright corner is on
        assert_eq!(ht.pixel(0), &[1.0, 0.0]);
        assert_eq!(ht.pixel(255), &[0.0, 1.0]);
    }

    #[test]
    fn rejects_non_derivable() {
        let rgb = PredictionMap::filled(16, 16, 3, 0.4);
        assert!(matches!(
            derive_view(&rgb, &task("depth")),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn views_are_deterministic() {
        let rgb = PredictionMap::from_fn(16, 16, 3, |y, x, c| ((y * 7 + x * 3 + c) % 11) as f32 / 10.0);
        for name in ["grayscale", "hsv", "edges_small", "edges_medium", "edges_large", "halftone"] {
            let a = derive_view(&rgb, &task(name)).unwrap();
            let b = derive_view(&rgb, &task(name)).unwrap();
            assert_eq!(a, b);
            a.validate(&task(name)).unwrap();
        }
    }
}
