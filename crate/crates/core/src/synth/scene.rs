//! Procedural layered scenes.
//!
//! Layer 0 is a full-frame background plane. Each further layer is a
//! rectangle (fronto-parallel), a disk (paraboloid bump) or a sloped
//! gradient-plane patch, painted far to near. Depth is known analytically
//! per layer, so normals come from the exact surface gradient and never
//! pick up occlusion-boundary artifacts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{PredictionMap, SampleId};
use crate::rng;

/// Appearance parameters. Shifting these produces a domain gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneStyle {
    /// Fraction of the colour replaced by fog at depth 1.
    pub fog: f64,
    pub fog_color: [f64; 3],
    /// Light direction in camera space (normalized on use).
    pub light: [f64; 3],
    pub ambient: f64,
    /// Per-scene uniform jitter applied to each class colour.
    pub albedo_jitter: f64,
}

impl Default for SceneStyle {
    fn default() -> Self {
        Self {
            fog: 0.55,
            fog_color: [0.78, 0.82, 0.9],
            light: [0.35, -0.45, 1.0],
            ambient: 0.35,
            albedo_jitter: 0.04,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub height: usize,
    pub width: usize,
    /// Layers including the background plane.
    pub n_shapes: usize,
    pub class_count: usize,
    pub seed: u64,
    /// Largest depth slope across the image (depth units per image width).
    pub max_slope: f64,
    /// 3 for unit vectors, 2 to keep only the x/y components.
    pub normals_channels: usize,
    pub style: SceneStyle,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            height: 32,
            width: 32,
            n_shapes: 4,
            class_count: 6,
            seed: 0,
            max_slope: 0.3,
            normals_channels: 3,
            style: SceneStyle::default(),
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.height < 16 || self.width < 16 {
            return Err(Error::Config(format!(
                "scene must be at least 16x16, got {}x{}",
                self.height, self.width
            )));
        }
        if self.n_shapes < 1 || self.n_shapes > self.class_count || self.class_count > 16 {
            return Err(Error::Config(format!(
                "need 1 <= n_shapes ({}) <= class_count ({}) <= 16",
                self.n_shapes, self.class_count
            )));
        }
        if !(self.normals_channels == 2 || self.normals_channels == 3) {
            return Err(Error::Config("normals_channels must be 2 or 3".into()));
        }
        if !(self.max_slope >= 0.0) {
            return Err(Error::Config("max_slope must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Rectangle,
    Disk,
    GradientPlane,
}

/// Ground-truth views of one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub rgb: PredictionMap,
    pub depth: PredictionMap,
    pub normals: PredictionMap,
    pub seg: PredictionMap,
}

/// Base colours per class; index = layer index.
const PALETTE: [[f64; 3]; 16] = [
    [0.55, 0.52, 0.48],
    [0.85, 0.25, 0.2],
    [0.2, 0.65, 0.3],
    [0.25, 0.35, 0.85],
    [0.9, 0.8, 0.2],
    [0.7, 0.3, 0.75],
    [0.2, 0.75, 0.8],
    [0.95, 0.55, 0.15],
    [0.45, 0.25, 0.1],
    [0.6, 0.85, 0.5],
    [0.95, 0.6, 0.7],
    [0.15, 0.2, 0.35],
    [0.8, 0.8, 0.8],
    [0.4, 0.5, 0.15],
    [0.5, 0.1, 0.3],
    [0.1, 0.45, 0.45],
];

#[derive(Debug, Clone)]
struct Layer {
    kind: ShapeKind,
    // normalized coordinates u = x/(w-1), v = y/(h-1)
    cu: f64,
    cv: f64,
    half_u: f64,
    half_v: f64,
    radius: f64,
    z0: f64,
    slope_u: f64,
    slope_v: f64,
    bump: f64,
    albedo: [f64; 3],
}

impl Layer {
    fn covers(&self, u: f64, v: f64) -> bool {
        match self.kind {
            ShapeKind::Rectangle | ShapeKind::GradientPlane => {
                (u - self.cu).abs() <= self.half_u && (v - self.cv).abs() <= self.half_v
            }
            ShapeKind::Disk => {
                let (du, dv) = (u - self.cu, v - self.cv);
                du * du + dv * dv <= self.radius * self.radius
            }
        }
    }

    /// Depth and its gradient (∂z/∂u, ∂z/∂v).
    fn depth(&self, u: f64, v: f64) -> (f64, f64, f64) {
        match self.kind {
            ShapeKind::Rectangle => (self.z0, 0.0, 0.0),
            ShapeKind::GradientPlane => {
                let z = self.z0 + self.slope_u * (u - self.cu) + self.slope_v * (v - self.cv);
                (z, self.slope_u, self.slope_v)
            }
            ShapeKind::Disk => {
                let (du, dv) = (u - self.cu, v - self.cv);
                let r2 = self.radius * self.radius;
                let z = self.z0 - self.bump * (1.0 - (du * du + dv * dv) / r2);
                (z, 2.0 * self.bump * du / r2, 2.0 * self.bump * dv / r2)
            }
        }
    }
}

fn build_layers(cfg: &SceneConfig, id: SampleId) -> Vec<Layer> {
    let mut rng = rng::stream(cfg.seed, &[rng::label("scene"), u64::from(id.0)]);
    let jitter = |rng: &mut rand_chacha::ChaCha8Rng, base: [f64; 3]| {
        let j = cfg.style.albedo_jitter;
        base.map(|c| (c + rng.random_range(-1.0..=1.0) * j).clamp(0.0, 1.0))
    };
    let slope = |rng: &mut rand_chacha::ChaCha8Rng| {
        if cfg.max_slope > 0.0 {
            rng.random_range(-cfg.max_slope..=cfg.max_slope)
        } else {
            0.0
        }
    };

    let mut layers = Vec::with_capacity(cfg.n_shapes);
    let bg_albedo = jitter(&mut rng, PALETTE[0]);
    let (su, sv) = (slope(&mut rng), slope(&mut rng));
    layers.push(Layer {
        kind: ShapeKind::GradientPlane,
        cu: 0.5,
        cv: 0.5,
        half_u: 1.0,
        half_v: 1.0,
        radius: 0.0,
        z0: rng.random_range(0.72..0.85),
        slope_u: su * 0.5,
        slope_v: sv * 0.5,
        bump: 0.0,
        albedo: bg_albedo,
    });

    // foreground depths, painted far to near
    let mut z0s: Vec<f64> = (1..cfg.n_shapes)
        .map(|_| rng.random_range(0.15..0.6))
        .collect();
    z0s.sort_by(|a, b| b.total_cmp(a));
    for (j, z0) in z0s.into_iter().enumerate() {
        let kind = match rng.random_range(0..3) {
            0 => ShapeKind::Rectangle,
            1 => ShapeKind::Disk,
            _ => ShapeKind::GradientPlane,
        };
        let albedo = jitter(&mut rng, PALETTE[j + 1]);
        let (su, sv) = (slope(&mut rng), slope(&mut rng));
        layers.push(Layer {
            kind,
            cu: rng.random_range(0.15..0.85),
            cv: rng.random_range(0.15..0.85),
            half_u: rng.random_range(0.1..0.3),
            half_v: rng.random_range(0.1..0.3),
            radius: rng.random_range(0.12..0.3),
            z0,
            slope_u: su,
            slope_v: sv,
            bump: rng.random_range(0.05..0.12),
            albedo,
        });
    }
    layers
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Render the ground-truth views of sample `id`.
///
/// Normals are stored encoded as `(n + 1) / 2` so they fit the `[0, 1]`
/// regression range; decode with `2v − 1` before taking norms.
pub fn generate_scene(cfg: &SceneConfig, id: SampleId) -> Result<Scene> {
    cfg.validate()?;
    let (h, w) = (cfg.height, cfg.width);
    let layers = build_layers(cfg, id);
    let light = normalize3(cfg.style.light);
    let nc = cfg.normals_channels;

    let mut rgb = Vec::with_capacity(h * w * 3);
    let mut depth = Vec::with_capacity(h * w);
    let mut normals = Vec::with_capacity(h * w * nc);
    let mut seg = vec![0f32; h * w * cfg.class_count];

    for y in 0..h {
        let v = y as f64 / (h - 1) as f64;
        for x in 0..w {
            let u = x as f64 / (w - 1) as f64;
            let top = layers
                .iter()
                .rposition(|l| l.covers(u, v))
                .expect("background covers the frame");
            let layer = &layers[top];
            let (z, dzu, dzv) = layer.depth(u, v);
            let z = z.clamp(0.0, 1.0);
            let n = normalize3([-dzu, -dzv, 1.0]);
            let lambert = (n[0] * light[0] + n[1] * light[1] + n[2] * light[2]).max(0.0);
            let shade = cfg.style.ambient + (1.0 - cfg.style.ambient) * lambert;
            let f = cfg.style.fog * z;
            for c in 0..3 {
                let col = (1.0 - f) * layer.albedo[c] * shade + f * cfg.style.fog_color[c];
                rgb.push(col.clamp(0.0, 1.0) as f32);
            }
            depth.push(z as f32);
            for nv in n.iter().take(nc) {
                normals.push((0.5 * (nv + 1.0)) as f32);
            }
            seg[(y * w + x) * cfg.class_count + top] = 1.0;
        }
    }

    Ok(Scene {
        rgb: PredictionMap::new(h, w, 3, rgb)?,
        depth: PredictionMap::new(h, w, 1, depth)?,
        normals: PredictionMap::new(h, w, nc, normals)?,
        seg: PredictionMap::new(h, w, cfg.class_count, seg)?,
    })
}

/// Decoded normal vector at pixel `p` of an encoded 3-channel normals map.
pub fn decode_normal(map: &PredictionMap, p: usize) -> [f64; 3] {
    let px = map.pixel(p);
    [
        2.0 * f64::from(px[0]) - 1.0,
        2.0 * f64::from(px[1]) - 1.0,
        2.0 * f64::from(px[2]) - 1.0,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::TaskSpec;

    #[test]
    fn flat_single_plane() {
        let cfg = SceneConfig {
            n_shapes: 1,
            max_slope: 0.0,
            ..Default::default()
        };
        let s = generate_scene(&cfg, SampleId(3)).unwrap();
        let z0 = s.depth.get(0, 0, 0);
        assert!(s.depth.data().iter().all(|&z| z == z0));
        for p in 0..s.normals.pixels() {
            assert_eq!(decode_normal(&s.normals, p), [0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn deterministic_and_sample_dependent() {
        let cfg = SceneConfig::default();
        let a = generate_scene(&cfg, SampleId(5)).unwrap();
        assert_eq!(a, generate_scene(&cfg, SampleId(5)).unwrap());
        assert_ne!(a.rgb, generate_scene(&cfg, SampleId(6)).unwrap().rgb);
    }

    #[test]
    fn views_satisfy_task_invariants() {
        let cfg = SceneConfig {
            n_shapes: 6,
            class_count: 8,
            ..Default::default()
        };
        for i in 0..20 {
            let s = generate_scene(&cfg, SampleId(i)).unwrap();
            s.rgb.validate(&TaskSpec::regression("rgb", 3)).unwrap();
            s.depth.validate(&TaskSpec::regression("depth", 1)).unwrap();
            s.normals.validate(&TaskSpec::regression("normals", 3)).unwrap();
            s.seg.validate(&TaskSpec::classification("seg", 8)).unwrap();
            for p in 0..s.normals.pixels() {
                let n = decode_normal(&s.normals, p);
                let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                assert!((norm - 1.0).abs() < 1e-5, "norm {norm}");
            }
        }
    }

    #[test]
    fn two_channel_normals() {
        let cfg = SceneConfig {
            normals_channels: 2,
            ..Default::default()
        };
        assert_eq!(generate_scene(&cfg, SampleId(0)).unwrap().normals.channels(), 2);
    }

    #[test]
    fn config_limits() {
        let bad = [
            SceneConfig { height: 8, ..Default::default() },
            SceneConfig { n_shapes: 0, ..Default::default() },
            SceneConfig { n_shapes: 7, class_count: 6, ..Default::default() },
            SceneConfig { n_shapes: 4, class_count: 17, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }
}
