//! Ground-truth datasets: generation, on-disk layout and loading.
//!
//! ```text
//! <root>/manifest.toml
//! <root>/<split>/<sample_index>/<task>.csmap
//! ```

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csmap;
use crate::error::{Error, Result};
use crate::maps::{PredictionMap, SampleId, TaskSpec};
use crate::split::{make_splits, DatasetSplit};
use crate::synth::{generate_scene, ground_truth, SceneConfig};
use crate::tasks;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub scene: SceneConfig,
    pub n_samples: usize,
    /// Number of training parts (one per iteration).
    pub n_parts: usize,
    pub val_frac: f64,
    pub test_frac: f64,
    pub split_seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            n_samples: 120,
            n_parts: 2,
            val_frac: 0.1,
            test_frac: 0.15,
            split_seed: 0,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    config: DatasetConfig,
    tasks: Vec<TaskSpec>,
    split: DatasetSplit,
}

pub const MANIFEST: &str = "manifest.toml";

/// Ground truth for every sample and task.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: DatasetConfig,
    pub tasks: Vec<TaskSpec>,
    pub split: DatasetSplit,
    /// `gt[id][task_index]`.
    gt: Vec<Vec<PredictionMap>>,
}

impl Dataset {
    pub fn generate(config: &DatasetConfig, tasks: &[TaskSpec]) -> Result<Self> {
        config.scene.validate()?;
        if !tasks.iter().any(|t| t.name == tasks::RGB) {
            return Err(Error::Config("task roster must include rgb".into()));
        }
        let split = make_splits(
            config.n_samples,
            config.n_parts,
            config.val_frac,
            config.test_frac,
            config.split_seed,
        )?;
        let gt = (0..config.n_samples as u32)
            .into_par_iter()
            .map(|i| {
                let scene = generate_scene(&config.scene, SampleId(i))?;
                tasks.iter().map(|t| ground_truth(&scene, t)).collect()
            })
            .collect::<Result<Vec<Vec<PredictionMap>>>>()?;
        Ok(Self {
            config: config.clone(),
            tasks: tasks.to_vec(),
            split,
            gt,
        })
    }

    pub fn len(&self) -> usize {
        self.gt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gt.is_empty()
    }

    pub fn task_index(&self, name: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.name == name)
    }

    pub fn gt(&self, id: SampleId, task: usize) -> &PredictionMap {
        &self.gt[id.0 as usize][task]
    }

    /// Write the dataset layout; `png` also drops an 8-bit `rgb.png` per
    /// sample for inspection.
    pub fn save(&self, root: &Path, png: bool) -> Result<()> {
        let manifest = Manifest {
            config: self.config.clone(),
            tasks: self.tasks.clone(),
            split: self.split.clone(),
        };
        let text = toml::to_string(&manifest).map_err(|e| Error::Format(e.to_string()))?;
        fs::create_dir_all(root).map_err(|e| Error::write(root, e))?;
        let path = root.join(MANIFEST);
        fs::write(&path, text).map_err(|e| Error::write(&path, e))?;
        for (name, ids) in self.split.named() {
            for id in ids {
                let dir = root.join(&name).join(id.0.to_string());
                fs::create_dir_all(&dir).map_err(|e| Error::write(&dir, e))?;
                for (ti, t) in self.tasks.iter().enumerate() {
                    csmap::write_task_map(self.gt(*id, ti), t, &dir.join(format!("{}.csmap", t.name)))?;
                }
                if png {
                    let rgb = self.task_index(tasks::RGB).expect("roster has rgb");
                    write_png(self.gt(*id, rgb), &dir.join("rgb.png"))?;
                }
            }
        }
        Ok(())
    }

    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::read(&path, e))?;
        let manifest: Manifest = toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        manifest.split.check_disjoint()?;
        let n = manifest.split.n_samples();
        let mut gt: Vec<Option<Vec<PredictionMap>>> = vec![None; n];
        for (name, ids) in manifest.split.named() {
            for id in ids {
                let slot = gt
                    .get_mut(id.0 as usize)
                    .ok_or_else(|| Error::Format(format!("sample {} out of range", id.0)))?;
                let dir = root.join(&name).join(id.0.to_string());
                *slot = Some(
                    manifest
                        .tasks
                        .iter()
                        .map(|t| csmap::read_task_map(&dir.join(format!("{}.csmap", t.name)), t))
                        .collect::<Result<_>>()?,
                );
            }
        }
        Ok(Self {
            config: manifest.config,
            tasks: manifest.tasks,
            split: manifest.split,
            gt: gt.into_iter().map(|g| g.expect("split covers every id")).collect(),
        })
    }
}

fn write_png(map: &PredictionMap, path: &Path) -> Result<()> {
    let (h, w, c) = map.dims();
    let bytes: Vec<u8> = (0..h * w)
        .flat_map(|p| {
            let px = map.pixel(p);
            (0..3).map(move |k| (px[k.min(c - 1)].clamp(0.0, 1.0) * 255.0).round() as u8)
        })
        .collect();
    image::save_buffer(path, &bytes, w as u32, h as u32, image::ColorType::Rgb8)
        .map_err(|e| Error::write(path, std::io::Error::other(e)))
}
