//! Declarative run configuration (TOML).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DatasetConfig, ExpertBank, IterationConfig, NodeOrdering};
use crate::maps::TaskSpec;
use crate::synth::{Corruption, SceneStyle};
use crate::tasks;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    /// Dataset root; relative paths resolve against the config file.
    pub data: PathBuf,
    /// Parent of run directories.
    pub runs: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            data: PathBuf::from("data"),
            runs: PathBuf::from("runs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpertsConfig {
    pub seed: u64,
    /// Corruption for every task without an override.
    pub default: Corruption,
    /// Per-task overrides keyed by task name.
    pub tasks: BTreeMap<String, Corruption>,
}

impl Default for ExpertsConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            default: Corruption::structured(0.1),
            tasks: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NodeSweepConfig {
    pub dest: String,
    pub orderings: Vec<NodeOrdering>,
}

impl Default for NodeSweepConfig {
    fn default() -> Self {
        Self {
            dest: tasks::DEPTH.into(),
            orderings: vec![NodeOrdering::Random { seed: 0 }, NodeOrdering::PerformanceBased],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeakExpertConfig {
    pub dest: String,
    pub strengths: Vec<f64>,
}

impl Default for WeakExpertConfig {
    fn default() -> Self {
        Self {
            dest: tasks::SEG.into(),
            strengths: vec![0.05, 0.1, 0.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MmdConfig {
    /// Scene seed of the second domain.
    pub other_seed: u64,
    /// Appearance of the second domain.
    pub other_style: SceneStyle,
    /// Samples per side.
    pub samples: usize,
    /// Destination of the edge whose features are compared.
    pub probe_task: String,
}

impl Default for MmdConfig {
    fn default() -> Self {
        Self {
            other_seed: 1,
            other_style: SceneStyle {
                fog: 0.15,
                fog_color: [0.6, 0.55, 0.5],
                light: [-0.5, 0.3, 1.0],
                ambient: 0.5,
                albedo_jitter: 0.08,
            },
            samples: 16,
            probe_task: tasks::DEPTH.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentsConfig {
    pub node_sweep: NodeSweepConfig,
    pub weak_expert: WeakExpertConfig,
    pub mmd: MmdConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub name: String,
    pub tasks: Vec<String>,
    pub paths: Paths,
    pub dataset: DatasetConfig,
    pub experts: ExpertsConfig,
    pub iteration: IterationConfig,
    pub experiments: ExperimentsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            tasks: tasks::DEFAULT_ROSTER.iter().map(|s| s.to_string()).collect(),
            paths: Paths::default(),
            dataset: DatasetConfig::default(),
            experts: ExpertsConfig::default(),
            iteration: IterationConfig::default(),
            experiments: ExperimentsConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parse and validate; relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for p in [&mut cfg.paths.data, &mut cfg.paths.runs] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("invalid run name `{}`", self.name)));
        }
        self.dataset.scene.validate()?;
        let roster = self.roster()?;
        for name in self.experts.tasks.keys() {
            if !roster.iter().any(|t| &t.name == name) {
                return Err(Error::Config(format!("expert override for unknown task `{name}`")));
            }
        }
        self.experts.default.validate()?;
        for c in self.experts.tasks.values() {
            c.validate()?;
        }
        if self.iteration.n_iters != self.dataset.n_parts {
            return Err(Error::Config(format!(
                "iteration.n_iters ({}) must equal dataset.n_parts ({})",
                self.iteration.n_iters, self.dataset.n_parts
            )));
        }
        if self.iteration.train.batch == 0 {
            return Err(Error::Config("iteration.train.batch must be >= 1".into()));
        }
        Ok(())
    }

    pub fn roster(&self) -> Result<Vec<TaskSpec>> {
        tasks::roster(
            &self.tasks,
            self.dataset.scene.class_count,
            self.dataset.scene.normals_channels,
        )
    }

    pub fn expert_bank(&self, roster: &[TaskSpec]) -> Result<ExpertBank> {
        ExpertBank::with_corruptions(
            roster,
            |t| self.experts.tasks.get(&t.name).copied().unwrap_or(self.experts.default),
            self.experts.seed,
        )
    }

    pub fn run_dir(&self) -> PathBuf {
        self.paths.runs.join(&self.name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_desk_config() {
        let text = include_str!("../../../configs/desk.toml");
        let cfg = RunConfig::from_toml(text, Path::new("/cfg")).unwrap();
        assert_eq!(cfg.roster().unwrap().len(), 8);
        assert_eq!(cfg.iteration.metric, crate::consensus::MetricKind::Perceptual);
        assert_eq!(cfg.experts.default, Corruption::structured(0.1));
        assert_eq!(cfg.paths.runs, Path::new("/cfg/../runs"));
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back = RunConfig::from_toml(&text, Path::new("/")).unwrap();
        assert_eq!(back.tasks, cfg.tasks);
        assert_eq!(back.iteration, cfg.iteration);
        assert_eq!(back.experiments, cfg.experiments);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_toml("name = \"x\"\nbogus_key = 1\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("bogus_key"), "{err}");
        let err = RunConfig::from_toml("[dataset]\nn_sample = 3\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("n_sample"), "{err}");
    }

    #[test]
    fn partial_config_uses_defaults() {
        let cfg = RunConfig::from_toml(
            "name = \"tiny\"\n[dataset]\nn_samples = 8\n[dataset.scene]\nheight = 16\nwidth = 16\n[iteration]\nmetric = \"l1\"\n",
            Path::new("/tmp"),
        )
        .unwrap();
        assert_eq!(cfg.dataset.scene.height, 16);
        assert_eq!(cfg.iteration.metric, crate::consensus::MetricKind::L1);
        assert_eq!(cfg.paths.data, Path::new("/tmp/data"));
        assert_eq!(cfg.run_dir(), Path::new("/tmp/runs/tiny"));
    }

    #[test]
    fn invariants_checked() {
        assert!(RunConfig::from_toml("tasks = [\"depth\"]\n", Path::new(".")).is_err());
        assert!(RunConfig::from_toml("[iteration]\nn_iters = 3\n", Path::new(".")).is_err());
        assert!(RunConfig::from_toml("[experts.tasks.nope]\nnoise_sigma = 0.1\n", Path::new(".")).is_err());
        let gaussian = "[iteration]\nkernel = { gaussian = { sigma = 0.2 } }\n";
        assert!(RunConfig::from_toml(gaussian, Path::new(".")).is_ok());
    }
}
