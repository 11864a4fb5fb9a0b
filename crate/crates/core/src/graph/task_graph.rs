use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::edge::{load_model, save_model, Arch, EdgeModel};
use crate::error::{Error, Result};
use crate::maps::{PredictionMap, SampleId, TaskSpec};
use crate::rng;

/// Fully connected directed graph over tasks; edge `(s, d)` maps task `s`'s
/// view to task `d`'s.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskGraph {
    tasks: Vec<TaskSpec>,
    edges: BTreeMap<(usize, usize), EdgeModel>,
    /// Edges that diverged in the last training pass; excluded from
    /// candidate sets.
    failed: BTreeSet<(usize, usize)>,
}

impl TaskGraph {
    /// Every ordered pair gets a freshly initialized model.
    pub fn new(tasks: Vec<TaskSpec>, arch: Arch, seed: u64) -> Self {
        let mut edges = BTreeMap::new();
        for (s, d) in ordered_pairs(tasks.len()) {
            let edge_seed = rng::derive_seed(seed, &[rng::label("edge"), s as u64, d as u64]);
            edges.insert((s, d), EdgeModel::new(tasks[s].clone(), tasks[d].clone(), arch, edge_seed));
        }
        Self {
            tasks,
            edges,
            failed: BTreeSet::new(),
        }
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn task_index(&self, name: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.name == name)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, s: usize, d: usize) -> Option<&EdgeModel> {
        self.edges.get(&(s, d))
    }

    pub fn set_edge(&mut self, s: usize, d: usize, model: EdgeModel) -> Result<()> {
        if model.src != self.tasks[s] || model.dst != self.tasks[d] {
            return Err(Error::Config(format!(
                "edge {}→{} given a {}→{} model",
                self.tasks[s], self.tasks[d], model.src, model.dst
            )));
        }
        self.edges.insert((s, d), model);
        self.failed.remove(&(s, d));
        Ok(())
    }

    pub fn mark_failed(&mut self, s: usize, d: usize) {
        self.failed.insert((s, d));
    }

    pub fn is_active(&self, s: usize, d: usize) -> bool {
        self.edges.contains_key(&(s, d)) && !self.failed.contains(&(s, d))
    }

    pub fn failed(&self) -> &BTreeSet<(usize, usize)> {
        &self.failed
    }

    /// `<dir>/<src>__<dst>.csprm` for every edge.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::write(dir, e))?;
        for ((s, d), m) in &self.edges {
            save_model(m, &dir.join(edge_file(&self.tasks[*s], &self.tasks[*d])))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path, tasks: Vec<TaskSpec>) -> Result<Self> {
        let mut edges = BTreeMap::new();
        for (s, d) in ordered_pairs(tasks.len()) {
            let m = load_model(&dir.join(edge_file(&tasks[s], &tasks[d])), tasks[s].kind)?;
            if m.dst != tasks[d] {
                return Err(Error::Format(format!("checkpoint for {}→{} has wrong destination", tasks[s], tasks[d])));
            }
            edges.insert((s, d), m);
        }
        Ok(Self {
            tasks,
            edges,
            failed: BTreeSet::new(),
        })
    }
}

pub fn edge_file(src: &TaskSpec, dst: &TaskSpec) -> String {
    format!("{}__{}.csprm", src.name, dst.name)
}

/// All `(s, d)` with `s ≠ d`, source-major.
pub fn ordered_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|s| (0..n).filter(move |&d| d != s).map(move |d| (s, d)))
        .collect()
}

/// Source of edge predictions for the ensemble phase.
pub trait EdgePredictor: Sync {
    /// Prediction of edge `src → dst` on `input`, or `None` if the edge is
    /// unavailable.
    fn predict(&self, src: usize, dst: usize, id: SampleId, input: &PredictionMap) -> Result<Option<PredictionMap>>;
}

impl EdgePredictor for TaskGraph {
    fn predict(&self, src: usize, dst: usize, _id: SampleId, input: &PredictionMap) -> Result<Option<PredictionMap>> {
        if !self.is_active(src, dst) {
            return Ok(None);
        }
        self.edges[&(src, dst)].forward(input).map(Some)
    }
}
