use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::csmap;
use crate::error::{Error, Result};
use crate::maps::{PredictionMap, SampleId, TaskSpec};

/// Current pseudo-label of every (sample, task) pair, tagged with the
/// iteration that produced it (0 = experts).
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabelStore {
    pub iteration: usize,
    tasks: Vec<TaskSpec>,
    maps: BTreeMap<SampleId, Vec<PredictionMap>>,
}

impl PseudoLabelStore {
    pub fn new(tasks: Vec<TaskSpec>, iteration: usize) -> Self {
        Self {
            iteration,
            tasks,
            maps: BTreeMap::new(),
        }
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    /// Insert every task's view of one sample, in roster order.
    pub fn insert(&mut self, id: SampleId, views: Vec<PredictionMap>) -> Result<()> {
        if views.len() != self.tasks.len() {
            return Err(Error::Shape(format!(
                "sample {id}: {} views for {} tasks",
                views.len(),
                self.tasks.len()
            )));
        }
        for (v, t) in views.iter().zip(&self.tasks) {
            if v.channels() != t.channels {
                return Err(Error::Shape(format!("sample {id}: {} has {} channels", t.name, v.channels())));
            }
        }
        self.maps.insert(id, views);
        Ok(())
    }

    pub fn get(&self, id: SampleId, task: usize) -> Result<&PredictionMap> {
        self.maps
            .get(&id)
            .map(|v| &v[task])
            .ok_or_else(|| Error::Config(format!("sample {id} missing from store")))
    }

    pub fn views(&self, id: SampleId) -> Option<&[PredictionMap]> {
        self.maps.get(&id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> Vec<SampleId> {
        self.maps.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Every id in `ids` has a view for every task.
    pub fn is_complete(&self, ids: &[SampleId]) -> bool {
        ids.iter().all(|id| self.maps.get(id).is_some_and(|v| v.len() == self.tasks.len()))
    }

    /// Entries of `other` replace ours; used to merge stores over disjoint
    /// sample sets.
    pub fn absorb(&mut self, other: PseudoLabelStore) {
        self.maps.extend(other.maps);
    }

    /// `<dir>/<id>/<task>.csmap` for every entry.
    pub fn save(&self, dir: &Path) -> Result<()> {
        for (id, views) in &self.maps {
            let sdir = dir.join(id.0.to_string());
            fs::create_dir_all(&sdir).map_err(|e| Error::write(&sdir, e))?;
            for (v, t) in views.iter().zip(&self.tasks) {
                csmap::write_task_map(v, t, &sdir.join(format!("{}.csmap", t.name)))?;
            }
        }
        Ok(())
    }

    pub fn load(dir: &Path, tasks: Vec<TaskSpec>, ids: &[SampleId], iteration: usize) -> Result<Self> {
        let mut store = Self::new(tasks, iteration);
        for id in ids {
            let sdir = dir.join(id.0.to_string());
            let views = store
                .tasks
                .iter()
                .map(|t| csmap::read_task_map(&sdir.join(format!("{}.csmap", t.name)), t))
                .collect::<Result<Vec<_>>>()?;
            store.maps.insert(*id, views);
        }
        Ok(store)
    }
}
