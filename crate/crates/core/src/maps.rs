//! Dense per-pixel maps and the task descriptors that give them meaning.
//!
//! A [`PredictionMap`] is an `h×w×c` tensor of `f32` stored row-major in
//! `(y, x, channel)` order. It does not carry its task: containers (the
//! pseudo-label store, edge models) pair maps with a [`TaskSpec`] and call
//! [`PredictionMap::validate`] at their boundaries.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-pixel channel-sum tolerance for classification maps.
pub const SIMPLEX_TOL: f32 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Regression,
    Classification,
}

/// One node of the task graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub channels: usize,
    pub kind: TaskKind,
}

impl TaskSpec {
    pub fn new(name: impl Into<String>, channels: usize, kind: TaskKind) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::Config("task name must not be empty".into()));
        }
        if channels == 0 {
            return Err(Error::Config(format!("task {name}: channels must be >= 1")));
        }
        if kind == TaskKind::Classification && channels < 2 {
            return Err(Error::Config(format!(
                "task {name}: classification needs >= 2 classes"
            )));
        }
        Ok(Self {
            name,
            channels,
            kind,
        })
    }

    pub fn regression(name: impl Into<String>, channels: usize) -> Self {
        Self::new(name, channels, TaskKind::Regression).expect("valid regression task")
    }

    pub fn classification(name: impl Into<String>, classes: usize) -> Self {
        Self::new(name, classes, TaskKind::Classification).expect("valid classification task")
    }

    pub fn is_classification(&self) -> bool {
        self.kind == TaskKind::Classification
    }
}

impl fmt::Display for TaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Identifier of one sample, unique within a generated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SampleId(pub u32);

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMap {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl PredictionMap {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::InvalidMap(format!(
                "dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::InvalidMap(format!(
                "expected {} values for {height}x{width}x{channels}, got {}",
                height * width * channels,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f32) -> Self {
        Self::new(height, width, channels, vec![value; height * width * channels])
            .expect("positive dimensions")
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self::filled(height, width, channels, 0.0)
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::new(height, width, channels, data).expect("positive dimensions")
    }

    /// Build from `f64` values, rounding to storage precision.
    pub fn from_f64(height: usize, width: usize, channels: usize, data: &[f64]) -> Result<Self> {
        Self::new(height, width, channels, data.iter().map(|&v| v as f32).collect())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v)).collect()
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[self.index(y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f32) {
        let i = self.index(y, x, c);
        self.data[i] = v;
    }

    /// Channel values of pixel `p` (flat pixel index `y * w + x`).
    #[inline]
    pub fn pixel(&self, p: usize) -> &[f32] {
        &self.data[p * self.channels..(p + 1) * self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, p: usize) -> &mut [f32] {
        &mut self.data[p * self.channels..(p + 1) * self.channels]
    }

    /// Single channel extracted as its own 1-channel map.
    pub fn channel(&self, c: usize) -> PredictionMap {
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| px[c])
            .collect();
        PredictionMap::new(self.height, self.width, 1, data).expect("same dims")
    }

    pub fn same_dims(&self, other: &PredictionMap) -> bool {
        self.dims() == other.dims()
    }

    pub fn check_same_dims(&self, other: &PredictionMap) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{:?} vs {:?}",
                self.dims(),
                other.dims()
            )))
        }
    }

    /// Per-pixel argmax over channels.
    pub fn argmax(&self) -> Vec<usize> {
        self.data
            .chunks_exact(self.channels)
            .map(|px| {
                let mut best = 0;
                for (c, &v) in px.iter().enumerate() {
                    if v > px[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Check the map against a task's value constraints.
    pub fn validate(&self, task: &TaskSpec) -> Result<()> {
        if self.channels != task.channels {
            return Err(Error::InvalidMap(format!(
                "task {} expects {} channels, map has {}",
                task.name, task.channels, self.channels
            )));
        }
        if !self.all_finite() {
            return Err(Error::InvalidMap("non-finite value".into()));
        }
        match task.kind {
            TaskKind::Regression => {
                if let Some(v) = self.data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::InvalidMap(format!(
                        "task {}: value {v} outside [0,1]",
                        task.name
                    )));
                }
            }
            TaskKind::Classification => {
                for (p, px) in self.data.chunks_exact(self.channels).enumerate() {
                    if px.iter().any(|&v| v < 0.0) {
                        return Err(Error::InvalidMap(format!("pixel {p}: negative probability")));
                    }
                    let sum: f32 = px.iter().sum();
                    if (sum - 1.0).abs() > SIMPLEX_TOL {
                        return Err(Error::InvalidMap(format!(
                            "pixel {p}: channel sum {sum} is not 1"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Rescale every pixel to sum to one. Pixels with no mass become uniform.
    pub fn renormalize_simplex(&mut self) {
        let c = self.channels;
        for px in self.data.chunks_exact_mut(c) {
            for v in px.iter_mut() {
                *v = v.max(0.0);
            }
            let sum: f64 = px.iter().map(|&v| f64::from(v)).sum();
            if sum > 0.0 {
                for v in px.iter_mut() {
                    *v = (f64::from(*v) / sum) as f32;
                }
            } else {
                px.fill(1.0 / c as f32);
            }
        }
    }

    /// Validate against `task`, repairing classification sums that are
    /// within tolerance.
    pub fn conform(mut self, task: &TaskSpec) -> Result<Self> {
        self.validate(task)?;
        if task.is_classification() {
            self.renormalize_simplex();
        }
        Ok(self)
    }

    /// Clamp every value into `[0, 1]`.
    pub fn clamp_unit(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| f64::from(v)).sum::<f64>() / self.data.len() as f64
    }
}
