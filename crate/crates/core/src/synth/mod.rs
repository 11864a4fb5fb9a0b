//! Procedural multi-task world: scenes with mutually consistent ground
//! truth for every task, plus corrupted "expert" predictions.

mod expert;
mod scene;
mod views;

pub use expert::{Corruption, ExpertSimulator, LABEL_FLOOR};
pub use scene::{decode_normal, generate_scene, Scene, SceneConfig, SceneStyle, ShapeKind};
pub use views::{derive_view, grayscale, rgb_to_hsv};

use crate::error::Result;
use crate::maps::{PredictionMap, TaskSpec};
use crate::tasks;

/// Ground truth of `task` for a rendered scene.
pub fn ground_truth(scene: &Scene, task: &TaskSpec) -> Result<PredictionMap> {
    match task.name.as_str() {
        tasks::RGB => Ok(scene.rgb.clone()),
        tasks::DEPTH => Ok(scene.depth.clone()),
        tasks::NORMALS => Ok(scene.normals.clone()),
        tasks::SEG => Ok(scene.seg.clone()),
        _ => derive_view(&scene.rgb, task),
    }
}
