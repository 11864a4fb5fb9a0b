use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::PredictionMap;
use crate::rng;

use super::model::EdgeModel;
use super::optim::{plateau_step, sgd_nesterov_step, OptimizerState, PlateauConfig, SchedulerState, SgdConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub sgd: SgdConfig,
    pub plateau: PlateauConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch: 4,
            sgd: SgdConfig::default(),
            plateau: PlateauConfig::default(),
        }
    }
}

/// Model outputs on the probe inputs after a given epoch (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSnapshot {
    pub epoch: usize,
    pub outputs: Vec<PredictionMap>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Mean per-sample loss of each epoch.
    pub losses: Vec<f64>,
    pub final_lr: f64,
    pub probes: Vec<ProbeSnapshot>,
}

/// Optional probe set evaluated at chosen epochs during training.
#[derive(Debug, Clone, Copy, Default)]
pub struct Probe<'a> {
    pub inputs: &'a [PredictionMap],
    pub epochs: &'a [usize],
}

pub fn train_edge(
    model: EdgeModel,
    inputs: &[PredictionMap],
    targets: &[PredictionMap],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(EdgeModel, TrainReport)> {
    train_edge_probed(model, inputs, targets, cfg, seed, Probe::default())
}

/// Train with minibatch SGD (Nesterov) and a plateau scheduler. The shuffle
/// order depends only on `seed`, and gradients are summed in a fixed order,
/// so identical inputs give bit-identical parameters.
pub fn train_edge_probed(
    mut model: EdgeModel,
    inputs: &[PredictionMap],
    targets: &[PredictionMap],
    cfg: &TrainConfig,
    seed: u64,
    probe: Probe<'_>,
) -> Result<(EdgeModel, TrainReport)> {
    if inputs.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} inputs vs {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    if cfg.batch == 0 {
        return Err(Error::Config("batch must be >= 1".into()));
    }
    for (x, t) in inputs.iter().zip(targets) {
        if x.channels() != model.src.channels || t.channels() != model.dst.channels {
            return Err(Error::Shape(format!(
                "edge {}→{} got {}→{} channels",
                model.src.name,
                model.dst.name,
                x.channels(),
                t.channels()
            )));
        }
        if (x.height(), x.width()) != (t.height(), t.width()) {
            return Err(Error::Shape("input/target spatial dims differ".into()));
        }
    }

    let xs: Vec<Vec<f64>> = inputs.iter().map(PredictionMap::to_f64).collect();
    let ts: Vec<Vec<f64>> = targets.iter().map(PredictionMap::to_f64).collect();
    let mut opt = OptimizerState::new(cfg.sgd, model.param_count());
    let mut sched = SchedulerState::new(cfg.plateau);
    let mut report = TrainReport {
        final_lr: opt.lr,
        ..Default::default()
    };
    if inputs.is_empty() {
        return Ok((model, report));
    }

    let mut grad = vec![0.0; model.param_count()];
    let mut order: Vec<usize> = (0..xs.len()).collect();
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::stream(seed, &[rng::label("shuffle"), epoch as u64]));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch) {
            grad.fill(0.0);
            for &i in batch {
                let (h, w) = (inputs[i].height(), inputs[i].width());
                epoch_loss += model.loss_and_grad(&xs[i], &ts[i], h, w, &mut grad);
            }
            let scale = 1.0 / batch.len() as f64;
            for g in grad.iter_mut() {
                *g *= scale;
            }
            sgd_nesterov_step(model.params_mut(), &grad, &mut opt)?;
        }
        epoch_loss /= xs.len() as f64;
        if !epoch_loss.is_finite() || model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Numerics(format!(
                "edge {}→{} diverged at epoch {}",
                model.src.name,
                model.dst.name,
                epoch + 1
            )));
        }
        report.losses.push(epoch_loss);
        plateau_step(&mut sched, epoch_loss, &mut opt);

        if probe.epochs.contains(&(epoch + 1)) {
            let outputs = probe
                .inputs
                .iter()
                .map(|x| model.forward(x))
                .collect::<Result<Vec<_>>>()?;
            report.probes.push(ProbeSnapshot {
                epoch: epoch + 1,
                outputs,
            });
        }
    }
    report.final_lr = opt.lr;
    Ok((model, report))
}
