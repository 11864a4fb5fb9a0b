//! SGD with Nesterov momentum and a reduce-on-plateau learning-rate rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SgdConfig {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            lr: 5e-2,
            momentum: 0.9,
            weight_decay: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    buffer: Vec<f64>,
}

impl OptimizerState {
    pub fn new(cfg: SgdConfig, n_params: usize) -> Self {
        Self {
            lr: cfg.lr,
            momentum: cfg.momentum,
            weight_decay: cfg.weight_decay,
            buffer: vec![0.0; n_params],
        }
    }

    pub fn buffer(&self) -> &[f64] {
        &self.buffer
    }
}

/// One Nesterov step:
///
/// ```text
/// g' = g + wd·p
/// b  = μ·b + g'
/// p  = p − lr·(g' + μ·b)
/// ```
pub fn sgd_nesterov_step(params: &mut [f64], grads: &[f64], opt: &mut OptimizerState) -> Result<()> {
    if params.len() != grads.len() || params.len() != opt.buffer.len() {
        return Err(Error::Shape(format!(
            "params {} / grads {} / buffer {}",
            params.len(),
            grads.len(),
            opt.buffer.len()
        )));
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerics("non-finite gradient".into()));
    }
    let (mu, wd, lr) = (opt.momentum, opt.weight_decay, opt.lr);
    for ((p, &g), b) in params.iter_mut().zip(grads).zip(opt.buffer.iter_mut()) {
        let g = g + wd * *p;
        *b = mu * *b + g;
        *p -= lr * (g + mu * *b);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlateauConfig {
    pub patience: usize,
    pub factor: f64,
    /// Relative improvement required to reset the counter.
    pub threshold: f64,
    pub min_lr: f64,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self {
            patience: 10,
            factor: 0.5,
            threshold: 1e-2,
            min_lr: 5e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerState {
    pub cfg: PlateauConfig,
    pub best: f64,
    pub bad_epochs: usize,
    pub reductions: usize,
}

impl SchedulerState {
    pub fn new(cfg: PlateauConfig) -> Self {
        Self {
            cfg,
            best: f64::INFINITY,
            bad_epochs: 0,
            reductions: 0,
        }
    }
}

/// Feed one epoch loss. Returns `true` when the learning rate was reduced.
pub fn plateau_step(sched: &mut SchedulerState, epoch_loss: f64, opt: &mut OptimizerState) -> bool {
    if epoch_loss < sched.best * (1.0 - sched.cfg.threshold) {
        sched.best = epoch_loss;
        sched.bad_epochs = 0;
        return false;
    }
    sched.bad_epochs += 1;
    if sched.bad_epochs > sched.cfg.patience {
        sched.bad_epochs = 0;
        let new_lr = (opt.lr * sched.cfg.factor).max(sched.cfg.min_lr);
        if new_lr < opt.lr {
            opt.lr = new_lr;
            sched.reductions += 1;
            return true;
        }
    }
    false
}
