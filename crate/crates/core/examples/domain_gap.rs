//! MMD between two scene styles, on raw pixels and on edge features.

use cshift::eval::{mmd2_unbiased, Bandwidth};
use cshift::graph::{mmd_csv, mmd_experiment, Dataset, DatasetConfig, ExpertBank, IterationConfig};
use cshift::synth::{Corruption, SceneStyle};
use cshift::tasks;

fn main() -> cshift::Result<()> {
    let x = vec![vec![0.0], vec![0.0]];
    let y = vec![vec![1.0], vec![1.0]];
    println!(
        "two-point example: {:.6} (2 - 2e^-1/2 = {:.6})",
        mmd2_unbiased(&x, &y, Bandwidth::Fixed(1.0))?,
        2.0 - 2.0 * (-0.5f64).exp()
    );

    let names: Vec<String> = tasks::DEFAULT_ROSTER.iter().map(|s| s.to_string()).collect();
    let roster = tasks::roster(&names, 6, 3)?;
    let clear = Dataset::generate(
        &DatasetConfig {
            n_samples: 40,
            ..Default::default()
        },
        &roster,
    )?;
    let mut dusk = DatasetConfig {
        n_samples: 24,
        ..Default::default()
    };
    dusk.scene.seed = 1;
    dusk.scene.style = SceneStyle {
        fog: 0.15,
        fog_color: [0.6, 0.55, 0.5],
        light: [-0.5, 0.3, 1.0],
        ambient: 0.5,
        albedo_jitter: 0.08,
    };
    let dusk = Dataset::generate(&dusk, &roster)?;

    let experts = ExpertBank::uniform(&roster, Corruption::structured(0.1), 0)?;
    let mut cfg = IterationConfig::default();
    cfg.train.epochs = 8;
    let rows = mmd_experiment(("clear", &clear), ("dusk", &dusk), &experts, &cfg, tasks::DEPTH, 16)?;
    print!("{}", mmd_csv(&rows));
    Ok(())
}
