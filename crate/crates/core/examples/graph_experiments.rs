//! Node-addition and weak-expert sweeps on a reduced graph.

use cshift::graph::{
    node_addition_experiment, node_curve_csv, weak_expert_csv, weak_expert_sweep, Dataset, DatasetConfig,
    ExpertBank, IterationConfig, NodeOrdering,
};
use cshift::synth::Corruption;
use cshift::tasks;

fn main() -> cshift::Result<()> {
    let names: Vec<String> = tasks::DEFAULT_ROSTER.iter().map(|s| s.to_string()).collect();
    let roster = tasks::roster(&names, 6, 3)?;
    let ds = Dataset::generate(
        &DatasetConfig {
            n_samples: 48,
            ..Default::default()
        },
        &roster,
    )?;
    let experts = ExpertBank::uniform(&roster, Corruption::structured(0.1), 0)?;
    let mut cfg = IterationConfig::default();
    cfg.train.epochs = 10;

    for (label, ordering) in [
        ("random", NodeOrdering::Random { seed: 0 }),
        ("performance", NodeOrdering::PerformanceBased),
    ] {
        let pts = node_addition_experiment(&ds, &experts, &cfg, tasks::DEPTH, ordering)?;
        print!("{}", node_curve_csv(label, &pts));
    }

    let rows = weak_expert_sweep(&ds, &experts, &cfg, tasks::SEG, &[0.05, 0.1, 0.2])?;
    print!("{}", weak_expert_csv(&rows));
    Ok(())
}
