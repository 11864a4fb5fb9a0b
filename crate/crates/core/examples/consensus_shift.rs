//! Two consensus-shift iterations on a small 8-task graph, written to a run
//! directory with metrics, variance curve and charts.

use cshift::eval::Method;
use cshift::graph::{run_cshift, Dataset, DatasetConfig, ExpertBank, IterationConfig, RunDir};
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

    let out = RunDir::new(std::env::temp_dir().join("cshift-run"));
    let r = run_cshift(&ds, &experts, &cfg, 2, Some(&out))?;
    println!("run written to {}", out.root.display());
    println!("{:13} {:>7} {:>7} {:>7} {:>7}", "task", "expert", "mean", "it1", "it2");
    for t in &roster {
        let g = |it, m| r.metrics.get(it, &t.name, m).unwrap_or(f64::NAN);
        println!(
            "{:13} {:7.2} {:7.2} {:7.2} {:7.2}",
            t.name,
            g(0, Method::Expert),
            g(1, Method::MeanEnsemble),
            g(1, Method::Cshift),
            g(2, Method::Cshift)
        );
    }
    for p in r.variance.iter().filter(|p| p.epoch == 1 || p.epoch == cfg.train.epochs) {
        println!("iteration {} epoch {:2}: candidate variance {:.5}", p.iteration, p.epoch, p.variance);
    }
    Ok(())
}
