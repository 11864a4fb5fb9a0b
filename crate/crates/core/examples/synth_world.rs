//! Generate a small synthetic dataset, save it, and show what the experts get wrong.

use cshift::eval::l1_x100;
use cshift::graph::{Dataset, DatasetConfig, ExpertBank};
use cshift::synth::Corruption;
use cshift::tasks;

fn main() -> cshift::Result<()> {
    let names: Vec<String> = tasks::DEFAULT_ROSTER.iter().map(|s| s.to_string()).collect();
    let roster = tasks::roster(&names, 6, 3)?;
    let cfg = DatasetConfig {
        n_samples: 24,
        ..Default::default()
    };
    let ds = Dataset::generate(&cfg, &roster)?;
    let dir = std::env::temp_dir().join("cshift-synth-world");
    ds.save(&dir, true)?;
    println!("{} samples written to {}", ds.len(), dir.display());
    println!(
        "split: {} parts, {} val, {} test",
        ds.split.parts.len(),
        ds.split.val.len(),
        ds.split.test.len()
    );

    for level in [0.0, 0.1, 0.2] {
        let bank = ExpertBank::uniform(&roster, Corruption::structured(level), 0)?;
        print!("corruption {level:.2}:");
        for (t, task) in roster.iter().enumerate().skip(1) {
            let expert = bank.get(t).expect("non-rgb task");
            let mut total = 0.0;
            for &id in &ds.split.test {
                total += l1_x100(&expert.predict(ds.gt(id, t), task, id)?, ds.gt(id, t))?;
            }
            print!(" {}={:.2}", task.name, total / ds.split.test.len() as f64);
        }
        println!();
    }
    Ok(())
}
