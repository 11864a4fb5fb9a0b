//! Train single edges on ground truth: a linear one (rgb -> grayscale) and
//! two that are not (rgb -> depth, rgb -> seg), with both architectures.

use cshift::edge::{save_model, train_edge, Arch, EdgeModel, TrainConfig};
use cshift::eval::mean_l1_x100;
use cshift::graph::{Dataset, DatasetConfig};
use cshift::{tasks, PredictionMap};

fn main() -> cshift::Result<()> {
    let names: Vec<String> = [tasks::RGB, tasks::GRAYSCALE, tasks::DEPTH, tasks::SEG]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let roster = tasks::roster(&names, 6, 3)?;
    let ds = Dataset::generate(
        &DatasetConfig {
            n_samples: 40,
            ..Default::default()
        },
        &roster,
    )?;
    let train = ds.split.pool();
    let test = &ds.split.test;
    let maps = |ids: &[cshift::SampleId], t: usize| -> Vec<PredictionMap> {
        ids.iter().map(|&i| ds.gt(i, t).clone()).collect()
    };
    let cfg = TrainConfig {
        epochs: 15,
        ..Default::default()
    };

    for arch in [Arch::PatchLinear, Arch::ShallowConv] {
        for dst in 1..roster.len() {
            let model = EdgeModel::new(roster[0].clone(), roster[dst].clone(), arch, 0);
            let (model, report) = train_edge(model, &maps(&train, 0), &maps(&train, dst), &cfg, 0)?;
            let preds = maps(test, 0)
                .iter()
                .map(|x| model.forward(x))
                .collect::<cshift::Result<Vec<_>>>()?;
            println!(
                "{arch:?} rgb->{:10} loss {:.4} -> {:.4}, test L1x100 {:.2}",
                roster[dst].name,
                report.losses[0],
                report.losses.last().copied().unwrap_or(f64::NAN),
                mean_l1_x100(&preds, &maps(test, dst))?
            );
            if arch == Arch::PatchLinear && dst == 1 {
                let path = std::env::temp_dir().join("rgb__grayscale.csprm");
                save_model(&model, &path)?;
                println!("  saved {}", path.display());
            }
        }
    }
    Ok(())
}
