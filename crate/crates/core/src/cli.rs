//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::consensus::MetricKind;
use crate::error::{Error, Result};
use crate::eval::{comparison_csv, svg, write_text, MetricTable};
use crate::graph::{
    metric_ablation, mmd_csv, mmd_experiment, node_addition_experiment, node_curve_csv, run_cshift,
    weak_expert_csv, weak_expert_sweep, Dataset, NodeOrdering, RunDir,
};

#[derive(Debug, Parser)]
#[command(name = "cshift", version, about = "Multi-task graph learning by consensus shift")]
pub struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, env = "CSHIFT_WORKERS")]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render the synthetic dataset described by a config.
    GenDataset {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write an 8-bit rgb.png per sample.
        #[arg(long)]
        png: bool,
    },
    /// Experts, then consensus-shift iterations.
    Run {
        #[command(flatten)]
        common: RunArgs,
    },
    /// Graph-level experiments.
    Experiment {
        #[command(subcommand)]
        which: Experiment,
    },
    /// Merge metrics.csv files of several runs into one comparison table.
    Compare {
        /// Run directories (each holding metrics.csv).
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        iteration: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Number of iterations (defaults to the config's n_iters).
    #[arg(long)]
    pub iters: Option<usize>,
    /// Override the selection metric: l1, l2, psnr, ssim, var, perc.
    #[arg(long, value_parser = parse_metric)]
    pub metric: Option<MetricKind>,
}

#[derive(Debug, Subcommand)]
pub enum Experiment {
    /// CShift error as nodes are added around one destination.
    NodeSweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// One iteration per expert strength on a single destination.
    WeakExpert {
        #[arg(long)]
        config: PathBuf,
    },
    /// Domain gap between the configured dataset and a restyled one.
    Mmd {
        #[arg(long)]
        config: PathBuf,
    },
    /// Every selection metric on the same trained edges.
    Ablation {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_metric(s: &str) -> std::result::Result<MetricKind, String> {
    MetricKind::parse(s).map_err(|e| e.to_string())
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let ds = Dataset::load(&cfg.paths.data)?;
    let roster = cfg.roster()?;
    if ds.tasks != roster {
        return Err(Error::Config(format!(
            "dataset at {} was generated for a different task roster",
            cfg.paths.data.display()
        )));
    }
    Ok(ds)
}

fn experiment_dir(cfg: &RunConfig) -> PathBuf {
    cfg.run_dir().join("experiments")
}

fn cmd_gen_dataset(config: &Path, out: &Path, png: bool) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let ds = Dataset::generate(&cfg.dataset, &cfg.roster()?)?;
    ds.save(out, png)?;
    log::info!("wrote {} samples to {}", ds.len(), out.display());
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(m) = args.metric {
        cfg.iteration.metric = m;
        cfg.name = format!("{}-{}", cfg.name, m.name());
    }
    let iters = args.iters.unwrap_or(cfg.iteration.n_iters);
    let ds = load_dataset(&cfg)?;
    let experts = cfg.expert_bank(&ds.tasks)?;
    let dir = RunDir::new(cfg.run_dir());
    let result = run_cshift(&ds, &experts, &cfg.iteration, iters, Some(&dir))?;
    log::info!("run written to {} ({} metric rows)", dir.root.display(), result.metrics.rows.len());
    Ok(())
}

fn cmd_node_sweep(config: &Path) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let ds = load_dataset(&cfg)?;
    let experts = cfg.expert_bank(&ds.tasks)?;
    let sweep = &cfg.experiments.node_sweep;
    let mut csv = String::new();
    let mut series = Vec::new();
    for ordering in &sweep.orderings {
        let label = match ordering {
            NodeOrdering::Random { seed } => format!("random{seed}"),
            NodeOrdering::PerformanceBased => "performance".to_string(),
        };
        let points = node_addition_experiment(&ds, &experts, &cfg.iteration, &sweep.dest, *ordering)?;
        let part = node_curve_csv(&label, &points);
        if csv.is_empty() {
            csv.push_str(&part);
        } else {
            csv.push_str(part.split_once('\n').map_or("", |x| x.1));
        }
        series.push((
            format!("cshift ({label})"),
            points.iter().map(|p| (p.n_nodes as f64, p.cshift)).collect(),
        ));
        series.push((
            format!("mean ({label})"),
            points.iter().map(|p| (p.n_nodes as f64, p.mean)).collect(),
        ));
    }
    let dir = experiment_dir(&cfg);
    write_text(&dir.join("node_sweep.csv"), &csv)?;
    write_text(
        &dir.join("node_sweep.svg"),
        &svg::line_chart(&format!("{} error vs graph size", sweep.dest), "nodes", "L1x100", &series),
    )
}

fn cmd_weak_expert(config: &Path) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let ds = load_dataset(&cfg)?;
    let experts = cfg.expert_bank(&ds.tasks)?;
    let w = &cfg.experiments.weak_expert;
    let rows = weak_expert_sweep(&ds, &experts, &cfg.iteration, &w.dest, &w.strengths)?;
    let dir = experiment_dir(&cfg);
    write_text(&dir.join("weak_expert.csv"), &weak_expert_csv(&rows))?;
    let cats: Vec<String> = rows.iter().map(|r| format!("{:.2}", r.strength)).collect();
    let series = vec![
        ("expert".to_string(), rows.iter().map(|r| r.expert).collect()),
        ("mean_ensemble".to_string(), rows.iter().map(|r| r.mean).collect()),
        ("cshift".to_string(), rows.iter().map(|r| r.cshift).collect()),
    ];
    write_text(
        &dir.join("weak_expert.svg"),
        &svg::bar_chart(&format!("{} by expert strength", w.dest), "L1x100", &cats, &series),
    )
}

fn cmd_mmd(config: &Path) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let ds = load_dataset(&cfg)?;
    let m = &cfg.experiments.mmd;
    let mut other_cfg = cfg.dataset.clone();
    other_cfg.scene.seed = m.other_seed;
    other_cfg.scene.style = m.other_style.clone();
    let other = Dataset::generate(&other_cfg, &ds.tasks)?;
    let experts = cfg.expert_bank(&ds.tasks)?;
    let rows = mmd_experiment(
        (&cfg.name, &ds),
        ("shifted", &other),
        &experts,
        &cfg.iteration,
        &m.probe_task,
        m.samples,
    )?;
    let dir = experiment_dir(&cfg);
    write_text(&dir.join("mmd.csv"), &mmd_csv(&rows))?;
    let cats: Vec<String> = rows.iter().map(|r| format!("{}/{}", r.representation, r.domain_b)).collect();
    write_text(
        &dir.join("mmd.svg"),
        &svg::bar_chart(
            "MMD x100",
            "MMD x100",
            &cats,
            &[("mmd2_x100".to_string(), rows.iter().map(|r| r.mmd2_x100).collect())],
        ),
    )
}

fn cmd_ablation(config: &Path) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let ds = load_dataset(&cfg)?;
    let experts = cfg.expert_bank(&ds.tasks)?;
    let runs = metric_ablation(&ds, &experts, &cfg.iteration, &MetricKind::ALL)?;
    write_text(&experiment_dir(&cfg).join("ablation.csv"), &comparison_csv(&runs, 1))
}

fn cmd_compare(runs: &[PathBuf], iteration: usize, out: Option<&Path>) -> Result<()> {
    let tables = runs
        .iter()
        .map(|r| {
            let label = r.file_name().map_or_else(|| r.display().to_string(), |n| n.to_string_lossy().into_owned());
            Ok((label, MetricTable::read_csv(&r.join("metrics.csv"))?))
        })
        .collect::<Result<Vec<_>>>()?;
    let csv = comparison_csv(&tables, iteration);
    match out {
        Some(p) => write_text(p, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

/// Dispatch a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenDataset { config, out, png } => cmd_gen_dataset(config, out, *png),
        Command::Run { common } => cmd_run(common),
        Command::Experiment { which } => match which {
            Experiment::NodeSweep { config } => cmd_node_sweep(config),
            Experiment::WeakExpert { config } => cmd_weak_expert(config),
            Experiment::Mmd { config } => cmd_mmd(config),
            Experiment::Ablation { config } => cmd_ablation(config),
        },
        Command::Compare { runs, iteration, out } => cmd_compare(runs, *iteration, out.as_deref()),
    }
}

/// Parse arguments, run, and map failures to exit codes
/// (0 ok, 2 config, 3 I/O, 4 numerics).
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build();
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 2;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
