//! Initialization, one consensus-shift iteration, and the full run.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consensus::{cshift_select, Candidate, mean_ensemble, CandidateSet, KernelKind, MetricKind, WeightInput};
use crate::edge::{train_edge_probed, Arch, EdgeModel, Probe, TrainConfig, TrainReport};
use crate::error::{Error, Result};
use crate::eval::{
    self, consensus_variance_curve, edge_improvement_csv, edge_improvement_report, edge_metrics_csv, svg,
    variance_csv, write_text, CandidateSnapshot, EdgeMetric, Method, MetricTable, VariancePoint,
};
use crate::maps::{PredictionMap, SampleId, TaskSpec};
use crate::rng;
use crate::synth::{Corruption, ExpertSimulator};
use crate::tasks;

use super::dataset::Dataset;
use super::store::PseudoLabelStore;
use super::task_graph::{ordered_pairs, EdgePredictor, TaskGraph};

/// Share of edges allowed to diverge (after one retry) before an
/// iteration is abandoned.
pub const MAX_FAILED_EDGE_SHARE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterationConfig {
    pub n_iters: usize,
    pub metric: MetricKind,
    pub kernel: KernelKind,
    pub weight_input: WeightInput,
    pub retrain_from_scratch: bool,
    pub arch: Arch,
    pub train: TrainConfig,
    pub train_seed: u64,
    /// Keep the rgb node at the input image instead of its ensemble.
    pub pin_rgb_input: bool,
    /// Histogram-align depth predictions to ground truth before scoring.
    pub align_depth: bool,
    /// Test samples tracked every epoch for the candidate-variance curve.
    pub probe_samples: usize,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            n_iters: 2,
            metric: MetricKind::Perceptual,
            kernel: KernelKind::Identity,
            weight_input: WeightInput::Similarity,
            retrain_from_scratch: true,
            arch: Arch::PatchLinear,
            train: TrainConfig::default(),
            train_seed: 0,
            pin_rgb_input: false,
            align_depth: false,
            probe_samples: 4,
        }
    }
}

impl IterationConfig {
    pub fn selection(&self) -> Selection {
        Selection {
            metric: self.metric,
            kernel: self.kernel,
            input: self.weight_input,
        }
    }
}

/// How a candidate set is reduced to one view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub metric: MetricKind,
    pub kernel: KernelKind,
    pub input: WeightInput,
}

/// One simulated expert per non-rgb task.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertBank {
    experts: Vec<Option<ExpertSimulator>>,
}

impl ExpertBank {
    pub fn new(tasks: &[TaskSpec], experts: Vec<ExpertSimulator>) -> Result<Self> {
        let mut slots: Vec<Option<ExpertSimulator>> = vec![None; tasks.len()];
        for e in experts {
            let i = tasks
                .iter()
                .position(|t| *t == e.task)
                .ok_or_else(|| Error::Config(format!("expert for unknown task `{}`", e.task)))?;
            slots[i] = Some(e);
        }
        for (t, s) in tasks.iter().zip(&slots) {
            if t.name != tasks::RGB && s.is_none() {
                return Err(Error::Config(format!("no expert for task `{}`", t.name)));
            }
        }
        Ok(Self { experts: slots })
    }

    /// Same corruption for every task; per-task seeds derived from `seed`.
    pub fn uniform(tasks: &[TaskSpec], corruption: Corruption, seed: u64) -> Result<Self> {
        Self::with_corruptions(tasks, |_| corruption, seed)
    }

    pub fn with_corruptions(tasks: &[TaskSpec], corruption: impl Fn(&TaskSpec) -> Corruption, seed: u64) -> Result<Self> {
        let experts = tasks
            .iter()
            .filter(|t| t.name != tasks::RGB)
            .map(|t| ExpertSimulator::new(t.clone(), corruption(t), seed))
            .collect::<Result<Vec<_>>>()?;
        Self::new(tasks, experts)
    }

    /// Copy with one task's corruption replaced.
    pub fn with_override(&self, task: usize, corruption: Corruption) -> Result<Self> {
        let mut out = self.clone();
        let e = out.experts[task]
            .as_mut()
            .ok_or_else(|| Error::Config("the rgb node has no expert".into()))?;
        corruption.validate()?;
        e.corruption = corruption;
        Ok(out)
    }

    pub fn get(&self, task: usize) -> Option<&ExpertSimulator> {
        self.experts.get(task).and_then(Option::as_ref)
    }
}

/// Expert predictions for every task of every id; the rgb node holds the
/// input image itself.
pub fn init_from_experts(dataset: &Dataset, experts: &ExpertBank, ids: &[SampleId]) -> Result<PseudoLabelStore> {
    let tasks = &dataset.tasks;
    let rows = ids
        .par_iter()
        .map(|&id| {
            tasks
                .iter()
                .enumerate()
                .map(|(ti, t)| {
                    let gt = dataset.gt(id, ti);
                    if t.name == tasks::RGB {
                        return Ok(gt.clone());
                    }
                    experts
                        .get(ti)
                        .ok_or_else(|| Error::Config(format!("no expert for task `{}`", t.name)))?
                        .predict(gt, t, id)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut store = PseudoLabelStore::new(tasks.clone(), 0);
    for (id, views) in ids.iter().zip(rows) {
        store.insert(*id, views)?;
    }
    Ok(store)
}

/// Everything computed for one destination of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DestEnsemble {
    pub cshift: PredictionMap,
    pub mean: PredictionMap,
    /// Mean of the edge predictions without the current view.
    pub avg_edges: Option<PredictionMap>,
    /// Edge predictions by source index.
    pub edges: Vec<(usize, PredictionMap)>,
}

/// Build N(X_d) from `sources` and reduce it.
pub fn ensemble_destination(
    tasks: &[TaskSpec],
    predictor: &dyn EdgePredictor,
    views: &[PredictionMap],
    id: SampleId,
    d: usize,
    sources: &[usize],
    sel: &Selection,
) -> Result<DestEnsemble> {
    let mut edges = Vec::with_capacity(sources.len());
    for &s in sources {
        if s == d {
            continue;
        }
        if let Some(p) = predictor.predict(s, d, id, &views[s])? {
            edges.push((s, p));
        }
    }
    let named = edges.iter().map(|(s, m)| (tasks[*s].name.clone(), m.clone())).collect();
    let set = CandidateSet::from_edges(tasks[d].clone(), named, views[d].clone())?;
    let cshift = cshift_select(&set, sel.metric, sel.kernel, sel.input)?;
    let mean = mean_ensemble(&set)?;
    let avg_edges = if edges.is_empty() {
        None
    } else {
        let only = edges
            .iter()
            .map(|(s, m)| Candidate {
                tag: format!("edge:{}", tasks[*s].name),
                map: m.clone(),
            })
            .collect();
        Some(mean_ensemble(&CandidateSet::new(tasks[d].clone(), only, 0)?)?)
    };
    Ok(DestEnsemble {
        cshift,
        mean,
        avg_edges,
        edges,
    })
}

/// Replace every view of every id by its selection ensemble. Reads only
/// `store`; the result carries the next iteration tag.
pub fn ensemble_phase(
    predictor: &dyn EdgePredictor,
    store: &PseudoLabelStore,
    ids: &[SampleId],
    sel: &Selection,
    pin_rgb: bool,
) -> Result<PseudoLabelStore> {
    let tasks = store.tasks();
    let all: Vec<usize> = (0..tasks.len()).collect();
    let rows = ids
        .par_iter()
        .map(|&id| {
            let views = store
                .views(id)
                .ok_or_else(|| Error::Config(format!("sample {id} missing from store")))?;
            (0..tasks.len())
                .map(|d| {
                    if pin_rgb && tasks[d].name == tasks::RGB {
                        Ok(views[d].clone())
                    } else {
                        Ok(ensemble_destination(tasks, predictor, views, id, d, &all, sel)?.cshift)
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut next = PseudoLabelStore::new(tasks.to_vec(), store.iteration + 1);
    for (id, views) in ids.iter().zip(rows) {
        next.insert(*id, views)?;
    }
    Ok(next)
}

/// Per-edge training outcome.
#[derive(Debug, Clone)]
pub struct EdgeOutcome {
    pub src: usize,
    pub dst: usize,
    /// `None` when training diverged twice.
    pub model: Option<EdgeModel>,
    pub report: Option<TrainReport>,
    pub retried: bool,
}

pub fn edge_seed(cfg: &IterationConfig, iteration: usize, src: &TaskSpec, dst: &TaskSpec) -> u64 {
    rng::derive_seed(
        cfg.train_seed,
        &[iteration as u64, rng::label(&src.name), rng::label(&dst.name)],
    )
}

/// Train edge `(s, d)` on `part`, inputs and targets read from `store`.
/// Diverging runs are retried once at a tenth of the learning rate.
#[allow(clippy::too_many_arguments)]
pub fn train_one_edge(
    graph: &TaskGraph,
    store: &PseudoLabelStore,
    part: &[SampleId],
    probe_ids: &[SampleId],
    cfg: &IterationConfig,
    iteration: usize,
    s: usize,
    d: usize,
) -> Result<EdgeOutcome> {
    let tasks = store.tasks();
    let inputs = part.iter().map(|&i| store.get(i, s).cloned()).collect::<Result<Vec<_>>>()?;
    let targets = part.iter().map(|&i| store.get(i, d).cloned()).collect::<Result<Vec<_>>>()?;
    let probe_inputs = probe_ids
        .iter()
        .map(|&i| store.get(i, s).cloned())
        .collect::<Result<Vec<_>>>()?;
    let epochs: Vec<usize> = if probe_inputs.is_empty() {
        Vec::new()
    } else {
        (1..=cfg.train.epochs).collect()
    };
    let seed = edge_seed(cfg, iteration, &tasks[s], &tasks[d]);
    let start = match graph.edge(s, d) {
        Some(m) if !cfg.retrain_from_scratch => m.clone(),
        _ => EdgeModel::new(tasks[s].clone(), tasks[d].clone(), cfg.arch, seed),
    };
    let probe = Probe {
        inputs: &probe_inputs,
        epochs: &epochs,
    };
    match train_edge_probed(start.clone(), &inputs, &targets, &cfg.train, seed, probe) {
        Ok((m, r)) => Ok(EdgeOutcome {
            src: s,
            dst: d,
            model: Some(m),
            report: Some(r),
            retried: false,
        }),
        Err(Error::Numerics(msg)) => {
            log::warn!("{msg}; retrying at lr/10");
            let mut slow = cfg.train.clone();
            slow.sgd.lr /= 10.0;
            match train_edge_probed(start, &inputs, &targets, &slow, seed, probe) {
                Ok((m, r)) => Ok(EdgeOutcome {
                    src: s,
                    dst: d,
                    model: Some(m),
                    report: Some(r),
                    retried: true,
                }),
                Err(Error::Numerics(msg)) => {
                    log::warn!("{msg}; edge dropped");
                    Ok(EdgeOutcome {
                        src: s,
                        dst: d,
                        model: None,
                        report: None,
                        retried: true,
                    })
                }
                Err(e) => Err(e),
            }
        }
        Err(e) => Err(e),
    }
}

/// Train every edge of `graph` from the frozen `store` and install the
/// results; diverged edges are marked failed.
pub fn train_phase(
    graph: &mut TaskGraph,
    store: &PseudoLabelStore,
    part: &[SampleId],
    probe_ids: &[SampleId],
    cfg: &IterationConfig,
    iteration: usize,
) -> Result<Vec<EdgeOutcome>> {
    let pairs = ordered_pairs(graph.tasks().len());
    let frozen: &TaskGraph = graph;
    let outcomes = pairs
        .par_iter()
        .map(|&(s, d)| train_one_edge(frozen, store, part, probe_ids, cfg, iteration, s, d))
        .collect::<Result<Vec<_>>>()?;
    let n_failed = outcomes.iter().filter(|o| o.model.is_none()).count();
    if n_failed as f64 > MAX_FAILED_EDGE_SHARE * pairs.len() as f64 {
        return Err(Error::Numerics(format!(
            "iteration {iteration}: {n_failed} of {} edges diverged",
            pairs.len()
        )));
    }
    for o in &outcomes {
        match &o.model {
            Some(m) => graph.set_edge(o.src, o.dst, m.clone())?,
            None => graph.mark_failed(o.src, o.dst),
        }
    }
    Ok(outcomes)
}

/// Result of one consensus-shift iteration.
#[derive(Debug, Clone)]
pub struct IterationOutput {
    pub store: PseudoLabelStore,
    pub outcomes: Vec<EdgeOutcome>,
    /// Candidate maps of the probe samples after every epoch.
    pub snapshots: Vec<CandidateSnapshot>,
}

/// Train every edge on `part` from a frozen snapshot of `store`, then
/// refresh every id of `store` with the selection ensemble.
pub fn run_iteration(
    graph: &mut TaskGraph,
    store: &PseudoLabelStore,
    part: &[SampleId],
    probe_ids: &[SampleId],
    cfg: &IterationConfig,
) -> Result<IterationOutput> {
    let iteration = store.iteration + 1;
    let ids = store.ids();
    if !store.is_complete(part) || !store.is_complete(probe_ids) {
        return Err(Error::Config("store does not cover the training part".into()));
    }
    if graph.tasks() != store.tasks() {
        return Err(Error::Config("graph and store rosters differ".into()));
    }
    let outcomes = train_phase(graph, store, part, probe_ids, cfg, iteration)?;
    let snapshots = probe_snapshots(store, probe_ids, &outcomes, iteration)?;
    let next = ensemble_phase(graph, store, &ids, &cfg.selection(), cfg.pin_rgb_input)?;
    Ok(IterationOutput {
        store: next,
        outcomes,
        snapshots,
    })
}

fn probe_snapshots(
    store: &PseudoLabelStore,
    probe_ids: &[SampleId],
    outcomes: &[EdgeOutcome],
    iteration: usize,
) -> Result<Vec<CandidateSnapshot>> {
    let epochs: Vec<usize> = outcomes
        .iter()
        .find_map(|o| o.report.as_ref())
        .map(|r| r.probes.iter().map(|p| p.epoch).collect())
        .unwrap_or_default();
    let n_tasks = store.tasks().len();
    epochs
        .iter()
        .enumerate()
        .map(|(k, &epoch)| {
            let mut groups = Vec::new();
            for (pi, &id) in probe_ids.iter().enumerate() {
                for d in 0..n_tasks {
                    let mut g: Vec<PredictionMap> = outcomes
                        .iter()
                        .filter(|o| o.dst == d)
                        .filter_map(|o| o.report.as_ref())
                        .filter_map(|r| r.probes.get(k))
                        .map(|p| p.outputs[pi].clone())
                        .collect();
                    g.push(store.get(id, d)?.clone());
                    groups.push(g);
                }
            }
            Ok(CandidateSnapshot {
                iteration,
                epoch,
                groups,
            })
        })
        .collect()
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub metrics: MetricTable,
    /// Per-edge test error, one list per completed iteration.
    pub edge_metrics: Vec<Vec<EdgeMetric>>,
    pub variance: Vec<VariancePoint>,
    pub store: PseudoLabelStore,
    pub graph: TaskGraph,
}

fn score(pred: &PredictionMap, gt: &PredictionMap, task: &TaskSpec, align_depth: bool) -> Result<f64> {
    if align_depth && task.name == tasks::DEPTH {
        let aligned = eval::histogram_specification(pred, gt, 256)?;
        eval::l1_x100(&aligned, gt)
    } else {
        eval::l1_x100(pred, gt)
    }
}

/// Test-set evaluation of the ensembles built from `store` with `graph`:
/// the method rows of `iteration` plus per-edge errors.
pub fn evaluate_test(
    dataset: &Dataset,
    graph: &TaskGraph,
    store: &PseudoLabelStore,
    test: &[SampleId],
    cfg: &IterationConfig,
    iteration: usize,
    expert_l1: &[f64],
) -> Result<(MetricTable, Vec<EdgeMetric>)> {
    let tasks = &dataset.tasks;
    let rgb = dataset
        .task_index(tasks::RGB)
        .ok_or_else(|| Error::Config("roster must include rgb".into()))?;
    let all: Vec<usize> = (0..tasks.len()).collect();
    let sel = cfg.selection();
    // per sample: per destination [direct, avg_edges, mean, cshift] + edge scores
    type Row = (Vec<[Option<f64>; 4]>, BTreeMap<(usize, usize), f64>);
    let rows = test
        .par_iter()
        .map(|&id| -> Result<Row> {
            let views = store
                .views(id)
                .ok_or_else(|| Error::Config(format!("test sample {id} missing from store")))?;
            let mut per_dest = Vec::with_capacity(tasks.len());
            let mut edges = BTreeMap::new();
            for d in 0..tasks.len() {
                let gt = dataset.gt(id, d);
                let ens = ensemble_destination(tasks, graph, views, id, d, &all, &sel)?;
                let direct = if d == rgb {
                    None
                } else {
                    graph
                        .predict(rgb, d, id, dataset.gt(id, rgb))?
                        .map(|p| score(&p, gt, &tasks[d], cfg.align_depth))
                        .transpose()?
                };
                let avg = ens
                    .avg_edges
                    .as_ref()
                    .map(|p| score(p, gt, &tasks[d], cfg.align_depth))
                    .transpose()?;
                for (s, p) in &ens.edges {
                    edges.insert((*s, d), score(p, gt, &tasks[d], cfg.align_depth)?);
                }
                per_dest.push([
                    direct,
                    avg,
                    Some(score(&ens.mean, gt, &tasks[d], cfg.align_depth)?),
                    Some(score(&ens.cshift, gt, &tasks[d], cfg.align_depth)?),
                ]);
            }
            Ok((per_dest, edges))
        })
        .collect::<Result<Vec<Row>>>()?;

    let n = test.len() as f64;
    let mut table = MetricTable::default();
    let methods = [Method::DirectEdge, Method::AvgDirectEdges, Method::MeanEnsemble, Method::Cshift];
    for (d, t) in tasks.iter().enumerate() {
        table.push(iteration, &t.name, Method::Expert, expert_l1[d])?;
        for (k, m) in methods.iter().enumerate() {
            let vals: Vec<f64> = rows.iter().filter_map(|r| r.0[d][k]).collect();
            if vals.len() == rows.len() && !vals.is_empty() {
                table.push(iteration, &t.name, *m, vals.iter().sum::<f64>() / n)?;
            }
        }
    }
    let mut edge_rows = Vec::new();
    for (s, d) in ordered_pairs(tasks.len()) {
        let vals: Vec<f64> = rows.iter().filter_map(|r| r.1.get(&(s, d)).copied()).collect();
        if vals.len() == rows.len() && !vals.is_empty() {
            edge_rows.push(EdgeMetric {
                src: tasks[s].name.clone(),
                dst: tasks[d].name.clone(),
                l1_x100: vals.iter().sum::<f64>() / n,
            });
        }
    }
    Ok((table, edge_rows))
}

/// Mean test error of the store's current views, per task.
pub fn store_l1(dataset: &Dataset, store: &PseudoLabelStore, ids: &[SampleId], align_depth: bool) -> Result<Vec<f64>> {
    dataset
        .tasks
        .iter()
        .enumerate()
        .map(|(d, t)| {
            let mut total = 0.0;
            for &id in ids {
                total += score(store.get(id, d)?, dataset.gt(id, d), t, align_depth)?;
            }
            Ok(total / ids.len().max(1) as f64)
        })
        .collect()
}

/// Where a run writes its artifacts.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn iter_dir(&self, k: usize) -> PathBuf {
        self.root.join(format!("iter{k}"))
    }

    fn write_iteration(
        &self,
        k: usize,
        store: &PseudoLabelStore,
        graph: Option<&TaskGraph>,
        table: &MetricTable,
        edges: &[EdgeMetric],
    ) -> Result<()> {
        let dir = self.iter_dir(k);
        store.save(&dir.join("labels"))?;
        if let Some(g) = graph {
            g.save(&dir.join("edges"))?;
            write_text(&dir.join("edge_metrics.csv"), &edge_metrics_csv(edges))?;
        }
        table.write_csv(&dir.join("metrics.csv"))
    }

    /// Root-level reports: all metrics, variance curve, edge improvements
    /// and plots.
    pub fn write_summary(&self, result: &RunSummary<'_>) -> Result<()> {
        result.metrics.write_csv(&self.root.join("metrics.csv"))?;
        if !result.variance.is_empty() {
            write_text(&self.root.join("variance.csv"), &variance_csv(result.variance))?;
            let mut series: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
            for p in result.variance {
                series.entry(p.iteration).or_default().push((p.epoch as f64, p.variance));
            }
            let series: Vec<(String, Vec<(f64, f64)>)> =
                series.into_iter().map(|(k, v)| (format!("iteration {k}"), v)).collect();
            write_text(
                &self.root.join("variance.svg"),
                &svg::line_chart("Mean candidate variance", "epoch", "variance", &series),
            )?;
        }
        if result.edge_metrics.len() >= 2 {
            let n = result.edge_metrics.len();
            let rows = edge_improvement_report(&result.edge_metrics[n - 2], &result.edge_metrics[n - 1])?;
            write_text(&self.root.join("edge_improvement.csv"), &edge_improvement_csv(&rows))?;
        }
        if let Some(last) = result.metrics.max_iteration().filter(|&k| k > 0) {
            let mut tasks: Vec<String> = Vec::new();
            for r in &result.metrics.rows {
                if !tasks.contains(&r.task) {
                    tasks.push(r.task.clone());
                }
            }
            let series: Vec<(String, Vec<f64>)> = [Method::Expert, Method::MeanEnsemble, Method::Cshift]
                .iter()
                .map(|m| {
                    (
                        m.name().to_string(),
                        tasks
                            .iter()
                            .map(|t| result.metrics.get(last, t, *m).unwrap_or(0.0))
                            .collect(),
                    )
                })
                .collect();
            write_text(
                &self.root.join("metrics.svg"),
                &svg::bar_chart(&format!("Test L1x100 after iteration {last}"), "L1x100", &tasks, &series),
            )?;
        }
        Ok(())
    }
}

/// Borrowed view of a run's reports.
pub struct RunSummary<'a> {
    pub metrics: &'a MetricTable,
    pub edge_metrics: &'a [Vec<EdgeMetric>],
    pub variance: &'a [VariancePoint],
}

/// Experts, then `n_iters` consensus-shift iterations on parts `1..=n_iters`.
/// Pool and test samples are refreshed together; metrics come from the test
/// split. With `out`, every iteration is written as soon as it finishes so
/// a failure keeps earlier results.
pub fn run_cshift(
    dataset: &Dataset,
    experts: &ExpertBank,
    cfg: &IterationConfig,
    n_iters: usize,
    out: Option<&RunDir>,
) -> Result<RunResult> {
    if n_iters > dataset.split.parts.len() {
        return Err(Error::Config(format!(
            "{n_iters} iterations but only {} dataset parts",
            dataset.split.parts.len()
        )));
    }
    let test = dataset.split.test.clone();
    let mut ids = dataset.split.pool_of(n_iters);
    ids.extend(&test);
    ids.sort();
    let mut store = init_from_experts(dataset, experts, &ids)?;
    let expert_l1 = store_l1(dataset, &store, &test, cfg.align_depth)?;
    let mut metrics = MetricTable::default();
    for (d, t) in dataset.tasks.iter().enumerate() {
        metrics.push(0, &t.name, Method::Expert, expert_l1[d])?;
    }
    let mut graph = TaskGraph::new(dataset.tasks.clone(), cfg.arch, cfg.train_seed);
    if let Some(dir) = out {
        dir.write_iteration(0, &store, None, &metrics, &[])?;
    }
    let probe_ids: Vec<SampleId> = test.iter().copied().take(cfg.probe_samples).collect();
    let mut edge_metrics = Vec::new();
    let mut snapshots = Vec::new();

    for k in 1..=n_iters {
        log::info!("iteration {k}/{n_iters}: training {} edges", graph.edge_count());
        let step = run_iteration(&mut graph, &store, &dataset.split.parts[k - 1], &probe_ids, cfg);
        let step = match step {
            Ok(s) => s,
            Err(e) => {
                if let Some(dir) = out {
                    dir.write_summary(&RunSummary {
                        metrics: &metrics,
                        edge_metrics: &edge_metrics,
                        variance: &consensus_variance_curve(&snapshots)?,
                    })?;
                }
                return Err(e);
            }
        };
        let (table, edges) = evaluate_test(dataset, &graph, &store, &test, cfg, k, &expert_l1)?;
        log::info!(
            "iteration {k}: {}",
            dataset
                .tasks
                .iter()
                .filter_map(|t| table.get(k, &t.name, Method::Cshift).map(|v| format!("{}={v:.2}", t.name)))
                .collect::<Vec<_>>()
                .join(" ")
        );
        store = step.store;
        snapshots.extend(step.snapshots);
        if let Some(dir) = out {
            dir.write_iteration(k, &store, Some(&graph), &table, &edges)?;
        }
        metrics.extend(table);
        edge_metrics.push(edges);
    }
    let variance = consensus_variance_curve(&snapshots)?;
    if let Some(dir) = out {
        dir.write_summary(&RunSummary {
            metrics: &metrics,
            edge_metrics: &edge_metrics,
            variance: &variance,
        })?;
    }
    Ok(RunResult {
        metrics,
        edge_metrics,
        variance,
        store,
        graph,
    })
}
