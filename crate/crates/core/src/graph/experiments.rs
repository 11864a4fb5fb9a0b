//! Graph-level experiments: node addition, weak experts, domain gap.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consensus::MetricKind;
use crate::error::{Error, Result};
use crate::eval::{self, mmd2_unbiased, Bandwidth, MetricTable};
use crate::maps::SampleId;
use crate::rng;
use crate::synth::Corruption;
use crate::tasks;

use super::dataset::Dataset;
use super::driver::{
    ensemble_destination, evaluate_test, init_from_experts, store_l1, train_one_edge, train_phase, ExpertBank,
    IterationConfig,
};
use super::store::PseudoLabelStore;
use super::task_graph::TaskGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeOrdering {
    Random { seed: u64 },
    /// Best expert first.
    PerformanceBased,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodePoint {
    pub n_nodes: usize,
    /// Task added at this step (the rgb node at `n = 2`).
    pub added: String,
    pub cshift: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakExpertRow {
    pub strength: f64,
    pub expert: f64,
    pub mean: f64,
    pub cshift: f64,
    /// `100 · (expert − cshift) / expert`.
    pub boost_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmdRow {
    pub domain_a: String,
    pub domain_b: String,
    pub representation: String,
    pub mmd2_x100: f64,
}

fn index_of(dataset: &Dataset, name: &str) -> Result<usize> {
    dataset
        .task_index(name)
        .ok_or_else(|| Error::Config(format!("task `{name}` not in roster")))
}

/// First-iteration setup shared by the single-destination experiments:
/// expert labels on part 1 and test, and every in-edge of `d` trained.
fn train_in_edges(
    dataset: &Dataset,
    experts: &ExpertBank,
    cfg: &IterationConfig,
    d: usize,
) -> Result<(PseudoLabelStore, TaskGraph)> {
    let part = dataset
        .split
        .parts
        .first()
        .ok_or_else(|| Error::Config("dataset has no training part".into()))?;
    let mut ids = part.clone();
    ids.extend(&dataset.split.test);
    ids.sort();
    let store = init_from_experts(dataset, experts, &ids)?;
    let mut graph = TaskGraph::new(dataset.tasks.clone(), cfg.arch, cfg.train_seed);
    let sources: Vec<usize> = (0..dataset.tasks.len()).filter(|&s| s != d).collect();
    let outcomes = sources
        .par_iter()
        .map(|&s| train_one_edge(&graph, &store, part, &[], cfg, 1, s, d))
        .collect::<Result<Vec<_>>>()?;
    for o in outcomes {
        match o.model {
            Some(m) => graph.set_edge(o.src, o.dst, m)?,
            None => graph.mark_failed(o.src, o.dst),
        }
    }
    Ok((store, graph))
}

/// Mean test error of CShift and mean ensembles for destination `d` built
/// from `sources`.
fn score_destination(
    dataset: &Dataset,
    store: &PseudoLabelStore,
    graph: &TaskGraph,
    cfg: &IterationConfig,
    d: usize,
    sources: &[usize],
) -> Result<(f64, f64)> {
    let test = &dataset.split.test;
    let sel = cfg.selection();
    let scores = test
        .par_iter()
        .map(|&id| {
            let views = store
                .views(id)
                .ok_or_else(|| Error::Config(format!("sample {id} missing from store")))?;
            let e = ensemble_destination(&dataset.tasks, graph, views, id, d, sources, &sel)?;
            let gt = dataset.gt(id, d);
            Ok((eval::l1_x100(&e.cshift, gt)?, eval::l1_x100(&e.mean, gt)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let n = scores.len().max(1) as f64;
    Ok((
        scores.iter().map(|s| s.0).sum::<f64>() / n,
        scores.iter().map(|s| s.1).sum::<f64>() / n,
    ))
}

/// Grow the graph around `dest` one node at a time, starting from
/// `{dest, rgb}`, and score its ensembles at every size.
pub fn node_addition_experiment(
    dataset: &Dataset,
    experts: &ExpertBank,
    cfg: &IterationConfig,
    dest: &str,
    ordering: NodeOrdering,
) -> Result<Vec<NodePoint>> {
    let d = index_of(dataset, dest)?;
    let rgb = index_of(dataset, tasks::RGB)?;
    if d == rgb {
        return Err(Error::Config("node sweep destination must not be rgb".into()));
    }
    if dataset.tasks.len() < 3 {
        return Err(Error::Config("node sweep needs at least 3 tasks".into()));
    }
    let (store, graph) = train_in_edges(dataset, experts, cfg, d)?;
    let mut others: Vec<usize> = (0..dataset.tasks.len()).filter(|&s| s != d && s != rgb).collect();
    match ordering {
        NodeOrdering::Random { seed } => {
            others.shuffle(&mut rng::stream(seed, &[rng::label("node-order")]));
        }
        NodeOrdering::PerformanceBased => {
            let l1 = store_l1(dataset, &store, &dataset.split.test, false)?;
            others.sort_by(|&a, &b| l1[a].total_cmp(&l1[b]).then(a.cmp(&b)));
        }
    }
    let mut order = vec![rgb];
    order.extend(others);
    (1..=order.len())
        .map(|k| {
            let (cshift, mean) = score_destination(dataset, &store, &graph, cfg, d, &order[..k])?;
            Ok(NodePoint {
                n_nodes: k + 1,
                added: dataset.tasks[order[k - 1]].name.clone(),
                cshift,
                mean,
            })
        })
        .collect()
}

/// One CShift iteration on `dest` per expert strength, all other experts
/// unchanged.
pub fn weak_expert_sweep(
    dataset: &Dataset,
    experts: &ExpertBank,
    cfg: &IterationConfig,
    dest: &str,
    strengths: &[f64],
) -> Result<Vec<WeakExpertRow>> {
    let d = index_of(dataset, dest)?;
    if strengths.is_empty() {
        return Err(Error::Config("weak-expert sweep needs at least one strength".into()));
    }
    let all: Vec<usize> = (0..dataset.tasks.len()).collect();
    strengths
        .iter()
        .map(|&s| {
            let bank = experts.with_override(d, Corruption::structured(s))?;
            let (store, graph) = train_in_edges(dataset, &bank, cfg, d)?;
            let expert = store_l1(dataset, &store, &dataset.split.test, false)?[d];
            let (cshift, mean) = score_destination(dataset, &store, &graph, cfg, d, &all)?;
            let boost_pct = if expert > 0.0 {
                100.0 * (expert - cshift) / expert
            } else {
                0.0
            };
            Ok(WeakExpertRow {
                strength: s,
                expert,
                mean,
                cshift,
                boost_pct,
            })
        })
        .collect()
}

fn flat_rgb(dataset: &Dataset, ids: &[SampleId]) -> Result<Vec<Vec<f64>>> {
    let rgb = index_of(dataset, tasks::RGB)?;
    Ok(ids.iter().map(|&id| dataset.gt(id, rgb).to_f64()).collect())
}

/// Domain gap between two datasets at pixel level and through the
/// penultimate layer of an rgb→`probe_task` edge trained on `a`.
///
/// Each domain contributes `n` samples per side; the within-domain row
/// compares two disjoint halves of `a`.
pub fn mmd_experiment(
    a: (&str, &Dataset),
    b: (&str, &Dataset),
    experts: &ExpertBank,
    cfg: &IterationConfig,
    probe_task: &str,
    n: usize,
) -> Result<Vec<MmdRow>> {
    let (name_a, da) = a;
    let (name_b, db) = b;
    if da.len() < 2 * n || db.len() < n || n < 2 {
        return Err(Error::Config(format!(
            "MMD needs {} samples in `{name_a}` and {n} in `{name_b}`",
            2 * n
        )));
    }
    let ids_a1: Vec<SampleId> = (0..n as u32).map(SampleId).collect();
    let ids_a2: Vec<SampleId> = (n as u32..2 * n as u32).map(SampleId).collect();
    let ids_b: Vec<SampleId> = (0..n as u32).map(SampleId).collect();

    let raw_a1 = flat_rgb(da, &ids_a1)?;
    let raw_a2 = flat_rgb(da, &ids_a2)?;
    let raw_b = flat_rgb(db, &ids_b)?;

    let d = index_of(da, probe_task)?;
    let rgb = index_of(da, tasks::RGB)?;
    let (_, graph) = train_in_edges(da, experts, cfg, d)?;
    let model = graph
        .edge(rgb, d)
        .filter(|_| graph.is_active(rgb, d))
        .ok_or_else(|| Error::Numerics("probe edge diverged".into()))?;
    let feats = |ds: &Dataset, ids: &[SampleId]| -> Result<Vec<Vec<f64>>> {
        ids.iter().map(|&id| model.features(ds.gt(id, rgb))).collect()
    };
    let feat_a1 = feats(da, &ids_a1)?;
    let feat_a2 = feats(da, &ids_a2)?;
    let feat_b = feats(db, &ids_b)?;

    let row = |x: &[Vec<f64>], y: &[Vec<f64>], other: &str, repr: &str| -> Result<MmdRow> {
        Ok(MmdRow {
            domain_a: name_a.to_string(),
            domain_b: other.to_string(),
            representation: repr.to_string(),
            mmd2_x100: 100.0 * mmd2_unbiased(x, y, Bandwidth::MedianHeuristic)?,
        })
    };
    Ok(vec![
        row(&raw_a1, &raw_a2, name_a, "raw")?,
        row(&raw_a1, &raw_b, name_b, "raw")?,
        row(&feat_a1, &feat_a2, name_a, "features")?,
        row(&feat_a1, &feat_b, name_b, "features")?,
    ])
}

/// Train every edge once on part 1, then score iteration-1 ensembles under
/// each metric. Returns one labelled table per metric.
pub fn metric_ablation(
    dataset: &Dataset,
    experts: &ExpertBank,
    cfg: &IterationConfig,
    metrics: &[MetricKind],
) -> Result<Vec<(String, MetricTable)>> {
    let part = dataset
        .split
        .parts
        .first()
        .ok_or_else(|| Error::Config("dataset has no training part".into()))?;
    let test = &dataset.split.test;
    let mut ids = part.clone();
    ids.extend(test);
    ids.sort();
    let store = init_from_experts(dataset, experts, &ids)?;
    let expert_l1 = store_l1(dataset, &store, test, cfg.align_depth)?;
    let mut graph = TaskGraph::new(dataset.tasks.clone(), cfg.arch, cfg.train_seed);
    train_phase(&mut graph, &store, part, &[], cfg, 1)?;
    metrics
        .iter()
        .map(|&m| {
            let mut c = cfg.clone();
            c.metric = m;
            let (table, _) = evaluate_test(dataset, &graph, &store, test, &c, 1, &expert_l1)?;
            Ok((m.name().to_string(), table))
        })
        .collect()
}

pub fn node_curve_csv(ordering: &str, points: &[NodePoint]) -> String {
    let mut s = String::from("ordering,n_nodes,added,cshift,mean_ensemble\n");
    for p in points {
        writeln!(s, "{ordering},{},{},{:.6},{:.6}", p.n_nodes, p.added, p.cshift, p.mean).expect("string write");
    }
    s
}

pub fn weak_expert_csv(rows: &[WeakExpertRow]) -> String {
    let mut s = String::from("strength,expert,mean_ensemble,cshift,boost_pct\n");
    for r in rows {
        writeln!(
            s,
            "{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.strength, r.expert, r.mean, r.cshift, r.boost_pct
        )
        .expect("string write");
    }
    s
}

pub fn mmd_csv(rows: &[MmdRow]) -> String {
    let mut s = String::from("domain_a,domain_b,representation,mmd2_x100\n");
    for r in rows {
        writeln!(s, "{},{},{},{:.6}", r.domain_a, r.domain_b, r.representation, r.mmd2_x100).expect("string write");
    }
    s
}
