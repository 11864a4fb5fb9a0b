use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::PredictionMap;

use super::metrics::candidate_variance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Expert,
    DirectEdge,
    AvgDirectEdges,
    MeanEnsemble,
    Cshift,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Expert,
        Method::DirectEdge,
        Method::AvgDirectEdges,
        Method::MeanEnsemble,
        Method::Cshift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Expert => "expert",
            Method::DirectEdge => "direct_edge",
            Method::AvgDirectEdges => "avg_direct_edges",
            Method::MeanEnsemble => "mean_ensemble",
            Method::Cshift => "cshift",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Format(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub iteration: usize,
    pub task: String,
    pub method: Method,
    pub l1_x100: f64,
}

/// Rows in insertion order; CSV output keeps that order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricTable {
    pub rows: Vec<MetricRow>,
}

pub const METRICS_HEADER: &str = "iteration,task,method,l1_x100";

impl MetricTable {
    pub fn push(&mut self, iteration: usize, task: &str, method: Method, l1_x100: f64) -> Result<()> {
        if !(l1_x100.is_finite() && l1_x100 >= 0.0) {
            return Err(Error::Numerics(format!("{task}/{}: L1 {l1_x100}", method.name())));
        }
        self.rows.push(MetricRow {
            iteration,
            task: task.to_string(),
            method,
            l1_x100,
        });
        Ok(())
    }

    pub fn get(&self, iteration: usize, task: &str, method: Method) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.iteration == iteration && r.task == task && r.method == method)
            .map(|r| r.l1_x100)
    }

    pub fn max_iteration(&self) -> Option<usize> {
        self.rows.iter().map(|r| r.iteration).max()
    }

    pub fn extend(&mut self, other: MetricTable) {
        self.rows.extend(other.rows);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(METRICS_HEADER);
        s.push('\n');
        for r in &self.rows {
            writeln!(s, "{},{},{},{:.6}", r.iteration, r.task, r.method.name(), r.l1_x100).expect("string write");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(METRICS_HEADER) {
            return Err(Error::Format("metrics.csv header mismatch".into()));
        }
        let mut table = MetricTable::default();
        for line in lines.filter(|l| !l.is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::Format(format!("bad metrics row `{line}`")));
            }
            let bad = |_| Error::Format(format!("bad metrics row `{line}`"));
            table.rows.push(MetricRow {
                iteration: f[0].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                task: f[1].to_string(),
                method: Method::parse(f[2])?,
                l1_x100: f[3].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            });
        }
        Ok(table)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_csv())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
        Self::from_csv(&text)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::write(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::write(path, e))
}

/// Test-set error of one trained edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMetric {
    pub src: String,
    pub dst: String,
    pub l1_x100: f64,
}

pub const EDGE_METRICS_HEADER: &str = "src,dst,l1_x100";

pub fn edge_metrics_csv(rows: &[EdgeMetric]) -> String {
    let mut s = String::from(EDGE_METRICS_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(s, "{},{},{:.6}", r.src, r.dst, r.l1_x100).expect("string write");
    }
    s
}

pub fn parse_edge_metrics(text: &str) -> Result<Vec<EdgeMetric>> {
    let mut lines = text.lines();
    if lines.next() != Some(EDGE_METRICS_HEADER) {
        return Err(Error::Format("edge metrics header mismatch".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            match f.as_slice() {
                [s, d, v] => Ok(EdgeMetric {
                    src: s.to_string(),
                    dst: d.to_string(),
                    l1_x100: v.parse().map_err(|_| Error::Format(format!("bad edge row `{line}`")))?,
                }),
                _ => Err(Error::Format(format!("bad edge row `{line}`"))),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeImprovement {
    pub src: String,
    pub dst: String,
    pub before: f64,
    pub after: f64,
    /// `100 · (before − after) / before`.
    pub improvement_pct: f64,
}

/// Per-edge relative L1 change between two iterations, best first.
pub fn edge_improvement_report(first: &[EdgeMetric], second: &[EdgeMetric]) -> Result<Vec<EdgeImprovement>> {
    let key = |e: &EdgeMetric| (e.src.clone(), e.dst.clone());
    let later: BTreeMap<_, f64> = second.iter().map(|e| (key(e), e.l1_x100)).collect();
    if later.len() != first.len() {
        return Err(Error::Config(format!(
            "edge sets differ: {} vs {} edges",
            first.len(),
            second.len()
        )));
    }
    let mut out = first
        .iter()
        .map(|e| {
            let after = *later
                .get(&key(e))
                .ok_or_else(|| Error::Config(format!("edge {}→{} missing from second run", e.src, e.dst)))?;
            let improvement_pct = if e.l1_x100 > 0.0 {
                100.0 * (e.l1_x100 - after) / e.l1_x100
            } else {
                0.0
            };
            Ok(EdgeImprovement {
                src: e.src.clone(),
                dst: e.dst.clone(),
                before: e.l1_x100,
                after,
                improvement_pct,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| {
        b.improvement_pct
            .total_cmp(&a.improvement_pct)
            .then_with(|| (&a.src, &a.dst).cmp(&(&b.src, &b.dst)))
    });
    Ok(out)
}

pub fn edge_improvement_csv(rows: &[EdgeImprovement]) -> String {
    let mut s = String::from("src,dst,l1_before,l1_after,improvement_pct\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{:.6},{:.6},{:.6}",
            r.src, r.dst, r.before, r.after, r.improvement_pct
        )
        .expect("string write");
    }
    s
}

/// Candidate maps of every (sample, destination) group at one training
/// checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSnapshot {
    pub iteration: usize,
    pub epoch: usize,
    pub groups: Vec<Vec<PredictionMap>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariancePoint {
    pub iteration: usize,
    pub epoch: usize,
    pub variance: f64,
}

/// Mean inter-candidate variance at each checkpoint.
pub fn consensus_variance_curve(snapshots: &[CandidateSnapshot]) -> Result<Vec<VariancePoint>> {
    snapshots
        .iter()
        .map(|s| {
            let mut total = 0.0;
            for g in &s.groups {
                total += candidate_variance(g)?;
            }
            let variance = if s.groups.is_empty() {
                0.0
            } else {
                total / s.groups.len() as f64
            };
            Ok(VariancePoint {
                iteration: s.iteration,
                epoch: s.epoch,
                variance,
            })
        })
        .collect()
}

pub fn variance_csv(points: &[VariancePoint]) -> String {
    let mut s = String::from("iteration,epoch,variance\n");
    for p in points {
        writeln!(s, "{},{},{:.9}", p.iteration, p.epoch, p.variance).expect("string write");
    }
    s
}

/// One row per (label, task) comparing methods at a given iteration, e.g.
/// for a metric ablation across several runs.
pub fn comparison_csv(runs: &[(String, MetricTable)], iteration: usize) -> String {
    let mut s = String::from("run,task,expert,mean_ensemble,cshift\n");
    for (label, table) in runs {
        let mut tasks: Vec<&str> = Vec::new();
        for r in &table.rows {
            if r.iteration == iteration && !tasks.contains(&r.task.as_str()) {
                tasks.push(&r.task);
            }
        }
        for t in tasks {
            let cell = |m: Method| table.get(iteration, t, m).map_or(String::new(), |v| format!("{v:.6}"));
            writeln!(
                s,
                "{label},{t},{},{},{}",
                cell(Method::Expert),
                cell(Method::MeanEnsemble),
                cell(Method::Cshift)
            )
            .expect("string write");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(s: &str, d: &str, v: f64) -> EdgeMetric {
        EdgeMetric {
            src: s.into(),
            dst: d.into(),
            l1_x100: v,
        }
    }

    #[test]
    fn improvement_by_hand() {
        let a = [edge("rgb", "depth", 10.0), edge("rgb", "seg", 20.0)];
        let b = [edge("rgb", "seg", 15.0), edge("rgb", "depth", 11.0)];
        let r = edge_improvement_report(&a, &b).unwrap();
        assert_eq!(r[0].dst, "seg");
        assert!((r[0].improvement_pct - 25.0).abs() < 1e-12);
        assert!((r[1].improvement_pct + 10.0).abs() < 1e-12);
    }

    #[test]
    fn identical_runs_improve_by_zero() {
        let a = [edge("rgb", "depth", 3.5), edge("depth", "rgb", 0.0)];
        for r in edge_improvement_report(&a, &a).unwrap() {
            assert_eq!(r.improvement_pct, 0.0);
        }
    }

    #[test]
    fn missing_edge_is_an_error() {
        let a = [edge("rgb", "depth", 3.5)];
        let b = [edge("rgb", "seg", 3.5)];
        assert!(matches!(edge_improvement_report(&a, &b), Err(Error::Config(_))));
    }

    #[test]
    fn metrics_csv_round_trip() {
        let mut t = MetricTable::default();
        t.push(0, "depth", Method::Expert, 8.5).unwrap();
        t.push(1, "depth", Method::Cshift, 6.25).unwrap();
        assert!(t.push(1, "seg", Method::Cshift, f64::NAN).is_err());
        let csv = t.to_csv();
        assert_eq!(csv, "iteration,task,method,l1_x100\n0,depth,expert,8.500000\n1,depth,cshift,6.250000\n");
        assert_eq!(MetricTable::from_csv(&csv).unwrap(), t);
        assert_eq!(t.to_csv(), csv);
        assert_eq!(t.max_iteration(), Some(1));
    }

    #[test]
    fn empty_tables_are_header_only() {
        assert_eq!(MetricTable::default().to_csv(), format!("{METRICS_HEADER}\n"));
        assert_eq!(edge_metrics_csv(&[]), format!("{EDGE_METRICS_HEADER}\n"));
        assert!(MetricTable::from_csv("nope\n").is_err());
    }

    #[test]
    fn edge_metrics_round_trip() {
        let rows = vec![edge("rgb", "depth", 1.25), edge("seg", "rgb", 0.5)];
        assert_eq!(parse_edge_metrics(&edge_metrics_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn variance_curve_averages_groups() {
        let a = PredictionMap::filled(2, 2, 1, 0.0);
        let b = PredictionMap::filled(2, 2, 1, 1.0);
        let snap = CandidateSnapshot {
            iteration: 1,
            epoch: 3,
            groups: vec![vec![a.clone(), b], vec![a.clone(), a]],
        };
        let pts = consensus_variance_curve(&[snap]).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].variance - 0.125).abs() < 1e-12);
    }

    #[test]
    fn comparison_rows() {
        let mut t = MetricTable::default();
        t.push(1, "depth", Method::Expert, 8.0).unwrap();
        t.push(1, "depth", Method::Cshift, 6.0).unwrap();
        let csv = comparison_csv(&[("l1".into(), t)], 1);
        assert_eq!(csv.lines().nth(1), Some("l1,depth,8.000000,,6.000000"));
    }
}
