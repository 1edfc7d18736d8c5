//! Scores at a grid of observation times after publication.

use serde::{Deserialize, Serialize};

use super::metrics::mean;
use super::{confusion, run_folds, EvalConfig, FoldRun, TestRecord};
use crate::error::{Error, Result};
use crate::osmn::Corpus;

fn at(run: &FoldRun, t: f64) -> Vec<&TestRecord> {
    run.records.iter().filter(|r| r.snapshot_hours == Some(t)).collect()
}

pub const DEFAULT_SNAPSHOTS: [f64; 6] = [0.0, 1.0, 6.0, 24.0, 72.0, 168.0];

/// One system over all snapshots; each F1 and accuracy is the mean over folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalSeries {
    pub system: String,
    pub f1: Vec<f64>,
    pub accuracy: Vec<f64>,
    /// Mean model reliability over test documents; base models only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_reliability: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalReport {
    pub config: EvalConfig,
    pub snapshot_hours: Vec<f64>,
    pub series: Vec<TemporalSeries>,
}

/// Long-format row for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalRow {
    pub snapshot_hours: f64,
    pub system: String,
    pub f1: f64,
    pub accuracy: f64,
    pub mean_reliability: Option<f64>,
}

impl TemporalReport {
    pub fn series_for(&self, system: &str) -> Option<&TemporalSeries> {
        self.series.iter().find(|s| s.system == system)
    }

    pub fn rows(&self) -> Vec<TemporalRow> {
        let mut rows = Vec::new();
        for (i, &t) in self.snapshot_hours.iter().enumerate() {
            for s in &self.series {
                rows.push(TemporalRow {
                    snapshot_hours: t,
                    system: s.system.clone(),
                    f1: s.f1[i],
                    accuracy: s.accuracy[i],
                    mean_reliability: s.mean_reliability.as_ref().map(|r| r[i]),
                });
            }
        }
        rows
    }
}

/// Trains once per fold and scores the test documents at
/// `publish_time + t` for every `t` in `snapshot_hours`.
pub fn temporal(corpus: &Corpus, config: &EvalConfig, snapshot_hours: &[f64]) -> Result<TemporalReport> {
    if snapshot_hours.is_empty() {
        return Err(Error::Config("at least one snapshot is required".into()));
    }
    if let Some(h) = snapshot_hours.iter().find(|h| !(**h >= 0.0 && h.is_finite())) {
        return Err(Error::Config(format!("snapshot hours must be non-negative, got {h}")));
    }
    let snapshots: Vec<Option<f64>> = snapshot_hours.iter().map(|h| Some(*h)).collect();
    let runs = run_folds(corpus, config, &snapshots)?;

    let mut series = Vec::new();
    for system in config.systems() {
        let mut f1 = Vec::with_capacity(snapshot_hours.len());
        let mut accuracy = Vec::with_capacity(snapshot_hours.len());
        let mut reliability = Vec::with_capacity(snapshot_hours.len());
        for &t in snapshot_hours {
            let mut fold_f1 = Vec::with_capacity(runs.len());
            let mut fold_acc = Vec::with_capacity(runs.len());
            let mut rs = Vec::new();
            for run in &runs {
                let records = at(run, t);
                let c = confusion(records.iter().copied(), &system, config.threshold)?;
                fold_f1.push(c.f1());
                fold_acc.push(c.accuracy());
                rs.extend(records.iter().filter_map(|r| r.reliabilities.get(&system).copied()));
            }
            f1.push(mean(&fold_f1));
            accuracy.push(mean(&fold_acc));
            reliability.push(mean(&rs));
        }
        let is_model = config.models.contains(&system);
        series.push(TemporalSeries {
            system,
            f1,
            accuracy,
            mean_reliability: is_model.then_some(reliability),
        });
    }
    Ok(TemporalReport {
        config: config.clone(),
        snapshot_hours: snapshot_hours.to_vec(),
        series,
    })
}
