//! Cross-validated experiments: plain evaluation, reliability degradation
//! and temporal snapshots.
//!
//! Every experiment shares one runner. For each fold the ensemble is trained
//! on the training slice only, with the known publishers, users and labels
//! derived from that slice, and the validation slice sets the BMAcc weights.
//! Test documents are then enriched at each requested observation time and
//! scored by every base model and every aggregator. Folds run in parallel;
//! results are collected in fold order so reports are reproducible.

mod degrade;
pub mod folds;
pub mod metrics;
mod temporal;

pub use degrade::{degrade, partition_of, rank_ascending, DegradationReport, DegradationRow, Partition};
pub use temporal::{temporal, TemporalReport, TemporalRow, TemporalSeries, DEFAULT_SNAPSHOTS};

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregator::Strategy;
use crate::enricher::{ReliabilityFactor, ReliabilityTable};
use crate::error::{Error, Result};
use crate::models::{standard_model, STANDARD_MODELS};
use crate::osmn::{Corpus, Label};
use crate::pipeline::{observe_time, Ensemble};
use folds::{fold_splits, FoldSplit, Split};
use metrics::{mean, std_dev, Confusion};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub folds: usize,
    pub split: Split,
    pub seed: u64,
    pub aggregators: Vec<Strategy>,
    pub models: Vec<String>,
    /// Probability at or above which a document is called false.
    pub threshold: f64,
    /// Training documents are enriched this many hours after publication;
    /// `None` shows every item.
    pub train_at_hours: Option<f64>,
    /// Observation time for test documents in `evaluate` and `degrade`.
    pub test_at_hours: Option<f64>,
    pub table: ReliabilityTable,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: 10,
            split: Split::default(),
            seed: 0,
            aggregators: Strategy::ALL.to_vec(),
            models: STANDARD_MODELS.iter().map(|s| s.to_string()).collect(),
            threshold: 0.5,
            train_at_hours: None,
            test_at_hours: None,
            table: ReliabilityTable::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds == 0 {
            return Err(Error::Config("folds must be positive".into()));
        }
        self.split.validate()?;
        self.table.validate()?;
        if self.models.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        for (i, id) in self.models.iter().enumerate() {
            standard_model(id)?;
            if self.models[..i].contains(id) {
                return Err(Error::Config(format!("model `{id}` listed twice")));
            }
        }
        for (i, s) in self.aggregators.iter().enumerate() {
            if self.aggregators[..i].contains(s) {
                return Err(Error::Config(format!("aggregator `{s}` listed twice")));
            }
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config("threshold must lie in [0, 1]".into()));
        }
        for h in [self.train_at_hours, self.test_at_hours].into_iter().flatten() {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(Error::Config(format!("observation hours must be non-negative, got {h}")));
            }
        }
        Ok(())
    }

    /// Base models first, then one system per aggregator.
    pub fn systems(&self) -> Vec<String> {
        self.models
            .iter()
            .cloned()
            .chain(self.aggregators.iter().map(|s| system_name(*s)))
            .collect()
    }
}

/// Report name of an aggregated system.
pub fn system_name(strategy: Strategy) -> String {
    format!("mapx-{strategy}")
}

/// One test document scored by every system at one observation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub fold: usize,
    pub doc_id: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_hours: Option<f64>,
    /// System name to probability of falsehood.
    pub probs: BTreeMap<String, f64>,
    /// Base model to model reliability.
    pub reliabilities: BTreeMap<String, f64>,
    #[serde(skip)]
    pub factors: Vec<ReliabilityFactor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct FoldRun {
    pub fold: usize,
    pub validation_scores: BTreeMap<String, Option<f64>>,
    pub records: Vec<TestRecord>,
}

fn run_fold(corpus: &Corpus, config: &EvalConfig, split: &FoldSplit, snapshots: &[Option<f64>]) -> Result<FoldRun> {
    if config.aggregators.contains(&Strategy::Bmacc) && split.validation.is_empty() {
        return Err(Error::Evaluation("bmacc needs a nonempty validation slice".into()));
    }
    let ensemble = Ensemble::train(
        corpus,
        &config.table,
        &config.models,
        &split.train,
        &split.validation,
        config.train_at_hours,
        config.threshold,
    )?;
    let enricher = ensemble.enricher(corpus, &config.table);

    let mut records = Vec::with_capacity(snapshots.len() * split.test.len());
    for &snapshot in snapshots {
        for doc_id in &split.test {
            let doc = corpus.document(doc_id)?;
            let label = doc
                .label
                .ok_or_else(|| Error::Evaluation(format!("document `{doc_id}` has no label")))?;
            let enriched = enricher.enrich(doc_id, observe_time(doc.publish_time, snapshot))?;
            let predictions = ensemble.predict(&enriched)?;
            let mut probs = BTreeMap::new();
            let mut reliabilities = BTreeMap::new();
            for p in &predictions {
                probs.insert(p.model_id.clone(), p.prob_false);
                reliabilities.insert(p.model_id.clone(), p.model_reliability);
            }
            for &strategy in &config.aggregators {
                let result = ensemble.aggregate(strategy, &predictions)?;
                probs.insert(system_name(strategy), result.prob_false);
            }
            records.push(TestRecord {
                fold: split.fold,
                doc_id: doc_id.clone(),
                label,
                snapshot_hours: snapshot,
                probs,
                reliabilities,
                factors: enriched
                    .informations
                    .iter()
                    .flat_map(|i| i.factors.iter().cloned())
                    .collect(),
            });
        }
    }
    Ok(FoldRun {
        fold: split.fold,
        validation_scores: ensemble
            .descriptors()
            .iter()
            .map(|d| (d.model_id.clone(), d.validation_score))
            .collect(),
        records,
    })
}

pub(crate) fn run_folds(corpus: &Corpus, config: &EvalConfig, snapshots: &[Option<f64>]) -> Result<Vec<FoldRun>> {
    config.validate()?;
    let ids: Vec<String> = corpus.labeled_documents().map(|d| d.doc_id.clone()).collect();
    let splits = fold_splits(&ids, config.folds, config.split, config.seed)?;
    splits
        .par_iter()
        .map(|split| run_fold(corpus, config, split, snapshots))
        .collect()
}

/// Confusion matrix of `system` over `records`.
pub fn confusion<'a>(
    records: impl IntoIterator<Item = &'a TestRecord>,
    system: &str,
    threshold: f64,
) -> Result<Confusion> {
    let mut c = Confusion::default();
    for r in records {
        let p = r.probs.get(system).ok_or_else(|| Error::UnknownId {
            entity: "system",
            id: system.to_string(),
        })?;
        c.add(r.label, *p >= threshold);
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemMetrics {
    pub system: String,
    pub n: u64,
    pub f1: f64,
    pub accuracy: f64,
}

impl SystemMetrics {
    fn from_confusion(system: &str, c: Confusion) -> Self {
        SystemMetrics {
            system: system.to_string(),
            n: c.total(),
            f1: c.f1(),
            accuracy: c.accuracy(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub validation_scores: BTreeMap<String, Option<f64>>,
    pub metrics: Vec<SystemMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub system: String,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    /// Over all test records of all folds at once.
    pub pooled_f1: f64,
    pub pooled_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub systems: Vec<String>,
    pub folds: Vec<FoldMetrics>,
    pub summary: Vec<SystemSummary>,
    pub records: Vec<TestRecord>,
}

/// Flat row of `metrics.csv`: one per fold and system, then `mean` and
/// `std` rows per system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub fold: String,
    pub system: String,
    pub f1: f64,
    pub accuracy: f64,
}

impl EvalReport {
    pub fn summary_for(&self, system: &str) -> Option<&SystemSummary> {
        self.summary.iter().find(|s| s.system == system)
    }

    pub fn rows(&self) -> Vec<MetricsRow> {
        let mut rows: Vec<MetricsRow> = self
            .folds
            .iter()
            .flat_map(|f| {
                f.metrics.iter().map(move |m| MetricsRow {
                    fold: f.fold.to_string(),
                    system: m.system.clone(),
                    f1: m.f1,
                    accuracy: m.accuracy,
                })
            })
            .collect();
        for s in &self.summary {
            rows.push(MetricsRow {
                fold: "mean".into(),
                system: s.system.clone(),
                f1: s.f1_mean,
                accuracy: s.accuracy_mean,
            });
            rows.push(MetricsRow {
                fold: "std".into(),
                system: s.system.clone(),
                f1: s.f1_std,
                accuracy: s.accuracy_std,
            });
        }
        rows
    }
}

/// Cross-validated accuracy and F1 of every base model and aggregator.
pub fn evaluate(corpus: &Corpus, config: &EvalConfig) -> Result<EvalReport> {
    let runs = run_folds(corpus, config, &[config.test_at_hours])?;
    let systems = config.systems();
    let mut folds = Vec::with_capacity(runs.len());
    for run in &runs {
        let metrics = systems
            .iter()
            .map(|s| Ok(SystemMetrics::from_confusion(s, confusion(&run.records, s, config.threshold)?)))
            .collect::<Result<Vec<_>>>()?;
        folds.push(FoldMetrics {
            fold: run.fold,
            validation_scores: run.validation_scores.clone(),
            metrics,
        });
    }
    let records: Vec<TestRecord> = runs.into_iter().flat_map(|r| r.records).collect();
    let summary = systems
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let f1s: Vec<f64> = folds.iter().map(|f| f.metrics[i].f1).collect();
            let accs: Vec<f64> = folds.iter().map(|f| f.metrics[i].accuracy).collect();
            let pooled = confusion(&records, s, config.threshold)?;
            Ok(SystemSummary {
                system: s.clone(),
                f1_mean: mean(&f1s),
                f1_std: std_dev(&f1s),
                accuracy_mean: mean(&accs),
                accuracy_std: std_dev(&accs),
                pooled_f1: pooled.f1(),
                pooled_accuracy: pooled.accuracy(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        config: config.clone(),
        systems,
        folds,
        summary,
        records,
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        writer.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Evaluation(format!("{}: {other:?}", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SynthConfig};

    fn small_config() -> EvalConfig {
        EvalConfig {
            folds: 3,
            ..EvalConfig::default()
        }
    }

    #[test]
    fn deterministic_report() {
        let corpus = generate_synthetic(&SynthConfig {
            n_documents: 90,
            n_users: 50,
            seed: 11,
            ..SynthConfig::default()
        })
        .unwrap();
        let a = evaluate(&corpus, &small_config()).unwrap();
        let b = evaluate(&corpus, &small_config()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.systems.len(), 7);
        assert_eq!(a.folds.len(), 3);
        assert_eq!(a.records.len(), 3 * 18);
        assert_eq!(a.rows().len(), 3 * 7 + 2 * 7);
    }

    #[test]
    fn config_validation() {
        let bad = [
            EvalConfig { folds: 0, ..EvalConfig::default() },
            EvalConfig { models: vec![], ..EvalConfig::default() },
            EvalConfig { models: vec!["nope".into()], ..EvalConfig::default() },
            EvalConfig { threshold: 2.0, ..EvalConfig::default() },
            EvalConfig { aggregators: vec![Strategy::Av, Strategy::Av], ..EvalConfig::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
        EvalConfig::default().validate().unwrap();
    }

    #[test]
    fn too_few_documents() {
        let corpus = generate_synthetic(&SynthConfig {
            n_documents: 5,
            ..SynthConfig::default()
        })
        .unwrap();
        assert!(matches!(evaluate(&corpus, &EvalConfig::default()), Err(Error::Evaluation(_))));
    }
}
