//! F1 on reliable versus unreliable test documents for one factor.

use serde::{Deserialize, Serialize};

use super::{confusion, run_folds, EvalConfig, TestRecord};
use crate::enricher::{FactorName, FactorValue, PublisherType, ReliabilityTable};
use crate::error::{Error, Result};
use crate::osmn::Corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Reliable,
    Unreliable,
}

/// Side of the experiment a factor value falls on. Publishers split into
/// existing (reliable) and new; numeric factors put the top bin on the
/// reliable side, the bottom bin on the unreliable side and drop the rest.
pub fn partition_of(table: &ReliabilityTable, factor: FactorName, value: FactorValue) -> Result<Option<Partition>> {
    if factor == FactorName::PublisherType {
        return match value {
            FactorValue::Publisher(PublisherType::Existing) => Ok(Some(Partition::Reliable)),
            FactorValue::Publisher(PublisherType::New) => Ok(Some(Partition::Unreliable)),
            other => Err(Error::FactorDomain {
                factor: factor.as_str(),
                reason: format!("expected new or existing, got {other}"),
            }),
        };
    }
    let last = table.bins(factor).map_or(0, |b| b.len().saturating_sub(1));
    if last == 0 {
        return Err(Error::Config(format!("{factor} has a single bin and cannot be split")));
    }
    Ok(match table.bin_index(factor, value)? {
        Some(0) => Some(Partition::Unreliable),
        Some(i) if i == last => Some(Partition::Reliable),
        _ => None,
    })
}

/// Competition ranks in ascending order: equal values share the smaller
/// rank and the next distinct value skips ahead.
pub fn rank_ascending(values: &[f64]) -> Vec<usize> {
    values
        .iter()
        .map(|v| 1 + values.iter().filter(|w| *w < v).count())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationRow {
    pub system: String,
    pub f1_reliable: f64,
    pub f1_unreliable: f64,
    /// `f1_reliable - f1_unreliable`.
    pub diff: f64,
    pub abs_diff: f64,
    /// Ascending by `diff`.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationReport {
    pub factor: FactorName,
    pub config: EvalConfig,
    pub n_reliable: usize,
    pub n_unreliable: usize,
    pub rows: Vec<DegradationRow>,
}

impl DegradationReport {
    pub fn row(&self, system: &str) -> Option<&DegradationRow> {
        self.rows.iter().find(|r| r.system == system)
    }
}

pub fn degrade(corpus: &Corpus, config: &EvalConfig, factor: FactorName) -> Result<DegradationReport> {
    let runs = run_folds(corpus, config, &[config.test_at_hours])?;
    let mut reliable: Vec<&TestRecord> = Vec::new();
    let mut unreliable: Vec<&TestRecord> = Vec::new();
    for record in runs.iter().flat_map(|r| &r.records) {
        let f = record
            .factors
            .iter()
            .find(|f| f.name == factor)
            .ok_or_else(|| Error::Evaluation(format!("test record lacks factor {factor}")))?;
        match partition_of(&config.table, factor, f.value)? {
            Some(Partition::Reliable) => reliable.push(record),
            Some(Partition::Unreliable) => unreliable.push(record),
            None => {}
        }
    }
    for (side, records) in [("reliable", &reliable), ("unreliable", &unreliable)] {
        if records.is_empty() {
            return Err(Error::Evaluation(format!(
                "degradation on {factor}: the {side} partition is empty"
            )));
        }
    }

    let mut rows = Vec::new();
    for system in config.systems() {
        let f1_reliable = confusion(reliable.iter().copied(), &system, config.threshold)?.f1();
        let f1_unreliable = confusion(unreliable.iter().copied(), &system, config.threshold)?.f1();
        let diff = f1_reliable - f1_unreliable;
        rows.push(DegradationRow {
            system,
            f1_reliable,
            f1_unreliable,
            diff,
            abs_diff: diff.abs(),
            rank: 0,
        });
    }
    let diffs: Vec<f64> = rows.iter().map(|r| r.diff).collect();
    for (row, rank) in rows.iter_mut().zip(rank_ascending(&diffs)) {
        row.rank = rank;
    }
    Ok(DegradationReport {
        factor,
        config: config.clone(),
        n_reliable: reliable.len(),
        n_unreliable: unreliable.len(),
        rows,
    })
}
