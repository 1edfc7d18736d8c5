//! Reliability factors and the piecewise-constant lookup that scores them.
//!
//! Each numeric factor is binned by a sorted list of lower bounds: a value
//! falls in the last bin whose `from` is `<=` the value. Integer factors use
//! the integer ranges as-is (`26` opens the `26 - 100` bin); fractional
//! factors close the gaps between listed ranges at the midpoint
//! (`document_age` 0.08 / 0.09 days splits at 0.085).

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorName {
    WordCount,
    PublisherType,
    DocumentCount,
    ItemCount,
    ItemPerUser,
    DocumentAge,
}

impl FactorName {
    pub const ALL: [FactorName; 6] = [
        FactorName::WordCount,
        FactorName::PublisherType,
        FactorName::DocumentCount,
        FactorName::ItemCount,
        FactorName::ItemPerUser,
        FactorName::DocumentAge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FactorName::WordCount => "word_count",
            FactorName::PublisherType => "publisher_type",
            FactorName::DocumentCount => "document_count",
            FactorName::ItemCount => "item_count",
            FactorName::ItemPerUser => "item_per_user",
            FactorName::DocumentAge => "document_age",
        }
    }
}

impl fmt::Display for FactorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FactorName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FactorName::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown reliability factor `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PublisherType {
    New,
    Existing,
}

/// The measured value of a factor. Serializes as a bare number or string.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FactorValue {
    Count(u64),
    Real(f64),
    Publisher(PublisherType),
}

impl fmt::Display for FactorValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorValue::Count(n) => write!(f, "{n}"),
            FactorValue::Real(x) => write!(f, "{}", (x * 100.0).round() / 100.0),
            FactorValue::Publisher(PublisherType::New) => f.write_str("new"),
            FactorValue::Publisher(PublisherType::Existing) => f.write_str("existing"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityFactor {
    pub name: FactorName,
    pub value: FactorValue,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub from: f64,
    pub score: f64,
}

const fn bin(from: f64, score: f64) -> Bin {
    Bin { from, score }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PublisherTypeScores {
    pub new: f64,
    pub existing: f64,
}

/// Bin edges and scores for every reliability factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityTable {
    pub word_count: Vec<Bin>,
    pub publisher_type: PublisherTypeScores,
    pub document_count: Vec<Bin>,
    pub item_count: Vec<Bin>,
    pub item_per_user: Vec<Bin>,
    /// In days.
    pub document_age: Vec<Bin>,
}

impl Default for ReliabilityTable {
    fn default() -> Self {
        let counts = vec![bin(0.0, 0.1), bin(2.0, 0.4), bin(11.0, 0.5), bin(51.0, 1.0)];
        ReliabilityTable {
            word_count: vec![
                bin(0.0, 0.0),
                bin(26.0, 0.4),
                bin(101.0, 0.6),
                bin(301.0, 0.8),
                bin(601.0, 0.6),
            ],
            publisher_type: PublisherTypeScores {
                new: 0.1,
                existing: 1.0,
            },
            document_count: counts.clone(),
            item_count: counts,
            item_per_user: vec![bin(0.0, 0.1), bin(2.0, 0.2), bin(4.0, 0.5), bin(9.0, 1.0)],
            document_age: vec![bin(0.0, 0.01), bin(0.085, 0.1), bin(1.5, 0.4), bin(7.5, 1.0)],
        }
    }
}

impl ReliabilityTable {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: ReliabilityTable = serde_json::from_str(&raw)?;
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        for name in FactorName::ALL {
            if let Some(bins) = self.bins(name) {
                if bins.is_empty() || bins[0].from != 0.0 {
                    return Err(Error::Config(format!("{name}: first bin must start at 0")));
                }
                if bins.windows(2).any(|w| w[0].from >= w[1].from) {
                    return Err(Error::Config(format!("{name}: bin edges must increase strictly")));
                }
                if bins.iter().any(|b| !(0.0..=1.0).contains(&b.score)) {
                    return Err(Error::Config(format!("{name}: scores must lie in [0, 1]")));
                }
            }
        }
        let p = self.publisher_type;
        if !(0.0..=1.0).contains(&p.new) || !(0.0..=1.0).contains(&p.existing) {
            return Err(Error::Config("publisher_type: scores must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Numeric bins for `name`; `None` for the categorical publisher_type.
    pub fn bins(&self, name: FactorName) -> Option<&[Bin]> {
        match name {
            FactorName::WordCount => Some(&self.word_count),
            FactorName::PublisherType => None,
            FactorName::DocumentCount => Some(&self.document_count),
            FactorName::ItemCount => Some(&self.item_count),
            FactorName::ItemPerUser => Some(&self.item_per_user),
            FactorName::DocumentAge => Some(&self.document_age),
        }
    }

    /// Index of the bin holding `value`, for numeric factors.
    pub fn bin_index(&self, name: FactorName, value: FactorValue) -> Result<Option<usize>> {
        let Some(bins) = self.bins(name) else {
            return Ok(None);
        };
        let x = numeric(name, value)?;
        Ok(Some(bins.iter().rposition(|b| b.from <= x).unwrap_or(0)))
    }

    pub fn score(&self, name: FactorName, value: FactorValue) -> Result<f64> {
        if name == FactorName::PublisherType {
            return match value {
                FactorValue::Publisher(PublisherType::New) => Ok(self.publisher_type.new),
                FactorValue::Publisher(PublisherType::Existing) => Ok(self.publisher_type.existing),
                other => Err(Error::FactorDomain {
                    factor: name.as_str(),
                    reason: format!("expected `new` or `existing`, got {other:?}"),
                }),
            };
        }
        let index = self.bin_index(name, value)?.expect("numeric factor");
        Ok(self.bins(name).expect("numeric factor")[index].score)
    }

    /// Scores `value` and packages it as a [`ReliabilityFactor`].
    pub fn factor(&self, name: FactorName, value: FactorValue) -> Result<ReliabilityFactor> {
        Ok(ReliabilityFactor {
            name,
            value,
            score: self.score(name, value)?,
        })
    }
}

fn numeric(name: FactorName, value: FactorValue) -> Result<f64> {
    let x = match (name, value) {
        (_, FactorValue::Count(n)) => n as f64,
        (FactorName::ItemPerUser | FactorName::DocumentAge, FactorValue::Real(x)) => x,
        (_, FactorValue::Real(x)) if x.fract() == 0.0 => x,
        (_, other) => {
            return Err(Error::FactorDomain {
                factor: name.as_str(),
                reason: format!("expected a count, got {other:?}"),
            })
        }
    };
    if x.is_nan() || x < 0.0 {
        return Err(Error::FactorDomain {
            factor: name.as_str(),
            reason: format!("must be a non-negative number, got {x}"),
        });
    }
    Ok(x)
}

/// Scores a factor against the built-in table.
pub fn reliability_lookup(name: FactorName, value: FactorValue) -> Result<f64> {
    ReliabilityTable::default().score(name, value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_count_examples() {
        let wc = |n| reliability_lookup(FactorName::WordCount, FactorValue::Count(n)).unwrap();
        assert_eq!(wc(542), 0.8);
        assert_eq!(wc(10), 0.0);
        assert_eq!(wc(700), 0.6);
    }

    #[test]
    fn categorical_publisher_type() {
        let pt = |t| reliability_lookup(FactorName::PublisherType, FactorValue::Publisher(t)).unwrap();
        assert_eq!(pt(PublisherType::New), 0.1);
        assert_eq!(pt(PublisherType::Existing), 1.0);
        assert!(reliability_lookup(FactorName::PublisherType, FactorValue::Count(3)).is_err());
    }

    #[test]
    fn negative_and_nan_rejected() {
        assert!(reliability_lookup(FactorName::DocumentAge, FactorValue::Real(-0.5)).is_err());
        assert!(reliability_lookup(FactorName::ItemPerUser, FactorValue::Real(f64::NAN)).is_err());
        assert!(reliability_lookup(FactorName::WordCount, FactorValue::Real(3.5)).is_err());
    }

    #[test]
    fn ten_day_old_document() {
        assert_eq!(
            reliability_lookup(FactorName::DocumentAge, FactorValue::Real(10.0)).unwrap(),
            1.0
        );
    }

    #[test]
    fn table_round_trips_and_validates() {
        let table = ReliabilityTable::default();
        table.validate().unwrap();
        let json = serde_json::to_string(&table).unwrap();
        assert_eq!(serde_json::from_str::<ReliabilityTable>(&json).unwrap(), table);

        let mut broken = table.clone();
        broken.item_count.swap(1, 2);
        assert!(broken.validate().is_err());
    }

    #[test]
    fn factor_value_wire_format() {
        assert_eq!(serde_json::to_string(&FactorValue::Count(542)).unwrap(), "542");
        assert_eq!(
            serde_json::to_string(&FactorValue::Publisher(PublisherType::New)).unwrap(),
            "\"new\""
        );
        assert_eq!(serde_json::from_str::<FactorValue>("0.25").unwrap(), FactorValue::Real(0.25));
        assert_eq!(serde_json::from_str::<FactorValue>("7").unwrap(), FactorValue::Count(7));
    }
}
