//! Turns a document into its enriched form: one [`Information`] bundle per
//! [`InformationKind`], each paired with a reliability score that averages
//! the scores of its reliability factors.
//!
//! What counts as "known" (existing publishers, users with history, labels
//! visible in publisher histories) is passed in through [`KnownEntities`],
//! so cross-validation folds stay leak-free.

mod reliability;

pub use reliability::{
    reliability_lookup, Bin, FactorName, FactorValue, PublisherType, PublisherTypeScores,
    ReliabilityFactor, ReliabilityTable,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::osmn::{Corpus, Label, Timestamp, SECONDS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Network {
    Content,
    Context,
}

impl Network {
    pub fn as_str(self) -> &'static str {
        match self {
            Network::Content => "content",
            Network::Context => "context",
        }
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InformationKind {
    Words,
    PublisherHistory,
    UserHistory,
}

impl InformationKind {
    pub const ALL: [InformationKind; 3] = [
        InformationKind::Words,
        InformationKind::PublisherHistory,
        InformationKind::UserHistory,
    ];

    pub fn network(self) -> Network {
        match self {
            InformationKind::Words | InformationKind::PublisherHistory => Network::Content,
            InformationKind::UserHistory => Network::Context,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InformationKind::Words => "words",
            InformationKind::PublisherHistory => "publisher_history",
            InformationKind::UserHistory => "user_history",
        }
    }
}

impl fmt::Display for InformationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub doc_id: String,
    /// Present only for documents whose label is visible to training.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserEngagement {
    pub user_id: String,
    pub items: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Words {
        tokens: BTreeMap<String, u32>,
    },
    PublisherHistory {
        publisher_id: String,
        documents: Vec<HistoryEntry>,
    },
    UserHistory {
        engagements: Vec<UserEngagement>,
    },
}

impl Payload {
    pub fn kind(&self) -> InformationKind {
        match self {
            Payload::Words { .. } => InformationKind::Words,
            Payload::PublisherHistory { .. } => InformationKind::PublisherHistory,
            Payload::UserHistory { .. } => InformationKind::UserHistory,
        }
    }
}

/// A feature bundle and its reliability score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Information {
    #[serde(flatten)]
    pub payload: Payload,
    pub factors: Vec<ReliabilityFactor>,
    pub reliability: f64,
}

impl Information {
    /// Reliability is the mean of the factor scores.
    pub fn new(payload: Payload, factors: Vec<ReliabilityFactor>) -> Self {
        let reliability = if factors.is_empty() {
            0.0
        } else {
            factors.iter().map(|f| f.score).sum::<f64>() / factors.len() as f64
        };
        Information {
            payload,
            factors,
            reliability,
        }
    }

    pub fn kind(&self) -> InformationKind {
        self.payload.kind()
    }

    pub fn factor(&self, name: FactorName) -> Option<&ReliabilityFactor> {
        self.factors.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichedDocument {
    pub doc_id: String,
    pub observe_at: Timestamp,
    /// Exactly one per kind, in [`InformationKind::ALL`] order.
    pub informations: Vec<Information>,
}

impl EnrichedDocument {
    pub fn information(&self, kind: InformationKind) -> Option<&Information> {
        self.informations.iter().find(|i| i.kind() == kind)
    }

    pub fn reliability(&self, kind: InformationKind) -> Option<f64> {
        self.information(kind).map(|i| i.reliability)
    }
}

/// Entities observed in the training data.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnownEntities {
    /// Documents whose labels may appear in publisher histories.
    pub documents: BTreeSet<String>,
    pub publishers: BTreeSet<String>,
    pub users: BTreeSet<String>,
}

impl KnownEntities {
    /// Derives the known sets from the training documents and every user
    /// who engaged with them.
    pub fn from_training(corpus: &Corpus, training_doc_ids: &[&str]) -> Result<Self> {
        let mut known = KnownEntities::default();
        for id in training_doc_ids {
            let doc = corpus.document(id)?;
            known.documents.insert(doc.doc_id.clone());
            known.publishers.insert(doc.publisher_id.clone());
        }
        known.users = corpus.engaged_users(training_doc_ids.iter().copied());
        Ok(known)
    }
}

/// Lowercased maximal alphanumeric runs.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

pub fn word_count(text: &str) -> usize {
    tokenize(text).count()
}

/// Enrichment over one corpus with a fixed reliability table and known set.
#[derive(Debug, Clone, Copy)]
pub struct Enricher<'a> {
    corpus: &'a Corpus,
    table: &'a ReliabilityTable,
    known: &'a KnownEntities,
}

impl<'a> Enricher<'a> {
    pub fn new(corpus: &'a Corpus, table: &'a ReliabilityTable, known: &'a KnownEntities) -> Self {
        Enricher { corpus, table, known }
    }

    pub fn corpus(&self) -> &'a Corpus {
        self.corpus
    }

    pub fn table(&self) -> &'a ReliabilityTable {
        self.table
    }

    pub fn enrich(&self, doc_id: &str, observe_at: Timestamp) -> Result<EnrichedDocument> {
        let doc = self.corpus.document(doc_id)?;
        if observe_at < doc.publish_time {
            return Err(Error::ObservationBeforePublish {
                doc_id: doc_id.to_string(),
                observe_at,
                publish_time: doc.publish_time,
            });
        }
        let table = self.table;

        let mut tokens = BTreeMap::new();
        let mut n_words = 0u64;
        for token in tokenize(&doc.text) {
            *tokens.entry(token).or_insert(0u32) += 1;
            n_words += 1;
        }
        let words = Information::new(
            Payload::Words { tokens },
            vec![table.factor(FactorName::WordCount, FactorValue::Count(n_words))?],
        );

        let history = self.corpus.publisher_history(&doc.publisher_id, doc_id)?;
        let publisher_type = if self.known.publishers.contains(&doc.publisher_id) {
            PublisherType::Existing
        } else {
            PublisherType::New
        };
        let publisher = Information::new(
            Payload::PublisherHistory {
                publisher_id: doc.publisher_id.clone(),
                documents: history
                    .iter()
                    .map(|d| HistoryEntry {
                        doc_id: d.doc_id.clone(),
                        label: d.label.filter(|_| self.known.documents.contains(&d.doc_id)),
                    })
                    .collect(),
            },
            vec![
                table.factor(FactorName::PublisherType, FactorValue::Publisher(publisher_type))?,
                table.factor(
                    FactorName::DocumentCount,
                    FactorValue::Count(history.len() as u64),
                )?,
            ],
        );

        let items = self.corpus.items_for_document(doc_id, observe_at)?;
        let mut per_user: BTreeMap<&str, u32> = BTreeMap::new();
        for item in &items {
            *per_user.entry(item.user_id.as_str()).or_insert(0) += 1;
        }
        let item_per_user = if per_user.is_empty() {
            0.0
        } else {
            items.len() as f64 / per_user.len() as f64
        };
        let age_days = (observe_at as f64 - doc.publish_time as f64) / SECONDS_PER_DAY;
        let users = Information::new(
            Payload::UserHistory {
                engagements: per_user
                    .into_iter()
                    .map(|(user_id, items)| UserEngagement {
                        user_id: user_id.to_string(),
                        items,
                    })
                    .collect(),
            },
            vec![
                table.factor(FactorName::ItemCount, FactorValue::Count(items.len() as u64))?,
                table.factor(FactorName::ItemPerUser, FactorValue::Real(item_per_user))?,
                table.factor(FactorName::DocumentAge, FactorValue::Real(age_days))?,
            ],
        );

        Ok(EnrichedDocument {
            doc_id: doc_id.to_string(),
            observe_at,
            informations: vec![words, publisher, users],
        })
    }

    pub fn enrich_batch<S: AsRef<str>>(
        &self,
        doc_ids: &[S],
        observe_at: Timestamp,
    ) -> Result<Vec<EnrichedDocument>> {
        doc_ids
            .iter()
            .map(|id| self.enrich(id.as_ref(), observe_at))
            .collect()
    }

    /// Enriches each document at its own observation time.
    pub fn enrich_each<S: AsRef<str>>(
        &self,
        doc_ids: &[S],
        observe_at: impl Fn(Timestamp) -> Timestamp,
    ) -> Result<Vec<EnrichedDocument>> {
        doc_ids
            .iter()
            .map(|id| {
                let publish = self.corpus.document(id.as_ref())?.publish_time;
                self.enrich(id.as_ref(), observe_at(publish))
            })
            .collect()
    }
}

/// Single-document convenience over the built-in table.
pub fn enrich(
    corpus: &Corpus,
    doc_id: &str,
    observe_at: Timestamp,
    known: &KnownEntities,
) -> Result<EnrichedDocument> {
    Enricher::new(corpus, &ReliabilityTable::default(), known).enrich(doc_id, observe_at)
}
