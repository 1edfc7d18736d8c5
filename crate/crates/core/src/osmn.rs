//! In-memory social media network: the publisher→document content network
//! and the user/item context network, with time-filtered views.
//!
//! Publishers and users are never supplied directly; they are derived from
//! the foreign keys on documents and items when the [`Corpus`] is built.
//! Every collection is keyed by identifier in a `BTreeMap`, so iteration
//! order is canonical regardless of input order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute time in seconds since the Unix epoch.
pub type Timestamp = i64;

/// Observation point later than any representable event.
pub const END_OF_TIME: Timestamp = Timestamp::MAX;

pub const SECONDS_PER_HOUR: f64 = 3600.0;
pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// `publish_time + hours`, saturating at [`END_OF_TIME`].
pub fn hours_after(publish_time: Timestamp, hours: f64) -> Timestamp {
    if !hours.is_finite() {
        return END_OF_TIME;
    }
    let offset = (hours * SECONDS_PER_HOUR).round();
    if offset >= (END_OF_TIME - publish_time) as f64 {
        END_OF_TIME
    } else {
        publish_time + offset as Timestamp
    }
}

/// Binary ground truth, encoded on disk as `0` (true news) or `1` (false news).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    TrueNews,
    FalseNews,
}

impl Label {
    pub fn is_false(self) -> bool {
        self == Label::FalseNews
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::TrueNews => Label::FalseNews,
            Label::FalseNews => Label::TrueNews,
        }
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, Self::Error> {
        match value {
            0 => Ok(Label::TrueNews),
            1 => Ok(Label::FalseNews),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl From<Label> for u8 {
    fn from(label: Label) -> u8 {
        match label {
            Label::TrueNews => 0,
            Label::FalseNews => 1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::TrueNews => "true-news",
            Label::FalseNews => "false-news",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub publisher_id: String,
    pub text: String,
    pub publish_time: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Post,
    Share,
    Like,
    Comment,
}

/// Primary or secondary content a user attaches to a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub item_id: String,
    pub doc_id: String,
    pub user_id: String,
    pub timestamp: Timestamp,
    pub kind: ItemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_item_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Publisher {
    pub publisher_id: String,
    /// Sorted by identifier.
    pub document_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct User {
    pub user_id: String,
    /// Sorted by identifier.
    pub item_ids: Vec<String>,
}

/// The content and context networks over one set of documents.
///
/// Immutable once built; all accessors borrow.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    publishers: BTreeMap<String, Publisher>,
    documents: BTreeMap<String, Document>,
    users: BTreeMap<String, User>,
    items: BTreeMap<String, Item>,
    // doc_id -> item ids ordered by (timestamp, item_id)
    timeline: BTreeMap<String, Vec<String>>,
}

impl Corpus {
    /// Builds both networks, deriving publishers and users from foreign keys.
    pub fn build(documents: Vec<Document>, items: Vec<Item>) -> Result<Self> {
        let mut docs = BTreeMap::new();
        for doc in documents {
            if docs.contains_key(&doc.doc_id) {
                return Err(Error::DuplicateId {
                    entity: "document",
                    id: doc.doc_id,
                });
            }
            docs.insert(doc.doc_id.clone(), doc);
        }

        let mut item_map = BTreeMap::new();
        for item in items {
            if item_map.contains_key(&item.item_id) {
                return Err(Error::DuplicateId {
                    entity: "item",
                    id: item.item_id,
                });
            }
            item_map.insert(item.item_id.clone(), item);
        }

        for item in item_map.values() {
            let doc = docs.get(&item.doc_id).ok_or_else(|| {
                Error::Integrity(format!(
                    "item `{}` references unknown document `{}`",
                    item.item_id, item.doc_id
                ))
            })?;
            if item.timestamp < doc.publish_time {
                return Err(Error::Integrity(format!(
                    "item `{}` at {} predates publication of `{}` at {}",
                    item.item_id, item.timestamp, doc.doc_id, doc.publish_time
                )));
            }
            if let Some(parent_id) = &item.parent_item_id {
                match item_map.get(parent_id) {
                    Some(parent) if parent.doc_id == item.doc_id => {}
                    Some(_) => {
                        return Err(Error::Integrity(format!(
                            "item `{}` has parent `{}` on a different document",
                            item.item_id, parent_id
                        )))
                    }
                    None => {
                        return Err(Error::Integrity(format!(
                            "item `{}` references unknown parent item `{}`",
                            item.item_id, parent_id
                        )))
                    }
                }
            }
        }

        let mut publishers: BTreeMap<String, Publisher> = BTreeMap::new();
        for doc in docs.values() {
            publishers
                .entry(doc.publisher_id.clone())
                .or_insert_with(|| Publisher {
                    publisher_id: doc.publisher_id.clone(),
                    document_ids: Vec::new(),
                })
                .document_ids
                .push(doc.doc_id.clone());
        }

        let mut users: BTreeMap<String, User> = BTreeMap::new();
        let mut timeline: BTreeMap<String, Vec<String>> =
            docs.keys().map(|id| (id.clone(), Vec::new())).collect();
        for item in item_map.values() {
            users
                .entry(item.user_id.clone())
                .or_insert_with(|| User {
                    user_id: item.user_id.clone(),
                    item_ids: Vec::new(),
                })
                .item_ids
                .push(item.item_id.clone());
            if let Some(ids) = timeline.get_mut(&item.doc_id) {
                ids.push(item.item_id.clone());
            }
        }
        for ids in timeline.values_mut() {
            ids.sort_by(|a, b| {
                let (ia, ib) = (&item_map[a], &item_map[b]);
                ia.timestamp.cmp(&ib.timestamp).then_with(|| a.cmp(b))
            });
        }

        Ok(Corpus {
            publishers,
            documents: docs,
            users,
            items: item_map,
            timeline,
        })
    }

    pub fn publishers(&self) -> impl Iterator<Item = &Publisher> {
        self.publishers.values()
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.documents.values()
    }

    pub fn users(&self) -> impl Iterator<Item = &User> {
        self.users.values()
    }

    pub fn items(&self) -> impl Iterator<Item = &Item> {
        self.items.values()
    }

    pub fn publisher_count(&self) -> usize {
        self.publishers.len()
    }

    pub fn document_count(&self) -> usize {
        self.documents.len()
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn document(&self, doc_id: &str) -> Result<&Document> {
        self.documents.get(doc_id).ok_or_else(|| Error::UnknownId {
            entity: "document",
            id: doc_id.to_string(),
        })
    }

    pub fn publisher(&self, publisher_id: &str) -> Result<&Publisher> {
        self.publishers
            .get(publisher_id)
            .ok_or_else(|| Error::UnknownId {
                entity: "publisher",
                id: publisher_id.to_string(),
            })
    }

    pub fn user(&self, user_id: &str) -> Result<&User> {
        self.users.get(user_id).ok_or_else(|| Error::UnknownId {
            entity: "user",
            id: user_id.to_string(),
        })
    }

    pub fn item(&self, item_id: &str) -> Result<&Item> {
        self.items.get(item_id).ok_or_else(|| Error::UnknownId {
            entity: "item",
            id: item_id.to_string(),
        })
    }

    /// Items on `doc_id` with `timestamp <= observe_at`, oldest first.
    pub fn items_for_document(&self, doc_id: &str, observe_at: Timestamp) -> Result<Vec<&Item>> {
        let ids = self.timeline.get(doc_id).ok_or_else(|| Error::UnknownId {
            entity: "document",
            id: doc_id.to_string(),
        })?;
        Ok(ids
            .iter()
            .map(|id| &self.items[id])
            .take_while(|item| item.timestamp <= observe_at)
            .collect())
    }

    /// Every document of the publisher except `exclude_doc`.
    pub fn publisher_history(&self, publisher_id: &str, exclude_doc: &str) -> Result<Vec<&Document>> {
        let publisher = self.publisher(publisher_id)?;
        Ok(publisher
            .document_ids
            .iter()
            .filter(|id| id.as_str() != exclude_doc)
            .map(|id| &self.documents[id])
            .collect())
    }

    /// Documents that carry a ground-truth label.
    pub fn labeled_documents(&self) -> impl Iterator<Item = &Document> {
        self.documents.values().filter(|d| d.label.is_some())
    }

    /// Full scan of every cross-reference. `Corpus::build` already enforces
    /// these, so this only fails if the structure was corrupted.
    pub fn check_integrity(&self) -> Result<()> {
        for (id, publisher) in &self.publishers {
            for doc_id in &publisher.document_ids {
                let doc = self.document(doc_id)?;
                if &doc.publisher_id != id {
                    return Err(Error::Integrity(format!(
                        "publisher `{id}` lists `{doc_id}` published by `{}`",
                        doc.publisher_id
                    )));
                }
            }
        }
        for doc in self.documents.values() {
            let publisher = self.publisher(&doc.publisher_id)?;
            if publisher.document_ids.binary_search(&doc.doc_id).is_err() {
                return Err(Error::Integrity(format!(
                    "document `{}` missing from publisher `{}`",
                    doc.doc_id, doc.publisher_id
                )));
            }
        }
        for (id, user) in &self.users {
            for item_id in &user.item_ids {
                if &self.item(item_id)?.user_id != id {
                    return Err(Error::Integrity(format!("user `{id}` lists foreign item `{item_id}`")));
                }
            }
        }
        for item in self.items.values() {
            let doc = self.document(&item.doc_id)?;
            let user = self.user(&item.user_id)?;
            if user.item_ids.binary_search(&item.item_id).is_err() {
                return Err(Error::Integrity(format!(
                    "item `{}` missing from user `{}`",
                    item.item_id, item.user_id
                )));
            }
            if item.timestamp < doc.publish_time {
                return Err(Error::Integrity(format!("item `{}` predates its document", item.item_id)));
            }
            if let Some(parent) = &item.parent_item_id {
                if self.item(parent)?.doc_id != item.doc_id {
                    return Err(Error::Integrity(format!(
                        "item `{}` has parent on another document",
                        item.item_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Identifiers of all users who engaged with any of `doc_ids`.
    pub fn engaged_users<'a>(&'a self, doc_ids: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
        doc_ids
            .into_iter()
            .filter_map(|id| self.timeline.get(id))
            .flatten()
            .map(|item_id| self.items[item_id].user_id.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T0: Timestamp = 1_600_000_000;

    fn doc(id: &str, publisher: &str) -> Document {
        Document {
            doc_id: id.into(),
            publisher_id: publisher.into(),
            text: format!("text of {id}"),
            publish_time: T0,
            label: None,
        }
    }

    fn item(id: &str, doc_id: &str, user: &str, hours: f64) -> Item {
        Item {
            item_id: id.into(),
            doc_id: doc_id.into(),
            user_id: user.into(),
            timestamp: hours_after(T0, hours),
            kind: ItemKind::Post,
            parent_item_id: None,
            text: None,
        }
    }

    #[test]
    fn counts_derived_entities() {
        let corpus = Corpus::build(
            vec![doc("d1", "p1"), doc("d2", "p1"), doc("d3", "p1")],
            vec![
                item("z1", "d1", "u1", 1.0),
                item("z2", "d2", "u1", 2.0),
                item("z3", "d2", "u2", 3.0),
                item("z4", "d3", "u2", 4.0),
            ],
        )
        .unwrap();
        assert_eq!(corpus.publisher_count(), 1);
        assert_eq!(corpus.document_count(), 3);
        assert_eq!(corpus.user_count(), 2);
        assert_eq!(corpus.item_count(), 4);
        corpus.check_integrity().unwrap();
    }

    #[test]
    fn empty_inputs() {
        let corpus = Corpus::build(vec![], vec![]).unwrap();
        assert_eq!(
            (corpus.publisher_count(), corpus.document_count(), corpus.user_count(), corpus.item_count()),
            (0, 0, 0, 0)
        );
    }

    #[test]
    fn rejects_item_on_unknown_document() {
        let err = Corpus::build(vec![doc("d1", "p1")], vec![item("z1", "d9", "u1", 1.0)]).unwrap_err();
        assert!(matches!(err, Error::Integrity(ref m) if m.contains("d9")));
    }

    #[test]
    fn rejects_duplicates_by_name() {
        let err = Corpus::build(vec![doc("d1", "p1"), doc("d1", "p2")], vec![]).unwrap_err();
        assert!(err.to_string().contains("d1"));
        let err = Corpus::build(
            vec![doc("d1", "p1")],
            vec![item("z1", "d1", "u1", 1.0), item("z1", "d1", "u2", 2.0)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId { entity: "item", .. }));
    }

    #[test]
    fn rejects_items_before_publication_and_cross_document_parents() {
        let err = Corpus::build(vec![doc("d1", "p1")], vec![item("z1", "d1", "u1", -1.0)]).unwrap_err();
        assert!(matches!(err, Error::Integrity(_)));

        let mut child = item("z2", "d2", "u1", 2.0);
        child.parent_item_id = Some("z1".into());
        let err = Corpus::build(
            vec![doc("d1", "p1"), doc("d2", "p1")],
            vec![item("z1", "d1", "u1", 1.0), child],
        )
        .unwrap_err();
        assert!(err.to_string().contains("different document"));
    }

    #[test]
    fn time_filtered_items() {
        let corpus = Corpus::build(
            vec![doc("d1", "p1")],
            vec![
                item("z3", "d1", "u1", 200.0),
                item("z1", "d1", "u1", 1.0),
                item("z2", "d1", "u2", 5.0),
            ],
        )
        .unwrap();
        assert!(corpus.items_for_document("d1", T0).unwrap().is_empty());
        let week: Vec<_> = corpus
            .items_for_document("d1", hours_after(T0, 168.0))
            .unwrap()
            .iter()
            .map(|i| i.item_id.as_str())
            .collect();
        assert_eq!(week, ["z1", "z2"]);
        assert_eq!(corpus.items_for_document("d1", END_OF_TIME).unwrap().len(), 3);
        assert!(corpus.items_for_document("nope", END_OF_TIME).is_err());
    }

    #[test]
    fn publisher_history_excludes_target() {
        let docs = (1..=5).map(|i| doc(&format!("d{i}"), "p1")).collect();
        let corpus = Corpus::build(docs, vec![]).unwrap();
        assert_eq!(corpus.publisher_history("p1", "d3").unwrap().len(), 4);

        let solo = Corpus::build(vec![doc("d1", "p1")], vec![]).unwrap();
        assert!(solo.publisher_history("p1", "d1").unwrap().is_empty());
        assert!(matches!(
            solo.publisher_history("p404", "d1"),
            Err(Error::UnknownId { entity: "publisher", .. })
        ));
    }

    #[test]
    fn label_wire_format() {
        assert_eq!(serde_json::to_string(&Label::FalseNews).unwrap(), "1");
        assert_eq!(serde_json::from_str::<Label>("0").unwrap(), Label::TrueNews);
        assert!(serde_json::from_str::<Label>("2").is_err());
    }

    #[test]
    fn hours_after_saturates() {
        assert_eq!(hours_after(T0, 2.0), T0 + 7200);
        assert_eq!(hours_after(T0, f64::INFINITY), END_OF_TIME);
        assert_eq!(hours_after(T0, 1e300), END_OF_TIME);
    }
}
