use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_training_input, false_rate, smoothed_rate, BaseModel};
use crate::enricher::{EnrichedDocument, InformationKind, Payload};
use crate::error::{Error, Result};
use crate::osmn::Label;

/// Scores a document by its publisher's smoothed false rate over the
/// training documents: `(n_false + beta * prior) / (n_docs + beta)`.
/// Publishers absent from training score the prior.
#[derive(Debug, Clone, Default)]
pub struct PublisherCredibility {
    state: Option<PublisherState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublisherState {
    pub prior: f64,
    /// publisher_id -> (training documents, false ones)
    pub publishers: BTreeMap<String, (u64, u64)>,
}

impl PublisherState {
    pub fn score(&self, publisher_id: &str) -> f64 {
        match self.publishers.get(publisher_id) {
            Some(&(n, n_false)) => smoothed_rate(n_false as f64, n as f64, self.prior),
            None => self.prior,
        }
    }
}

fn publisher_id(doc: &EnrichedDocument) -> Result<&str> {
    match doc.information(InformationKind::PublisherHistory).map(|i| &i.payload) {
        Some(Payload::PublisherHistory { publisher_id, .. }) => Ok(publisher_id),
        _ => Err(Error::Integrity(format!("document `{}` lacks publisher history", doc.doc_id))),
    }
}

impl PublisherCredibility {
    pub const ID: &'static str = "publisher_credibility";

    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_state(state: serde_json::Value) -> Result<Self> {
        Ok(PublisherCredibility {
            state: Some(serde_json::from_value(state)?),
        })
    }

    pub fn publisher_state(&self) -> Option<&PublisherState> {
        self.state.as_ref()
    }
}

impl BaseModel for PublisherCredibility {
    fn model_id(&self) -> &str {
        Self::ID
    }

    fn consumes(&self) -> &[InformationKind] {
        &[InformationKind::PublisherHistory]
    }

    fn train(&mut self, docs: &[EnrichedDocument], labels: &[Label]) -> Result<()> {
        check_training_input(Self::ID, docs, labels)?;
        let mut publishers: BTreeMap<String, (u64, u64)> = BTreeMap::new();
        for (doc, label) in docs.iter().zip(labels) {
            let entry = publishers.entry(publisher_id(doc)?.to_string()).or_default();
            entry.0 += 1;
            entry.1 += u64::from(label.is_false());
        }
        self.state = Some(PublisherState {
            prior: false_rate(labels),
            publishers,
        });
        Ok(())
    }

    fn is_trained(&self) -> bool {
        self.state.is_some()
    }

    fn prob_false(&self, doc: &EnrichedDocument) -> Result<f64> {
        let state = self
            .state
            .as_ref()
            .ok_or_else(|| Error::Untrained(Self::ID.into()))?;
        Ok(state.score(publisher_id(doc)?))
    }

    fn kind(&self) -> &'static str {
        Self::ID
    }

    fn state(&self) -> Result<serde_json::Value> {
        let state = self
            .state
            .as_ref()
            .ok_or_else(|| Error::Untrained(Self::ID.into()))?;
        Ok(serde_json::to_value(state)?)
    }
}
