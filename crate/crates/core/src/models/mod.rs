//! Pluggable base models.
//!
//! A base model declares which [`InformationKind`]s it consumes, trains on
//! enriched documents, and maps an enriched document to a probability of
//! falsehood. The framework never looks inside a model; any predictor that
//! implements [`BaseModel`] can join the ensemble.
//!
//! Three reference models ship with the crate:
//!
//! * [`ContentWords`]: multinomial naive Bayes over the word multiset.
//! * [`PublisherCredibility`]: smoothed false rate of the publisher's
//!   training documents.
//! * [`UserCredibility`]: item-weighted mean of the smoothed false rates of
//!   the users engaging with the document.

mod content;
mod publisher;
mod store;
mod user;

pub use content::ContentWords;
pub use publisher::PublisherCredibility;
pub use store::{load_models, save_models, ModelIndex, ModelIndexEntry, MODEL_FORMAT_VERSION};
pub use user::UserCredibility;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::enricher::{EnrichedDocument, InformationKind, Network};
use crate::error::{Error, Result};
use crate::osmn::Label;

/// Smoothing strength for the credibility models.
pub const SMOOTHING_BETA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelNetwork {
    Content,
    Context,
    Hybrid,
}

impl ModelNetwork {
    pub fn of(consumes: &[InformationKind]) -> Self {
        let networks: BTreeSet<Network> = consumes.iter().map(|k| k.network()).collect();
        match (networks.contains(&Network::Content), networks.contains(&Network::Context)) {
            (true, false) => ModelNetwork::Content,
            (false, true) => ModelNetwork::Context,
            _ => ModelNetwork::Hybrid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseModelDescriptor {
    pub model_id: String,
    pub consumes: Vec<InformationKind>,
    pub network: ModelNetwork,
    /// Held-out score after training; weights the BMAcc aggregator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_score: Option<f64>,
}

impl BaseModelDescriptor {
    pub fn for_model(model: &dyn BaseModel) -> Self {
        BaseModelDescriptor {
            model_id: model.model_id().to_string(),
            consumes: model.consumes().to_vec(),
            network: ModelNetwork::of(model.consumes()),
            validation_score: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub model_id: String,
    pub prob_false: f64,
    /// Mean reliability of the informations this model consumed.
    pub model_reliability: f64,
    pub consumes: Vec<InformationKind>,
}

impl Prediction {
    /// A prediction record with explicit values, bypassing any model.
    pub fn new(
        model_id: impl Into<String>,
        prob_false: f64,
        model_reliability: f64,
        consumes: Vec<InformationKind>,
    ) -> Self {
        Prediction {
            model_id: model_id.into(),
            prob_false,
            model_reliability,
            consumes,
        }
    }
}

/// Mean reliability of `consumes` within `doc`.
pub fn model_reliability(doc: &EnrichedDocument, consumes: &[InformationKind]) -> Result<f64> {
    if consumes.is_empty() {
        return Err(Error::Config("a model must consume at least one information".into()));
    }
    let mut total = 0.0;
    for kind in consumes {
        total += doc.reliability(*kind).ok_or_else(|| {
            Error::Integrity(format!("document `{}` lacks {kind} information", doc.doc_id))
        })?;
    }
    Ok(total / consumes.len() as f64)
}

pub trait BaseModel: Send + Sync {
    fn model_id(&self) -> &str;

    /// Nonempty.
    fn consumes(&self) -> &[InformationKind];

    fn train(&mut self, docs: &[EnrichedDocument], labels: &[Label]) -> Result<()>;

    fn is_trained(&self) -> bool;

    /// Probability of falsehood in `[0, 1]`.
    fn prob_false(&self, doc: &EnrichedDocument) -> Result<f64>;

    /// Registered kind used to reload the model from disk.
    fn kind(&self) -> &'static str;

    /// Serialized trained state.
    fn state(&self) -> Result<serde_json::Value>;

    fn predict(&self, doc: &EnrichedDocument) -> Result<Prediction> {
        let prob_false = self.prob_false(doc)?;
        Ok(Prediction {
            model_id: self.model_id().to_string(),
            prob_false: prob_false.clamp(0.0, 1.0),
            model_reliability: model_reliability(doc, self.consumes())?,
            consumes: self.consumes().to_vec(),
        })
    }
}

/// Identifiers of the built-in models, in canonical order.
pub const STANDARD_MODELS: [&str; 3] = [
    ContentWords::ID,
    PublisherCredibility::ID,
    UserCredibility::ID,
];

/// A fresh, untrained built-in model.
pub fn standard_model(id: &str) -> Result<Box<dyn BaseModel>> {
    match id {
        ContentWords::ID => Ok(Box::new(ContentWords::new())),
        PublisherCredibility::ID => Ok(Box::new(PublisherCredibility::new())),
        UserCredibility::ID => Ok(Box::new(UserCredibility::new())),
        other => Err(Error::Config(format!(
            "unknown model `{other}` (expected one of {})",
            STANDARD_MODELS.join(", ")
        ))),
    }
}

/// Rebuilds a trained built-in model from its serialized state.
pub fn model_from_state(kind: &str, state: serde_json::Value) -> Result<Box<dyn BaseModel>> {
    match kind {
        ContentWords::ID => Ok(Box::new(ContentWords::from_state(state)?)),
        PublisherCredibility::ID => Ok(Box::new(PublisherCredibility::from_state(state)?)),
        UserCredibility::ID => Ok(Box::new(UserCredibility::from_state(state)?)),
        other => Err(Error::Config(format!("unknown model kind `{other}`"))),
    }
}

pub(crate) fn check_training_input(model: &str, docs: &[EnrichedDocument], labels: &[Label]) -> Result<()> {
    if docs.is_empty() {
        return Err(Error::Training {
            model: model.to_string(),
            reason: "empty training set".into(),
        });
    }
    if docs.len() != labels.len() {
        return Err(Error::Training {
            model: model.to_string(),
            reason: format!("{} documents but {} labels", docs.len(), labels.len()),
        });
    }
    Ok(())
}

pub(crate) fn false_rate(labels: &[Label]) -> f64 {
    labels.iter().filter(|l| l.is_false()).count() as f64 / labels.len() as f64
}

/// `(n_false + beta * prior) / (n + beta)`.
pub(crate) fn smoothed_rate(n_false: f64, n: f64, prior: f64) -> f64 {
    (n_false + SMOOTHING_BETA * prior) / (n + SMOOTHING_BETA)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn network_classification() {
        use InformationKind::*;
        assert_eq!(ModelNetwork::of(&[Words]), ModelNetwork::Content);
        assert_eq!(ModelNetwork::of(&[Words, PublisherHistory]), ModelNetwork::Content);
        assert_eq!(ModelNetwork::of(&[UserHistory]), ModelNetwork::Context);
        assert_eq!(ModelNetwork::of(&[Words, UserHistory]), ModelNetwork::Hybrid);
    }

    #[test]
    fn registry() {
        for id in STANDARD_MODELS {
            let model = standard_model(id).unwrap();
            assert_eq!(model.model_id(), id);
            assert!(!model.consumes().is_empty());
            assert!(!model.is_trained());
        }
        assert!(standard_model("fakeflow").is_err());
    }
}
