//! Trained base models plus the entities they saw, scoring documents end to end.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aggregator::{aggregate, AggregateResult, Strategy};
use crate::enricher::{EnrichedDocument, Enricher, KnownEntities, ReliabilityTable};
use crate::error::{Error, Result};
use crate::eval::metrics::Confusion;
use crate::explainer::{explain, Explanation};
use crate::models::{load_models, save_models, standard_model, BaseModel, BaseModelDescriptor, Prediction};
use crate::osmn::{hours_after, Corpus, Label, Timestamp, END_OF_TIME};

/// Observation time for a document: `hours` after publication, or the end
/// of time (every item visible) when `None`.
pub fn observe_time(publish_time: Timestamp, hours: Option<f64>) -> Timestamp {
    match hours {
        Some(h) => hours_after(publish_time, h),
        None => END_OF_TIME,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub model_id: String,
    pub prob_false: f64,
    pub model_reliability: f64,
    pub weight: f64,
    pub share: f64,
}

/// One scored document, as written by `predict`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentScore {
    pub doc_id: String,
    pub observe_at: Timestamp,
    pub prob_false: f64,
    pub strategy: Strategy,
    pub per_model: Vec<ModelScore>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degraded: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub tie: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<Explanation>,
}

pub struct Ensemble {
    models: Vec<Box<dyn BaseModel>>,
    descriptors: Vec<BaseModelDescriptor>,
    known: KnownEntities,
}

impl std::fmt::Debug for Ensemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ensemble")
            .field("descriptors", &self.descriptors)
            .field("known_documents", &self.known.documents.len())
            .finish()
    }
}

impl Ensemble {
    pub fn new(
        models: Vec<Box<dyn BaseModel>>,
        descriptors: Vec<BaseModelDescriptor>,
        known: KnownEntities,
    ) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::Config("an ensemble needs at least one model".into()));
        }
        if models.len() != descriptors.len()
            || models.iter().zip(&descriptors).any(|(m, d)| m.model_id() != d.model_id)
        {
            return Err(Error::Config("descriptors must match models one to one".into()));
        }
        if let Some(m) = models.iter().find(|m| !m.is_trained()) {
            return Err(Error::Untrained(m.model_id().to_string()));
        }
        Ok(Ensemble {
            models,
            descriptors,
            known,
        })
    }

    /// Trains the named built-in models on `train` and scores each on
    /// `validation` (F1 at `threshold`) for the BMAcc weights. Documents are
    /// enriched `at_hours` after publication, or with every item when `None`.
    pub fn train<M: AsRef<str>, S: AsRef<str>>(
        corpus: &Corpus,
        table: &ReliabilityTable,
        model_ids: &[M],
        train: &[S],
        validation: &[S],
        at_hours: Option<f64>,
        threshold: f64,
    ) -> Result<Self> {
        let train_refs: Vec<&str> = train.iter().map(AsRef::as_ref).collect();
        let known = KnownEntities::from_training(corpus, &train_refs)?;
        let enricher = Enricher::new(corpus, table, &known);

        let labels = |ids: &[S]| -> Result<Vec<Label>> {
            ids.iter()
                .map(|id| {
                    corpus.document(id.as_ref())?.label.ok_or_else(|| {
                        Error::Evaluation(format!("document `{}` has no label", id.as_ref()))
                    })
                })
                .collect()
        };
        let train_docs = enricher.enrich_each(train, |p| observe_time(p, at_hours))?;
        let train_labels = labels(train)?;
        let val_docs = enricher.enrich_each(validation, |p| observe_time(p, at_hours))?;
        let val_labels = labels(validation)?;

        let mut models = Vec::with_capacity(model_ids.len());
        let mut descriptors = Vec::with_capacity(model_ids.len());
        for id in model_ids {
            let mut model = standard_model(id.as_ref())?;
            model.train(&train_docs, &train_labels)?;
            let mut descriptor = BaseModelDescriptor::for_model(model.as_ref());
            if !val_docs.is_empty() {
                let probs = val_docs
                    .iter()
                    .map(|d| model.prob_false(d))
                    .collect::<Result<Vec<_>>>()?;
                descriptor.validation_score =
                    Some(Confusion::from_scores(&val_labels, &probs, threshold).f1());
            }
            models.push(model);
            descriptors.push(descriptor);
        }
        Ensemble::new(models, descriptors, known)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (models, index) = load_models(dir)?;
        let descriptors = index.models.into_iter().map(|e| e.descriptor).collect();
        Ensemble::new(models, descriptors, index.known)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        save_models(dir, &self.models, &self.descriptors, &self.known).map(|_| ())
    }

    pub fn descriptors(&self) -> &[BaseModelDescriptor] {
        &self.descriptors
    }

    pub fn known(&self) -> &KnownEntities {
        &self.known
    }

    pub fn model_ids(&self) -> impl Iterator<Item = &str> {
        self.models.iter().map(|m| m.model_id())
    }

    /// Keeps only the listed models, in the listed order.
    pub fn select<S: AsRef<str>>(self, model_ids: &[S]) -> Result<Self> {
        let mut pairs: Vec<Option<(Box<dyn BaseModel>, BaseModelDescriptor)>> =
            self.models.into_iter().zip(self.descriptors).map(Some).collect();
        let mut models = Vec::new();
        let mut descriptors = Vec::new();
        for id in model_ids {
            let slot = pairs
                .iter_mut()
                .find(|p| p.as_ref().is_some_and(|(m, _)| m.model_id() == id.as_ref()))
                .ok_or_else(|| Error::UnknownId {
                    entity: "model",
                    id: id.as_ref().to_string(),
                })?;
            let (m, d) = slot.take().expect("matched above");
            models.push(m);
            descriptors.push(d);
        }
        Ensemble::new(models, descriptors, self.known)
    }

    pub fn enricher<'a>(&'a self, corpus: &'a Corpus, table: &'a ReliabilityTable) -> Enricher<'a> {
        Enricher::new(corpus, table, &self.known)
    }

    pub fn predict(&self, doc: &EnrichedDocument) -> Result<Vec<Prediction>> {
        self.models.iter().map(|m| m.predict(doc)).collect()
    }

    pub fn aggregate(&self, strategy: Strategy, predictions: &[Prediction]) -> Result<AggregateResult> {
        aggregate(strategy, predictions, &self.descriptors)
    }

    pub fn score(&self, doc: &EnrichedDocument, strategy: Strategy, with_explanation: bool) -> Result<DocumentScore> {
        let predictions = self.predict(doc)?;
        let result = self.aggregate(strategy, &predictions)?;
        let explanation = if with_explanation {
            Some(explain(&predictions, doc, &result)?)
        } else {
            None
        };
        Ok(DocumentScore {
            doc_id: doc.doc_id.clone(),
            observe_at: doc.observe_at,
            prob_false: result.prob_false,
            strategy,
            per_model: predictions
                .iter()
                .zip(&result.per_model)
                .map(|(p, c)| ModelScore {
                    model_id: p.model_id.clone(),
                    prob_false: p.prob_false,
                    model_reliability: p.model_reliability,
                    weight: c.weight,
                    share: c.share,
                })
                .collect(),
            degraded: result.degraded,
            tie: result.tie,
            explanation,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SynthConfig};
    use crate::models::STANDARD_MODELS;

    fn corpus() -> Corpus {
        generate_synthetic(&SynthConfig {
            n_documents: 80,
            n_users: 40,
            seed: 3,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn train_score_and_round_trip() {
        let corpus = corpus();
        let ids: Vec<String> = corpus.documents().map(|d| d.doc_id.clone()).collect();
        let table = ReliabilityTable::default();
        let ensemble =
            Ensemble::train(&corpus, &table, &STANDARD_MODELS, &ids[..60], &ids[60..70], None, 0.5).unwrap();
        assert!(ensemble.descriptors().iter().all(|d| d.validation_score.is_some()));

        let doc = ensemble.enricher(&corpus, &table).enrich(&ids[75], END_OF_TIME).unwrap();
        let score = ensemble.score(&doc, Strategy::Dapa, true).unwrap();
        assert_eq!(score.per_model.len(), 3);
        let shares: f64 = score.per_model.iter().map(|m| m.share).sum();
        assert!((shares - 1.0).abs() < 1e-12);
        assert!(score.explanation.is_some());

        let dir = tempfile::tempdir().unwrap();
        ensemble.save(dir.path()).unwrap();
        let loaded = Ensemble::load(dir.path()).unwrap();
        assert_eq!(loaded.score(&doc, Strategy::Dapa, true).unwrap(), score);
        assert_eq!(loaded.known(), ensemble.known());

        let only = loaded.select(&["user_credibility"]).unwrap();
        assert_eq!(only.model_ids().collect::<Vec<_>>(), ["user_credibility"]);
    }

    #[test]
    fn observation_policy() {
        assert_eq!(observe_time(100, None), END_OF_TIME);
        assert_eq!(observe_time(100, Some(2.0)), 7300);
    }
}
