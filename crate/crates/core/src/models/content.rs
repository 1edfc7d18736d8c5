use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_training_input, BaseModel};
use crate::enricher::{EnrichedDocument, InformationKind, Payload};
use crate::error::{Error, Result};
use crate::osmn::Label;

/// Multinomial naive Bayes over the document's word multiset with add-one
/// smoothing. Words outside the training vocabulary are ignored, so a
/// document with no known words scores the class prior.
#[derive(Debug, Clone, Default)]
pub struct ContentWords {
    state: Option<NaiveBayesState>,
}

/// Per-class counts, indexed `[true-news, false-news]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesState {
    pub class_docs: [u64; 2],
    pub class_words: [u64; 2],
    pub word_counts: BTreeMap<String, [u64; 2]>,
}

fn class_index(label: Label) -> usize {
    usize::from(label.is_false())
}

fn tokens(doc: &EnrichedDocument) -> Result<&BTreeMap<String, u32>> {
    match doc.information(InformationKind::Words).map(|i| &i.payload) {
        Some(Payload::Words { tokens }) => Ok(tokens),
        _ => Err(Error::Integrity(format!("document `{}` lacks words", doc.doc_id))),
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl ContentWords {
    pub const ID: &'static str = "content_words";

    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_state(state: serde_json::Value) -> Result<Self> {
        Ok(ContentWords {
            state: Some(serde_json::from_value(state)?),
        })
    }

    pub fn naive_bayes_state(&self) -> Option<&NaiveBayesState> {
        self.state.as_ref()
    }
}

impl BaseModel for ContentWords {
    fn model_id(&self) -> &str {
        Self::ID
    }

    fn consumes(&self) -> &[InformationKind] {
        &[InformationKind::Words]
    }

    fn train(&mut self, docs: &[EnrichedDocument], labels: &[Label]) -> Result<()> {
        check_training_input(Self::ID, docs, labels)?;
        let mut state = NaiveBayesState {
            class_docs: [0; 2],
            class_words: [0; 2],
            word_counts: BTreeMap::new(),
        };
        for (doc, &label) in docs.iter().zip(labels) {
            let c = class_index(label);
            state.class_docs[c] += 1;
            for (word, &n) in tokens(doc)? {
                state.word_counts.entry(word.clone()).or_insert([0; 2])[c] += u64::from(n);
                state.class_words[c] += u64::from(n);
            }
        }
        if state.class_docs.contains(&0) {
            return Err(Error::Training {
                model: Self::ID.into(),
                reason: "training set must contain both classes".into(),
            });
        }
        self.state = Some(state);
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
        let vocab = state.word_counts.len() as f64;
        let denom_true = (state.class_words[0] as f64 + vocab).ln();
        let denom_false = (state.class_words[1] as f64 + vocab).ln();

        // log P(false | words) - log P(true | words)
        let mut log_odds = (state.class_docs[1] as f64).ln() - (state.class_docs[0] as f64).ln();
        for (word, &n) in tokens(doc)? {
            if let Some(&[c_true, c_false]) = state.word_counts.get(word) {
                let lf = (c_false as f64 + 1.0).ln() - denom_false;
                let lt = (c_true as f64 + 1.0).ln() - denom_true;
                log_odds += f64::from(n) * (lf - lt);
            }
        }
        Ok(sigmoid(log_odds))
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enricher::Information;

    fn doc(id: &str, text: &str) -> EnrichedDocument {
        let mut tokens = BTreeMap::new();
        for t in crate::enricher::tokenize(text) {
            *tokens.entry(t).or_insert(0) += 1;
        }
        EnrichedDocument {
            doc_id: id.into(),
            observe_at: 0,
            informations: vec![Information::new(Payload::Words { tokens }, vec![])],
        }
    }

    #[test]
    fn separable_pair() {
        let docs = [doc("a", "sunny calm weather report"), doc("b", "shocking secret cure exposed")];
        let labels = [Label::TrueNews, Label::FalseNews];
        let mut model = ContentWords::new();
        model.train(&docs, &labels).unwrap();
        assert!(model.prob_false(&docs[0]).unwrap() < 0.5);
        assert!(model.prob_false(&docs[1]).unwrap() > 0.5);
    }

    #[test]
    fn empty_text_scores_prior() {
        let docs = [doc("a", "x"), doc("b", "y"), doc("c", "z")];
        let labels = [Label::TrueNews, Label::FalseNews, Label::FalseNews];
        let mut model = ContentWords::new();
        model.train(&docs, &labels).unwrap();
        let p = model.prob_false(&doc("e", "")).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-12);
        let unseen = model.prob_false(&doc("u", "never seen tokens")).unwrap();
        assert!((unseen - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_or_empty_rejected() {
        let mut model = ContentWords::new();
        let docs = [doc("a", "x"), doc("b", "y")];
        assert!(matches!(
            model.train(&docs, &[Label::TrueNews, Label::TrueNews]),
            Err(Error::Training { .. })
        ));
        assert!(model.train(&[], &[]).is_err());
        assert!(matches!(model.prob_false(&docs[0]), Err(Error::Untrained(_))));
    }

    #[test]
    fn state_round_trip() {
        let docs = [doc("a", "alpha beta"), doc("b", "gamma")];
        let mut model = ContentWords::new();
        model.train(&docs, &[Label::TrueNews, Label::FalseNews]).unwrap();
        let restored = ContentWords::from_state(model.state().unwrap()).unwrap();
        assert_eq!(restored.naive_bayes_state(), model.naive_bayes_state());
    }
}
