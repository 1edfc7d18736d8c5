use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_training_input, false_rate, smoothed_rate, BaseModel};
use crate::enricher::{EnrichedDocument, InformationKind, Payload, UserEngagement};
use crate::error::{Error, Result};
use crate::osmn::Label;

/// Each user's credibility is the smoothed fraction of their training items
/// that sit on false documents. A document scores the item-count-weighted
/// mean over the users visible at its observation time, or the prior when
/// nobody has engaged yet.
#[derive(Debug, Clone, Default)]
pub struct UserCredibility {
    state: Option<UserState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub prior: f64,
    /// user_id -> (training items, items on false documents)
    pub users: BTreeMap<String, (u64, u64)>,
}

impl UserState {
    pub fn score(&self, user_id: &str) -> f64 {
        match self.users.get(user_id) {
            Some(&(n, n_false)) => smoothed_rate(n_false as f64, n as f64, self.prior),
            None => self.prior,
        }
    }
}

fn engagements(doc: &EnrichedDocument) -> Result<&[UserEngagement]> {
    match doc.information(InformationKind::UserHistory).map(|i| &i.payload) {
        Some(Payload::UserHistory { engagements }) => Ok(engagements),
        _ => Err(Error::Integrity(format!("document `{}` lacks user history", doc.doc_id))),
    }
}

impl UserCredibility {
    pub const ID: &'static str = "user_credibility";

    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_state(state: serde_json::Value) -> Result<Self> {
        Ok(UserCredibility {
            state: Some(serde_json::from_value(state)?),
        })
    }

    pub fn user_state(&self) -> Option<&UserState> {
        self.state.as_ref()
    }
}

impl BaseModel for UserCredibility {
    fn model_id(&self) -> &str {
        Self::ID
    }

    fn consumes(&self) -> &[InformationKind] {
        &[InformationKind::UserHistory]
    }

    fn train(&mut self, docs: &[EnrichedDocument], labels: &[Label]) -> Result<()> {
        check_training_input(Self::ID, docs, labels)?;
        let mut users: BTreeMap<String, (u64, u64)> = BTreeMap::new();
        for (doc, label) in docs.iter().zip(labels) {
            for e in engagements(doc)? {
                let entry = users.entry(e.user_id.clone()).or_default();
                entry.0 += u64::from(e.items);
                if label.is_false() {
                    entry.1 += u64::from(e.items);
                }
            }
        }
        self.state = Some(UserState {
            prior: false_rate(labels),
            users,
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
        let mut weighted = 0.0;
        let mut total = 0.0;
        for e in engagements(doc)? {
            let w = f64::from(e.items);
            weighted += w * state.score(&e.user_id);
            total += w;
        }
        Ok(if total > 0.0 { weighted / total } else { state.prior })
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
