//! Four-tier explanation of a reliability-weighted prediction.
//!
//! 1. the most reliable model and its share of the aggregate,
//! 2. the network (content or context) whose informations are most reliable
//!    within that model,
//! 3. the single most reliable information that model consumed,
//! 4. the reliability factors behind that information.
//!
//! Ties at any tier break toward the lexicographically smallest identifier
//! and are reported in [`TieFlags`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::aggregator::{AggregateResult, Strategy};
use crate::enricher::{EnrichedDocument, FactorName, FactorValue, InformationKind, Network};
use crate::error::{Error, Result};
use crate::models::Prediction;
use crate::osmn::Timestamp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopModel {
    pub model_id: String,
    pub share: f64,
    pub reliability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopNetwork {
    pub network: Network,
    pub avg_reliability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopInformation {
    pub information: InformationKind,
    pub reliability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorEntry {
    pub factor: FactorName,
    pub value: FactorValue,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieFlags {
    pub tier1: bool,
    pub tier2: bool,
    pub tier3: bool,
}

impl TieFlags {
    pub fn any(&self) -> bool {
        self.tier1 || self.tier2 || self.tier3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub doc_id: String,
    pub observe_at: Timestamp,
    pub prob_false: f64,
    pub tier1: TopModel,
    pub tier2: TopNetwork,
    pub tier3: TopInformation,
    pub tier4: Vec<FactorEntry>,
    pub ties: TieFlags,
}

/// Picks the maximum by `score`, ties resolved by the smallest `key`.
fn argmax<T, K: Ord>(items: impl IntoIterator<Item = T>, score: impl Fn(&T) -> f64, key: impl Fn(&T) -> K) -> Option<(T, bool)> {
    let mut best: Option<(T, f64, bool)> = None;
    for item in items {
        let s = score(&item);
        best = match best {
            None => Some((item, s, false)),
            Some((b, bs, tied)) => {
                if s > bs {
                    Some((item, s, false))
                } else if s == bs {
                    if key(&item) < key(&b) {
                        Some((item, s, true))
                    } else {
                        Some((b, bs, true))
                    }
                } else {
                    Some((b, bs, tied))
                }
            }
        };
    }
    best.map(|(item, _, tied)| (item, tied))
}

pub fn explain(
    predictions: &[Prediction],
    enriched: &EnrichedDocument,
    aggregate: &AggregateResult,
) -> Result<Explanation> {
    if predictions.is_empty() {
        return Err(Error::Explanation("no predictions to explain".into()));
    }
    if aggregate.strategy != Strategy::Dapa {
        return Err(Error::Explanation(format!(
            "explanations require the dapa aggregator, got {}",
            aggregate.strategy
        )));
    }

    let (top, tier1_tie) = argmax(predictions, |p| p.model_reliability, |p| p.model_id.clone())
        .expect("nonempty");
    let share = aggregate
        .contribution(&top.model_id)
        .ok_or_else(|| Error::Explanation(format!("aggregate lacks model `{}`", top.model_id)))?
        .share;

    let mut consumed = Vec::with_capacity(top.consumes.len());
    for kind in &top.consumes {
        let info = enriched.information(*kind).ok_or_else(|| {
            Error::Explanation(format!("document `{}` lacks {kind} information", enriched.doc_id))
        })?;
        consumed.push(info);
    }
    if consumed.is_empty() {
        return Err(Error::Explanation(format!("model `{}` consumes no information", top.model_id)));
    }

    let mut by_network: BTreeMap<Network, Vec<f64>> = BTreeMap::new();
    for info in &consumed {
        by_network.entry(info.kind().network()).or_default().push(info.reliability);
    }
    let network_means = by_network
        .into_iter()
        .map(|(n, rs)| (n, rs.iter().sum::<f64>() / rs.len() as f64));
    let ((network, avg_reliability), tier2_tie) =
        argmax(network_means, |(_, m)| *m, |(n, _)| n.as_str()).expect("nonempty");

    let (info, tier3_tie) =
        argmax(consumed, |i| i.reliability, |i| i.kind().as_str()).expect("nonempty");

    Ok(Explanation {
        doc_id: enriched.doc_id.clone(),
        observe_at: enriched.observe_at,
        prob_false: aggregate.prob_false,
        tier1: TopModel {
            model_id: top.model_id.clone(),
            share,
            reliability: top.model_reliability,
        },
        tier2: TopNetwork {
            network,
            avg_reliability,
        },
        tier3: TopInformation {
            information: info.kind(),
            reliability: info.reliability,
        },
        tier4: info
            .factors
            .iter()
            .map(|f| FactorEntry {
                factor: f.name,
                value: f.value,
                score: f.score,
            })
            .collect(),
        ties: TieFlags {
            tier1: tier1_tie,
            tier2: tier2_tie,
            tier3: tier3_tie,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            other => Err(Error::Config(format!("unknown format `{other}` (expected json or text)"))),
        }
    }
}

pub fn render(explanation: &Explanation, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(explanation)?),
        Format::Text => Ok(render_text(explanation)),
    }
}

fn render_text(e: &Explanation) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Document {}: probability of falsehood {:.2}",
        e.doc_id, e.prob_false
    );
    let tie = |t: bool| if t { " (tie)" } else { "" };
    let _ = writeln!(
        out,
        "Tier 1: {} contributed {:.0}% of the final aggregated prediction (reliability {:.2}){}",
        e.tier1.model_id,
        e.tier1.share * 100.0,
        e.tier1.reliability,
        tie(e.ties.tier1)
    );
    let _ = writeln!(
        out,
        "Tier 2: the {} network was the primary contributor (average reliability {:.2}){}",
        e.tier2.network,
        e.tier2.avg_reliability,
        tie(e.ties.tier2)
    );
    let _ = writeln!(
        out,
        "Tier 3: the top contributing information was {} (reliability {:.2}){}",
        e.tier3.information,
        e.tier3.reliability,
        tie(e.ties.tier3)
    );
    let factors: Vec<String> = e
        .tier4
        .iter()
        .map(|f| format!("{} = {} (score {:.2})", f.factor, f.value, f.score))
        .collect();
    let _ = writeln!(out, "Tier 4: reliability factors {}", factors.join(", "));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregator::{av, dapa};
    use crate::enricher::{Information, Payload, PublisherType, ReliabilityTable, UserEngagement};

    fn enriched(word_count: u64) -> EnrichedDocument {
        let table = ReliabilityTable::default();
        let f = |n, v| table.factor(n, v).unwrap();
        EnrichedDocument {
            doc_id: "d1".into(),
            observe_at: 7200,
            informations: vec![
                Information::new(
                    Payload::Words { tokens: Default::default() },
                    vec![f(FactorName::WordCount, FactorValue::Count(word_count))],
                ),
                Information::new(
                    Payload::PublisherHistory {
                        publisher_id: "p".into(),
                        documents: vec![],
                    },
                    vec![
                        f(FactorName::PublisherType, FactorValue::Publisher(PublisherType::New)),
                        f(FactorName::DocumentCount, FactorValue::Count(0)),
                    ],
                ),
                Information::new(
                    Payload::UserHistory {
                        engagements: vec![UserEngagement { user_id: "u".into(), items: 1 }],
                    },
                    vec![
                        f(FactorName::ItemCount, FactorValue::Count(1)),
                        f(FactorName::ItemPerUser, FactorValue::Real(1.0)),
                        f(FactorName::DocumentAge, FactorValue::Real(2.0 / 24.0)),
                    ],
                ),
            ],
        }
    }

    fn worked_predictions() -> Vec<Prediction> {
        vec![
            Prediction::new("content_words", 0.62, 0.8, vec![InformationKind::Words]),
            Prediction::new("publisher_credibility", 0.50, 0.15, vec![InformationKind::PublisherHistory]),
            Prediction::new("user_credibility", 0.39, 0.07, vec![InformationKind::UserHistory]),
        ]
    }

    #[test]
    fn worked_example_tiers() {
        let preds = worked_predictions();
        let agg = dapa(&preds).unwrap();
        let e = explain(&preds, &enriched(542), &agg).unwrap();
        assert_eq!(e.tier1.model_id, "content_words");
        assert!((e.tier1.share - 0.784).abs() < 1e-3);
        assert_eq!(e.tier2.network, Network::Content);
        assert_eq!(e.tier2.avg_reliability, 0.8);
        assert_eq!(e.tier3.information, InformationKind::Words);
        assert_eq!(
            e.tier4,
            vec![FactorEntry {
                factor: FactorName::WordCount,
                value: FactorValue::Count(542),
                score: 0.8
            }]
        );
        assert!(!e.ties.any());

        let text = render(&e, Format::Text).unwrap();
        for tier in ["Tier 1", "Tier 2", "Tier 3", "Tier 4"] {
            assert!(text.contains(tier));
        }
        assert!(text.contains("78%"));
        assert!(text.contains("word_count = 542"));

        let json = render(&e, Format::Json).unwrap();
        assert_eq!(serde_json::from_str::<Explanation>(&json).unwrap(), e);
    }

    #[test]
    fn single_model_takes_everything() {
        let preds = vec![Prediction::new("user_credibility", 0.3, 0.2, vec![InformationKind::UserHistory])];
        let e = explain(&preds, &enriched(10), &dapa(&preds).unwrap()).unwrap();
        assert_eq!(e.tier1.share, 1.0);
        assert_eq!(e.tier2.network, Network::Context);
        assert_eq!(e.tier4.len(), 3);
    }

    #[test]
    fn ties_break_lexicographically() {
        let preds = vec![
            Prediction::new("zeta", 0.3, 0.5, vec![InformationKind::Words]),
            Prediction::new("alpha", 0.7, 0.5, vec![InformationKind::UserHistory]),
        ];
        let e = explain(&preds, &enriched(50), &dapa(&preds).unwrap()).unwrap();
        assert_eq!(e.tier1.model_id, "alpha");
        assert!(e.ties.tier1);
    }

    #[test]
    fn hybrid_model_groups_by_network() {
        // words 0.4 (content), publisher 0.1 (content), users 0.07 (context)
        let preds = vec![Prediction::new(
            "hybrid",
            0.5,
            0.19,
            vec![InformationKind::UserHistory, InformationKind::PublisherHistory, InformationKind::Words],
        )];
        let e = explain(&preds, &enriched(50), &dapa(&preds).unwrap()).unwrap();
        assert_eq!(e.tier2.network, Network::Content);
        assert!((e.tier2.avg_reliability - 0.25).abs() < 1e-12);
        assert_eq!(e.tier3.information, InformationKind::Words);
    }

    #[test]
    fn rejects_non_dapa_and_empty() {
        let preds = worked_predictions();
        assert!(explain(&preds, &enriched(542), &av(&preds).unwrap()).is_err());
        assert!(explain(&[], &enriched(542), &dapa(&preds).unwrap()).is_err());
    }
}
