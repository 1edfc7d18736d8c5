//! Aggregation of base-model probabilities into one probability of falsehood.
//!
//! [`dapa`] weights every model by the mean reliability of the information
//! it consumed *for this document*, so weights move per instance and over
//! time. [`bmacc`] weights by held-out performance (fixed per model),
//! [`max_conf`] picks the most extreme probability and [`av`] is the plain
//! mean.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{BaseModelDescriptor, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Dapa,
    Bmacc,
    Max,
    Av,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Dapa, Strategy::Bmacc, Strategy::Max, Strategy::Av];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Dapa => "dapa",
            Strategy::Bmacc => "bmacc",
            Strategy::Max => "max",
            Strategy::Av => "av",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown aggregator `{s}` (expected dapa, bmacc, max or av)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelContribution {
    pub model_id: String,
    pub prob_false: f64,
    pub weight: f64,
    /// `weight / sum(weights)`.
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub prob_false: f64,
    pub strategy: Strategy,
    pub per_model: Vec<ModelContribution>,
    /// All weights were zero and the unweighted mean was used instead.
    #[serde(default)]
    pub degraded: bool,
    /// `max` found several equally extreme probabilities.
    #[serde(default)]
    pub tie: bool,
}

impl AggregateResult {
    pub fn contribution(&self, model_id: &str) -> Option<&ModelContribution> {
        self.per_model.iter().find(|c| c.model_id == model_id)
    }
}

fn validate(predictions: &[Prediction]) -> Result<()> {
    if predictions.is_empty() {
        return Err(Error::Aggregation("no predictions to aggregate".into()));
    }
    for p in predictions {
        if !(0.0..=1.0).contains(&p.prob_false) {
            return Err(Error::Aggregation(format!(
                "{}: probability {} outside [0, 1]",
                p.model_id, p.prob_false
            )));
        }
    }
    Ok(())
}

fn weighted(predictions: &[Prediction], weights: &[f64], strategy: Strategy) -> Result<AggregateResult> {
    validate(predictions)?;
    if let Some((p, w)) = predictions
        .iter()
        .zip(weights)
        .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
    {
        return Err(Error::Aggregation(format!("{}: invalid weight {w}", p.model_id)));
    }
    let total: f64 = weights.iter().sum();
    let degraded = total <= 0.0;
    let k = predictions.len() as f64;
    let shares: Vec<f64> = if degraded {
        vec![1.0 / k; predictions.len()]
    } else {
        weights.iter().map(|w| w / total).collect()
    };
    let raw = if degraded {
        predictions.iter().map(|p| p.prob_false).sum::<f64>() / k
    } else {
        predictions
            .iter()
            .zip(weights)
            .map(|(p, w)| w * p.prob_false)
            .sum::<f64>()
            / total
    };
    // Rounding can leave the quotient an ulp outside the input hull.
    let (lo, hi) = predictions.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.prob_false), hi.max(p.prob_false))
    });
    Ok(AggregateResult {
        prob_false: raw.clamp(lo, hi),
        strategy,
        per_model: predictions
            .iter()
            .zip(weights)
            .zip(shares)
            .map(|((p, &weight), share)| ModelContribution {
                model_id: p.model_id.clone(),
                prob_false: p.prob_false,
                weight,
                share,
            })
            .collect(),
        degraded,
        tie: false,
    })
}

/// Reliability-weighted mean: `sum(r_b * p_b) / sum(r_b)`.
pub fn dapa(predictions: &[Prediction]) -> Result<AggregateResult> {
    let weights: Vec<f64> = predictions.iter().map(|p| p.model_reliability).collect();
    weighted(predictions, &weights, Strategy::Dapa)
}

/// Mean weighted by each model's validation score.
pub fn bmacc(predictions: &[Prediction], descriptors: &[BaseModelDescriptor]) -> Result<AggregateResult> {
    let scores: HashMap<&str, Option<f64>> = descriptors
        .iter()
        .map(|d| (d.model_id.as_str(), d.validation_score))
        .collect();
    let weights = predictions
        .iter()
        .map(|p| match scores.get(p.model_id.as_str()) {
            Some(Some(score)) => Ok(*score),
            Some(None) => Err(Error::Aggregation(format!("{} has no validation score", p.model_id))),
            None => Err(Error::Aggregation(format!("no descriptor for {}", p.model_id))),
        })
        .collect::<Result<Vec<_>>>()?;
    weighted(predictions, &weights, Strategy::Bmacc)
}

/// Unweighted mean.
pub fn av(predictions: &[Prediction]) -> Result<AggregateResult> {
    weighted(predictions, &vec![1.0; predictions.len()], Strategy::Av)
}

/// The probability furthest from 0.5. Ties go to the lexicographically
/// smallest model id and set [`AggregateResult::tie`].
pub fn max_conf(predictions: &[Prediction]) -> Result<AggregateResult> {
    validate(predictions)?;
    let extremity = |p: &Prediction| (p.prob_false - 0.5).abs();
    let best = predictions.iter().map(extremity).fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<&Prediction> = predictions.iter().filter(|p| extremity(p) == best).collect();
    let chosen = winners
        .iter()
        .min_by(|a, b| a.model_id.cmp(&b.model_id))
        .expect("nonempty");
    let tie = winners.len() > 1;
    Ok(AggregateResult {
        prob_false: chosen.prob_false,
        strategy: Strategy::Max,
        per_model: predictions
            .iter()
            .map(|p| {
                let w = if std::ptr::eq(p, *chosen) { 1.0 } else { 0.0 };
                ModelContribution {
                    model_id: p.model_id.clone(),
                    prob_false: p.prob_false,
                    weight: w,
                    share: w,
                }
            })
            .collect(),
        degraded: false,
        tie,
    })
}

pub fn aggregate(
    strategy: Strategy,
    predictions: &[Prediction],
    descriptors: &[BaseModelDescriptor],
) -> Result<AggregateResult> {
    match strategy {
        Strategy::Dapa => dapa(predictions),
        Strategy::Bmacc => bmacc(predictions, descriptors),
        Strategy::Max => max_conf(predictions),
        Strategy::Av => av(predictions),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preds(rows: &[(&str, f64, f64)]) -> Vec<Prediction> {
        rows.iter()
            .map(|(id, p, r)| Prediction::new(*id, *p, *r, vec![]))
            .collect()
    }

    fn worked() -> Vec<Prediction> {
        preds(&[("ff", 0.62, 0.8), ("pc", 0.50, 0.15), ("uc", 0.39, 0.07)])
    }

    #[test]
    fn dapa_worked_example() {
        let r = dapa(&worked()).unwrap();
        // (0.8*0.62 + 0.15*0.50 + 0.07*0.39) / 1.02 = 0.5983 / 1.02
        assert!((r.prob_false - 0.5983 / 1.02).abs() < 1e-12);
        assert_eq!(format!("{:.2}", r.prob_false), "0.59");
        assert!((r.contribution("ff").unwrap().share - 0.8 / 1.02).abs() < 1e-12);
        assert!(!r.degraded);
    }

    #[test]
    fn dapa_identity_and_uniform() {
        let one = dapa(&preds(&[("a", 0.37, 0.4)])).unwrap();
        assert_eq!(one.prob_false, 0.37);
        let uniform = dapa(&preds(&[("a", 0.2, 0.5), ("b", 0.6, 0.5), ("c", 0.7, 0.5)])).unwrap();
        assert!((uniform.prob_false - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_falls_back_to_mean() {
        let r = dapa(&preds(&[("a", 0.2, 0.0), ("b", 0.8, 0.0), ("c", 0.5, 0.0)])).unwrap();
        assert!(r.degraded);
        assert!((r.prob_false - 0.5).abs() < 1e-15);
        assert!((r.per_model.iter().map(|c| c.share).sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(dapa(&[]).is_err());
        assert!(dapa(&preds(&[("a", 0.2, -0.1)])).is_err());
        assert!(av(&preds(&[("a", 1.2, 0.1)])).is_err());
    }

    #[test]
    fn bmacc_weights_by_validation() {
        let descriptors: Vec<BaseModelDescriptor> = [("ff", 0.85), ("pc", 0.76), ("uc", 0.89)]
            .iter()
            .map(|(id, s)| BaseModelDescriptor {
                model_id: id.to_string(),
                consumes: vec![],
                network: crate::models::ModelNetwork::Content,
                validation_score: Some(*s),
            })
            .collect();
        let r = bmacc(&worked(), &descriptors).unwrap();
        let expected = (0.85 * 0.62 + 0.76 * 0.50 + 0.89 * 0.39) / (0.85 + 0.76 + 0.89);
        assert!((r.prob_false - expected).abs() < 1e-12);
        // 1.2541 / 2.5
        assert!((r.prob_false - 0.50164).abs() < 1e-12);

        assert!(bmacc(&worked(), &descriptors[..2]).is_err());
    }

    #[test]
    fn max_picks_most_extreme() {
        assert_eq!(max_conf(&worked()).unwrap().prob_false, 0.62);
        assert_eq!(max_conf(&preds(&[("a", 0.01, 0.0), ("b", 0.6, 0.0)])).unwrap().prob_false, 0.01);
        let tie = max_conf(&preds(&[("b", 0.5, 0.0), ("a", 0.5, 0.0)])).unwrap();
        assert!(tie.tie);
        assert_eq!(tie.prob_false, 0.5);
        assert_eq!(tie.contribution("a").unwrap().weight, 1.0);
        assert_eq!(tie.contribution("b").unwrap().weight, 0.0);
    }

    #[test]
    fn av_examples() {
        assert!((av(&worked()).unwrap().prob_false - 1.51 / 3.0).abs() < 1e-15);
        assert!((av(&preds(&[("a", 0.3, 0.0), ("b", 0.7, 0.0)])).unwrap().prob_false - 0.5).abs() < 1e-15);
        assert_eq!(av(&preds(&[("a", 0.42, 0.0)])).unwrap().prob_false, 0.42);
    }

    #[test]
    fn strategy_names() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert!("median".parse::<Strategy>().is_err());
    }
}
