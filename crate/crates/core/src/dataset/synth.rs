//! Seeded synthetic corpora with controllable label signal per channel.
//!
//! Every publisher and user carries a latent leaning (false-leaning or not).
//! `signal_strengths` decides how strongly each channel reflects the label:
//!
//! * **publisher**: a publisher's false rate is
//!   `base + s * (leaning - base)`, so `s = 1` makes publishers pure and
//!   `s = 0` makes every publisher emit labels at the base rate.
//! * **words**: half the tokens come from a shared neutral vocabulary and
//!   half from one of two slanted vocabularies, the label's own with
//!   probability `(1 + s) / 2`. A single slanted token is decisive at
//!   `s = 1`, so useful mixed settings keep `s` small.
//! * **users**: each engaging user is drawn from the users whose leaning
//!   matches the label with probability `s`, otherwise from everyone.
//!
//! A fraction of documents can come from one-off publishers that own a
//! single document; those are never seen during training, which is what
//! the publisher_type degradation experiment needs.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::osmn::{Corpus, Document, Item, ItemKind, Label, Timestamp, SECONDS_PER_DAY, SECONDS_PER_HOUR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalStrengths {
    pub words: f64,
    pub publisher: f64,
    pub users: f64,
}

impl SignalStrengths {
    pub fn uniform(s: f64) -> Self {
        SignalStrengths {
            words: s,
            publisher: s,
            users: s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Established publishers, each expected to own many documents.
    pub n_publishers: usize,
    pub n_documents: usize,
    pub n_users: usize,
    /// Overall fraction of false documents.
    pub false_rate: f64,
    pub engagement_rate_per_hour: f64,
    pub horizon_hours: f64,
    pub seed: u64,
    pub signal_strengths: SignalStrengths,
    /// Fraction of documents published by one-off publishers.
    pub singleton_publisher_fraction: f64,
    /// False rate among one-off publishers' documents; defaults to
    /// `false_rate`. Established publishers absorb the difference so the
    /// overall rate stays at `false_rate`.
    pub singleton_false_rate: Option<f64>,
    /// Zipf exponent of document counts across established publishers.
    pub publisher_skew: f64,
    pub vocabulary_size: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub start_time: Timestamp,
    pub span_days: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_publishers: 40,
            n_documents: 1000,
            n_users: 400,
            false_rate: 0.3,
            engagement_rate_per_hour: 0.15,
            horizon_hours: 168.0,
            seed: 0,
            signal_strengths: SignalStrengths {
                words: 0.2,
                publisher: 0.7,
                users: 0.6,
            },
            singleton_publisher_fraction: 0.2,
            singleton_false_rate: None,
            publisher_skew: 0.5,
            vocabulary_size: 2000,
            min_words: 5,
            max_words: 1200,
            start_time: 1_577_836_800,
            span_days: 365.0,
        }
    }
}

fn unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in [0, 1], got {x}")))
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("n_publishers", self.n_publishers),
            ("n_documents", self.n_documents),
            ("n_users", self.n_users),
        ] {
            if n == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        unit("false_rate", self.false_rate)?;
        unit("signal_strengths.words", self.signal_strengths.words)?;
        unit("signal_strengths.publisher", self.signal_strengths.publisher)?;
        unit("signal_strengths.users", self.signal_strengths.users)?;
        unit("singleton_publisher_fraction", self.singleton_publisher_fraction)?;
        if let Some(r) = self.singleton_false_rate {
            unit("singleton_false_rate", r)?;
        }
        unit("established false rate", self.established_false_rate())?;
        if !(self.engagement_rate_per_hour >= 0.0 && self.engagement_rate_per_hour.is_finite()) {
            return Err(Error::Config("engagement_rate_per_hour must be non-negative".into()));
        }
        if !(self.horizon_hours > 0.0 && self.horizon_hours.is_finite()) {
            return Err(Error::Config("horizon_hours must be positive".into()));
        }
        if self.vocabulary_size < 4 {
            return Err(Error::Config("vocabulary_size must be at least 4".into()));
        }
        if self.min_words > self.max_words {
            return Err(Error::Config("min_words exceeds max_words".into()));
        }
        if [self.publisher_skew, self.span_days].iter().any(|x| x.is_nan() || *x < 0.0) {
            return Err(Error::Config("publisher_skew and span_days must be non-negative".into()));
        }
        Ok(())
    }

    fn singleton_rate(&self) -> f64 {
        self.singleton_false_rate.unwrap_or(self.false_rate)
    }

    fn established_false_rate(&self) -> f64 {
        let s = self.singleton_publisher_fraction;
        if s >= 1.0 {
            return self.false_rate;
        }
        (self.false_rate - s * self.singleton_rate()) / (1.0 - s)
    }
}

/// Exactly `round(rate * n)` true entries, shuffled.
fn leanings(n: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let k = (rate * n as f64).round() as usize;
    let mut v: Vec<bool> = (0..n).map(|i| i < k).collect();
    v.shuffle(rng);
    v
}

fn label_rate(base: f64, leaning: bool, strength: f64) -> f64 {
    let target = if leaning { 1.0 } else { 0.0 };
    (base + strength * (target - base)).clamp(0.0, 1.0)
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<Corpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let signal = config.signal_strengths;
    let n_docs = config.n_documents;

    // Publishers.
    let established_rate = config.established_false_rate();
    let publisher_leaning = leanings(config.n_publishers, established_rate, &mut rng);
    let weights: Vec<f64> = (1..=config.n_publishers)
        .map(|rank| (rank as f64).powf(-config.publisher_skew))
        .collect();
    let pick_publisher = WeightedIndex::new(&weights).map_err(|e| Error::Config(e.to_string()))?;
    let n_singletons = (config.singleton_publisher_fraction * n_docs as f64).round() as usize;
    let singleton_leaning = leanings(n_singletons, config.singleton_rate(), &mut rng);

    // Vocabulary: [0, q) true-leaning, [q, 2q) false-leaning, rest neutral.
    let quarter = config.vocabulary_size / 4;
    let neutral = config.vocabulary_size - 2 * quarter;

    // Users.
    let user_leaning = leanings(config.n_users, config.false_rate, &mut rng);
    let (false_users, true_users): (Vec<usize>, Vec<usize>) =
        (0..config.n_users).partition(|&u| user_leaning[u]);

    let pub_width = config.n_publishers.max(n_singletons).to_string().len();
    let doc_width = n_docs.to_string().len();
    let user_width = config.n_users.to_string().len();
    let expected_items = config.engagement_rate_per_hour * config.horizon_hours;

    let mut singleton_slots: Vec<bool> = (0..n_docs).map(|i| i < n_singletons).collect();
    singleton_slots.shuffle(&mut rng);
    let mut next_singleton = 0usize;

    let log_min = (config.min_words.max(1) as f64).ln();
    let log_max = (config.max_words.max(1) as f64).ln();

    let mut documents = Vec::with_capacity(n_docs);
    let mut items = Vec::new();
    for (d, &is_singleton) in singleton_slots.iter().enumerate() {
        let (publisher_id, p_false) = if is_singleton {
            let s = next_singleton;
            next_singleton += 1;
            (
                format!("s{s:0pub_width$}"),
                label_rate(config.singleton_rate(), singleton_leaning[s], signal.publisher),
            )
        } else {
            let p = pick_publisher.sample(&mut rng);
            (
                format!("p{p:0pub_width$}"),
                label_rate(established_rate, publisher_leaning[p], signal.publisher),
            )
        };
        let label = if rng.random_bool(p_false) {
            Label::FalseNews
        } else {
            Label::TrueNews
        };

        let n_words = if config.max_words == 0 {
            0
        } else {
            rng.random_range(log_min..=log_max).exp().round() as usize
        };
        let words: Vec<String> = (0..n_words)
            .map(|_| {
                let idx = if rng.random_bool(0.5) {
                    let own = rng.random_bool((1.0 + signal.words) / 2.0);
                    let offset = if label.is_false() == own { quarter } else { 0 };
                    offset + rng.random_range(0..quarter)
                } else {
                    2 * quarter + rng.random_range(0..neutral)
                };
                format!("w{idx}")
            })
            .collect();

        let publish_time = config.start_time
            + (rng.random_range(0.0..=1.0) * config.span_days * SECONDS_PER_DAY) as Timestamp;
        let doc_id = format!("d{d:0doc_width$}");

        // Engagement.
        let popularity: f64 = rng.sample(Exp1);
        let lambda = expected_items * popularity;
        let n_items = if lambda > 0.0 {
            Poisson::new(lambda)
                .map_err(|e| Error::Config(e.to_string()))?
                .sample(&mut rng) as usize
        } else {
            0
        };
        if n_items > 0 {
            let per_user = rng.random_range(1..=12usize);
            let n_engaged = n_items.div_ceil(per_user);
            let aligned = if label.is_false() { &false_users } else { &true_users };
            let engaged: Vec<usize> = (0..n_engaged)
                .map(|_| {
                    if !aligned.is_empty() && rng.random_bool(signal.users) {
                        *aligned.choose(&mut rng).expect("nonempty")
                    } else {
                        rng.random_range(0..config.n_users)
                    }
                })
                .collect();
            let mut owners: Vec<usize> = (0..n_items)
                .map(|i| {
                    if i < n_engaged {
                        engaged[i]
                    } else {
                        engaged[rng.random_range(0..n_engaged)]
                    }
                })
                .collect();
            owners.shuffle(&mut rng);
            let mut offsets: Vec<Timestamp> = (0..n_items)
                .map(|_| (rng.random_range(0.0..=config.horizon_hours) * SECONDS_PER_HOUR) as Timestamp)
                .collect();
            offsets.sort_unstable();

            let mut seen_users = Vec::new();
            let first_item = items.len();
            for (i, (owner, offset)) in owners.into_iter().zip(offsets).enumerate() {
                let item_id = format!("{doc_id}-z{i:05}");
                let (kind, parent_item_id) = if !seen_users.contains(&owner) || i == 0 {
                    seen_users.push(owner);
                    let kind = if rng.random_bool(0.5) { ItemKind::Post } else { ItemKind::Share };
                    (kind, None)
                } else {
                    let parent: &Item = &items[first_item + rng.random_range(0..i)];
                    let kind = if rng.random_bool(0.5) { ItemKind::Comment } else { ItemKind::Like };
                    (kind, Some(parent.item_id.clone()))
                };
                items.push(Item {
                    item_id,
                    doc_id: doc_id.clone(),
                    user_id: format!("u{owner:0user_width$}"),
                    timestamp: publish_time + offset,
                    text: (kind == ItemKind::Comment).then(|| "comment".to_string()),
                    kind,
                    parent_item_id,
                });
            }
        }

        documents.push(Document {
            doc_id,
            publisher_id,
            text: words.join(" "),
            publish_time,
            label: Some(label),
        });
    }

    Corpus::build(documents, items)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_documents: 120,
            n_users: 60,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let a = generate_synthetic(&small(7)).unwrap();
        let b = generate_synthetic(&small(7)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_synthetic(&small(8)).unwrap());
    }

    #[test]
    fn zero_false_rate() {
        let corpus = generate_synthetic(&SynthConfig {
            false_rate: 0.0,
            ..small(1)
        })
        .unwrap();
        assert!(corpus.documents().all(|d| d.label == Some(Label::TrueNews)));
    }

    #[test]
    fn false_fraction_concentrates() {
        let corpus = generate_synthetic(&SynthConfig {
            n_documents: 1000,
            false_rate: 0.3,
            ..SynthConfig::default()
        })
        .unwrap();
        let frac = corpus.labeled_documents().filter(|d| d.label == Some(Label::FalseNews)).count() as f64
            / 1000.0;
        assert!((frac - 0.3).abs() <= 0.05, "false fraction {frac}");
    }

    #[test]
    fn items_stay_within_horizon() {
        let config = small(3);
        let corpus = generate_synthetic(&config).unwrap();
        corpus.check_integrity().unwrap();
        for item in corpus.items() {
            let publish = corpus.document(&item.doc_id).unwrap().publish_time;
            let offset = (item.timestamp - publish) as f64 / SECONDS_PER_HOUR;
            assert!((0.0..=config.horizon_hours).contains(&offset));
        }
    }

    #[test]
    fn singleton_publishers_own_one_document() {
        let corpus = generate_synthetic(&SynthConfig {
            singleton_publisher_fraction: 0.5,
            ..small(4)
        })
        .unwrap();
        let singles = corpus.publishers().filter(|p| p.publisher_id.starts_with('s')).count();
        assert_eq!(singles, 60);
        assert!(corpus
            .publishers()
            .filter(|p| p.publisher_id.starts_with('s'))
            .all(|p| p.document_ids.len() == 1));
    }

    #[test]
    fn invalid_configs() {
        for bad in [
            SynthConfig { false_rate: 1.5, ..small(0) },
            SynthConfig { n_documents: 0, ..small(0) },
            SynthConfig { horizon_hours: 0.0, ..small(0) },
            SynthConfig {
                singleton_publisher_fraction: 0.5,
                singleton_false_rate: Some(1.0),
                false_rate: 0.2,
                ..small(0)
            },
        ] {
            assert!(generate_synthetic(&bad).is_err());
        }
    }
}
