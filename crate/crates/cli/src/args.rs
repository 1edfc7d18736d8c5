use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mapx_core::aggregator::Strategy;
use mapx_core::enricher::FactorName;
use mapx_core::explainer::Format;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "mapx", version, about = "Reliability-aware fake news detection with tiered explanations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Generate a labeled synthetic corpus.
    Synth(SynthArgs),
    /// Train base models on every labeled document and save them.
    Train(TrainArgs),
    /// Score documents with a trained ensemble and write predictions.jsonl.
    Predict(PredictArgs),
    /// Print the tiered explanation of the dapa score for one or more documents.
    Explain(ExplainArgs),
    /// Cross-validated F1 and accuracy of every base model and aggregator.
    Evaluate(EvalArgs),
    /// Compare F1 on reliable and unreliable test partitions of one factor.
    Degrade(DegradeArgs),
    /// F1 and reliability at a grid of observation times.
    Temporal(TemporalArgs),
    /// Repeat the run recorded in a run_manifest.json.
    #[serde(skip)]
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Train(_) => "train",
            Command::Predict(_) => "predict",
            Command::Explain(_) => "explain",
            Command::Evaluate(_) => "evaluate",
            Command::Degrade(_) => "degrade",
            Command::Temporal(_) => "temporal",
            Command::Rerun(_) => "rerun",
        }
    }

    /// The directory the command writes into, if any.
    pub fn out_dir_mut(&mut self) -> Option<&mut PathBuf> {
        match self {
            Command::Synth(a) => Some(&mut a.out),
            Command::Train(a) => Some(&mut a.model_dir),
            Command::Predict(a) => Some(&mut a.out),
            Command::Explain(a) => a.out.as_mut(),
            Command::Evaluate(a) => Some(&mut a.out),
            Command::Degrade(a) => Some(&mut a.eval.out),
            Command::Temporal(a) => Some(&mut a.eval.out),
            Command::Rerun(_) => None,
        }
    }

    /// Input paths, for making a recorded invocation independent of the
    /// working directory.
    pub fn input_paths_mut(&mut self) -> Vec<&mut PathBuf> {
        let mut paths: Vec<&mut PathBuf> = Vec::new();
        match self {
            Command::Synth(a) => paths.extend(a.config.as_mut()),
            Command::Train(a) => {
                paths.push(&mut a.data);
                paths.extend(a.reliability.as_mut());
            }
            Command::Predict(a) => {
                paths.push(&mut a.data);
                paths.push(&mut a.model_dir);
                paths.extend(a.reliability.as_mut());
            }
            Command::Explain(a) => {
                paths.push(&mut a.data);
                paths.push(&mut a.model_dir);
                paths.extend(a.reliability.as_mut());
            }
            Command::Evaluate(a) => a.inputs(&mut paths),
            Command::Degrade(a) => a.eval.inputs(&mut paths),
            Command::Temporal(a) => a.eval.inputs(&mut paths),
            Command::Rerun(a) => paths.push(&mut a.manifest),
        }
        paths
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// Output directory for documents.jsonl, items.jsonl and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of documents.
    #[arg(long)]
    pub docs: Option<usize>,
    #[arg(long)]
    pub publishers: Option<usize>,
    #[arg(long)]
    pub users: Option<usize>,
    /// Share of documents labeled false.
    #[arg(long)]
    pub false_rate: Option<f64>,
    /// Signal strength applied to words, publisher and users alike.
    #[arg(long)]
    pub signal: Option<f64>,
    /// Share of publishers with a single document.
    #[arg(long)]
    pub singleton_fraction: Option<f64>,
    /// Mean engagement items per document per hour.
    #[arg(long)]
    pub engagement_rate: Option<f64>,
    /// Base generator configuration (JSON); flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Corpus directory or manifest file.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model_dir: PathBuf,
    /// Base models to train.
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    /// Seed of the train/validation holdout.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Share of labeled documents held out to weight BMAcc.
    #[arg(long, default_value_t = 0.125)]
    pub validation: f64,
    /// Train on items visible this many hours after publication; all items when absent.
    #[arg(long)]
    pub at_hours: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Reliability lookup table (JSON); the built-in table when absent.
    #[arg(long)]
    pub reliability: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "dapa")]
    pub aggregator: Strategy,
    /// Subset of the trained models to aggregate.
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    /// Observe each document this many hours after publication; all items when absent.
    #[arg(long)]
    pub at_hours: Option<f64>,
    /// Attach the tiered explanation to every record (dapa only).
    #[arg(long)]
    pub explain: bool,
    /// Documents to score; every document when absent.
    #[arg(long, value_delimiter = ',')]
    pub docs: Option<Vec<String>>,
    #[arg(long)]
    pub reliability: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExplainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model_dir: PathBuf,
    /// Documents to explain.
    #[arg(long, value_delimiter = ',', required = true)]
    pub docs: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    #[arg(long)]
    pub at_hours: Option<f64>,
    #[arg(long, default_value = "text")]
    pub format: Format,
    /// Also write the explanations and a run manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub reliability: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Aggregators to compare.
    #[arg(long, value_delimiter = ',')]
    pub aggregator: Option<Vec<Strategy>>,
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    /// Observe test documents this many hours after publication.
    #[arg(long)]
    pub at_hours: Option<f64>,
    /// Observe training documents this many hours after publication.
    #[arg(long)]
    pub train_at_hours: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub reliability: Option<PathBuf>,
    /// Base evaluation configuration (JSON); flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl EvalArgs {
    fn inputs<'a>(&'a mut self, paths: &mut Vec<&'a mut PathBuf>) {
        paths.push(&mut self.data);
        paths.extend(self.reliability.as_mut());
        paths.extend(self.config.as_mut());
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DegradeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub eval: EvalArgs,
    /// publisher_type, item_count or item_per_user.
    #[arg(long, default_value = "publisher_type")]
    pub factor: FactorName,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TemporalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub eval: EvalArgs,
    /// Hours after publication; defaults to 0,1,6,24,72,168.
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    /// A run_manifest.json written by an earlier run.
    pub manifest: PathBuf,
    /// Write here instead of the manifest's own directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
