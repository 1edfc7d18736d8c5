use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use mapx_core::aggregator::Strategy;
use mapx_core::dataset::{generate_synthetic, load_path, save_corpus, SignalStrengths, SynthConfig};
use mapx_core::enricher::ReliabilityTable;
use mapx_core::eval::folds::holdout_split;
use mapx_core::eval::{degrade, evaluate, temporal, write_csv, write_json, EvalConfig, DEFAULT_SNAPSHOTS};
use mapx_core::explainer::{render, Format};
use mapx_core::models::STANDARD_MODELS;
use mapx_core::osmn::Corpus;
use mapx_core::pipeline::{observe_time, DocumentScore, Ensemble};
use serde::Serialize;

use crate::args::{Command, DegradeArgs, EvalArgs, ExplainArgs, PredictArgs, SynthArgs, TemporalArgs, TrainArgs};
use crate::manifest::{absolutize, RunManifest};

pub fn run(mut command: Command) -> Result<()> {
    if let Command::Rerun(args) = &command {
        let manifest = RunManifest::read(&args.manifest)?;
        let manifest_dir = if args.manifest.is_dir() {
            args.manifest.clone()
        } else {
            args.manifest.parent().map(Path::to_path_buf).unwrap_or_default()
        };
        let out = args.out.clone().unwrap_or(manifest_dir);
        return run(manifest.replay(out)?);
    }
    absolutize(&mut command)?;
    match &command {
        Command::Synth(a) => synth(&command, a),
        Command::Train(a) => train(&command, a),
        Command::Predict(a) => predict(&command, a),
        Command::Explain(a) => explain(&command, a),
        Command::Evaluate(a) => run_evaluate(&command, a),
        Command::Degrade(a) => run_degrade(&command, a),
        Command::Temporal(a) => run_temporal(&command, a),
        Command::Rerun(_) => unreachable!("handled above"),
    }
}

fn to_value<T: Serialize>(value: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(value)?)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    load_path(path).with_context(|| format!("loading corpus from {}", path.display()))
}

fn load_table(path: Option<&Path>) -> Result<ReliabilityTable> {
    match path {
        Some(p) => ReliabilityTable::from_json_file(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ReliabilityTable::default()),
    }
}

fn load_ensemble(dir: &Path, models: Option<&[String]>) -> Result<Ensemble> {
    let ensemble = Ensemble::load(dir).with_context(|| format!("loading models from {}", dir.display()))?;
    match models {
        Some(ids) => Ok(ensemble.select(ids)?),
        None => Ok(ensemble),
    }
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn synth(command: &Command, a: &SynthArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SynthConfig::default(),
    };
    config.seed = a.seed;
    if let Some(n) = a.docs {
        config.n_documents = n;
    }
    if let Some(n) = a.publishers {
        config.n_publishers = n;
    }
    if let Some(n) = a.users {
        config.n_users = n;
    }
    if let Some(r) = a.false_rate {
        config.false_rate = r;
    }
    if let Some(s) = a.signal {
        config.signal_strengths = SignalStrengths::uniform(s);
    }
    if let Some(f) = a.singleton_fraction {
        config.singleton_publisher_fraction = f;
    }
    if let Some(r) = a.engagement_rate {
        config.engagement_rate_per_hour = r;
    }
    let corpus = generate_synthetic(&config)?;
    create_dir(&a.out)?;
    save_corpus(&corpus, &a.out, &format!("synthetic-seed-{}", a.seed))?;
    RunManifest::new(
        command,
        Some(a.seed),
        to_value(&config)?,
        &["documents.jsonl", "items.jsonl", "manifest.json"],
    )
    .write(&a.out)?;
    println!(
        "wrote {} documents and {} items to {}",
        corpus.document_count(),
        corpus.item_count(),
        a.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct TrainConfig<'a> {
    models: &'a [String],
    validation: f64,
    at_hours: Option<f64>,
    threshold: f64,
    n_train: usize,
    n_validation: usize,
    table: &'a ReliabilityTable,
}

fn train(command: &Command, a: &TrainArgs) -> Result<()> {
    let corpus = load_corpus(&a.data)?;
    let table = load_table(a.reliability.as_deref())?;
    let models: Vec<String> = match &a.models {
        Some(m) => m.clone(),
        None => STANDARD_MODELS.iter().map(|s| s.to_string()).collect(),
    };
    let labeled: Vec<String> = corpus.labeled_documents().map(|d| d.doc_id.clone()).collect();
    let (train_ids, val_ids) = holdout_split(&labeled, a.validation, a.seed)?;
    let ensemble = Ensemble::train(&corpus, &table, &models, &train_ids, &val_ids, a.at_hours, a.threshold)?;
    create_dir(&a.model_dir)?;
    ensemble.save(&a.model_dir)?;

    let mut outputs = vec!["index.json".to_string()];
    outputs.extend(ensemble.model_ids().map(|id| format!("{id}.json")));
    let outputs: Vec<&str> = outputs.iter().map(String::as_str).collect();
    let config = TrainConfig {
        models: &models,
        validation: a.validation,
        at_hours: a.at_hours,
        threshold: a.threshold,
        n_train: train_ids.len(),
        n_validation: val_ids.len(),
        table: &table,
    };
    RunManifest::new(command, Some(a.seed), to_value(&config)?, &outputs).write(&a.model_dir)?;
    for d in ensemble.descriptors() {
        match d.validation_score {
            Some(f1) => println!("{:<24} validation F1 {f1:.3}", d.model_id),
            None => println!("{:<24} no validation documents", d.model_id),
        }
    }
    Ok(())
}

fn score_documents(
    corpus: &Corpus,
    table: &ReliabilityTable,
    ensemble: &Ensemble,
    doc_ids: &[String],
    aggregator: Strategy,
    at_hours: Option<f64>,
    with_explanation: bool,
) -> Result<Vec<DocumentScore>> {
    if let Some(h) = at_hours {
        if !(h >= 0.0 && h.is_finite()) {
            bail!("--at-hours must be a non-negative number, got {h}");
        }
    }
    let enricher = ensemble.enricher(corpus, table);
    doc_ids
        .iter()
        .map(|id| {
            let publish = corpus.document(id)?.publish_time;
            let doc = enricher.enrich(id, observe_time(publish, at_hours))?;
            Ok(ensemble.score(&doc, aggregator, with_explanation)?)
        })
        .collect()
}

#[derive(Serialize)]
struct ScoreConfig<'a> {
    aggregator: Strategy,
    models: Vec<&'a str>,
    at_hours: Option<f64>,
    table: &'a ReliabilityTable,
}

fn predict(command: &Command, a: &PredictArgs) -> Result<()> {
    let corpus = load_corpus(&a.data)?;
    let table = load_table(a.reliability.as_deref())?;
    let ensemble = load_ensemble(&a.model_dir, a.models.as_deref())?;
    let doc_ids: Vec<String> = match &a.docs {
        Some(ids) => ids.clone(),
        None => corpus.documents().map(|d| d.doc_id.clone()).collect(),
    };
    let scores = score_documents(&corpus, &table, &ensemble, &doc_ids, a.aggregator, a.at_hours, a.explain)?;

    create_dir(&a.out)?;
    write_jsonl(&a.out.join("predictions.jsonl"), &scores)?;
    let config = ScoreConfig {
        aggregator: a.aggregator,
        models: ensemble.model_ids().collect(),
        at_hours: a.at_hours,
        table: &table,
    };
    RunManifest::new(command, None, to_value(&config)?, &["predictions.jsonl"]).write(&a.out)?;
    let flagged = scores.iter().filter(|s| s.prob_false >= 0.5).count();
    println!(
        "scored {} documents ({flagged} at or above 0.5) into {}",
        scores.len(),
        a.out.join("predictions.jsonl").display()
    );
    Ok(())
}

fn explain(command: &Command, a: &ExplainArgs) -> Result<()> {
    let corpus = load_corpus(&a.data)?;
    let table = load_table(a.reliability.as_deref())?;
    let ensemble = load_ensemble(&a.model_dir, a.models.as_deref())?;
    let scores = score_documents(&corpus, &table, &ensemble, &a.docs, Strategy::Dapa, a.at_hours, true)?;
    let explanations: Vec<_> = scores.into_iter().filter_map(|s| s.explanation).collect();

    let rendered = match a.format {
        Format::Text => explanations
            .iter()
            .map(|e| render(e, Format::Text))
            .collect::<mapx_core::Result<Vec<_>>>()?
            .join("\n"),
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&explanations)?;
            text.push('\n');
            text
        }
    };
    print!("{rendered}");

    if let Some(out) = &a.out {
        create_dir(out)?;
        let file = match a.format {
            Format::Text => "explanations.txt",
            Format::Json => "explanations.json",
        };
        fs::write(out.join(file), &rendered).with_context(|| format!("writing {}", out.join(file).display()))?;
        let config = ScoreConfig {
            aggregator: Strategy::Dapa,
            models: ensemble.model_ids().collect(),
            at_hours: a.at_hours,
            table: &table,
        };
        RunManifest::new(command, None, to_value(&config)?, &[file]).write(out)?;
    }
    Ok(())
}

fn eval_config(a: &EvalArgs) -> Result<EvalConfig> {
    let mut config = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => EvalConfig::default(),
    };
    if let Some(f) = a.folds {
        config.folds = f;
    }
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(aggs) = &a.aggregator {
        config.aggregators = aggs.clone();
    }
    if let Some(m) = &a.models {
        config.models = m.clone();
    }
    if a.at_hours.is_some() {
        config.test_at_hours = a.at_hours;
    }
    if a.train_at_hours.is_some() {
        config.train_at_hours = a.train_at_hours;
    }
    if let Some(t) = a.threshold {
        config.threshold = t;
    }
    if let Some(p) = &a.reliability {
        config.table = load_table(Some(p))?;
    }
    config.validate()?;
    Ok(config)
}

fn run_evaluate(command: &Command, a: &EvalArgs) -> Result<()> {
    let corpus = load_corpus(&a.data)?;
    let config = eval_config(a)?;
    let mut report = evaluate(&corpus, &config)?;
    let records = std::mem::take(&mut report.records);

    create_dir(&a.out)?;
    write_csv(&a.out.join("metrics.csv"), report.rows())?;
    write_json(&a.out.join("metrics.json"), &report)?;
    write_jsonl(&a.out.join("predictions.jsonl"), &records)?;
    RunManifest::new(
        command,
        Some(config.seed),
        to_value(&config)?,
        &["metrics.csv", "metrics.json", "predictions.jsonl"],
    )
    .write(&a.out)?;

    println!("{:<24} {:>8} {:>8} {:>10}", "system", "F1", "+/-", "accuracy");
    for s in &report.summary {
        println!("{:<24} {:>8.3} {:>8.3} {:>10.3}", s.system, s.f1_mean, s.f1_std, s.accuracy_mean);
    }
    Ok(())
}

fn run_degrade(command: &Command, a: &DegradeArgs) -> Result<()> {
    let corpus = load_corpus(&a.eval.data)?;
    let config = eval_config(&a.eval)?;
    let report = degrade(&corpus, &config, a.factor)?;

    create_dir(&a.eval.out)?;
    write_csv(&a.eval.out.join("degradation.csv"), &report.rows)?;
    write_json(&a.eval.out.join("degradation.json"), &report)?;
    RunManifest::new(
        command,
        Some(config.seed),
        to_value(&config)?,
        &["degradation.csv", "degradation.json"],
    )
    .write(&a.eval.out)?;

    println!(
        "{}: {} reliable, {} unreliable test documents",
        report.factor, report.n_reliable, report.n_unreliable
    );
    for r in &report.rows {
        println!(
            "{:<24} {:.3} -> {:.3} ({:+.3}) [{}]",
            r.system, r.f1_reliable, r.f1_unreliable, r.diff, r.rank
        );
    }
    Ok(())
}

fn run_temporal(command: &Command, a: &TemporalArgs) -> Result<()> {
    let corpus = load_corpus(&a.eval.data)?;
    let config = eval_config(&a.eval)?;
    let snapshots = a.snapshots.clone().unwrap_or_else(|| DEFAULT_SNAPSHOTS.to_vec());
    let report = temporal(&corpus, &config, &snapshots)?;

    create_dir(&a.eval.out)?;
    write_csv(&a.eval.out.join("temporal.csv"), report.rows())?;
    write_json(&a.eval.out.join("temporal.json"), &report)?;
    RunManifest::new(
        command,
        Some(config.seed),
        to_value(&config)?,
        &["temporal.csv", "temporal.json"],
    )
    .write(&a.eval.out)?;

    let header: Vec<String> = snapshots.iter().map(|t| format!("{t:>7}h")).collect();
    println!("{:<24} {}", "F1 at", header.join(" "));
    for s in &report.series {
        let cells: Vec<String> = s.f1.iter().map(|f| format!("{f:>8.3}")).collect();
        println!("{:<24} {}", s.system, cells.join(" "));
    }
    Ok(())
}
