use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn mapx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mapx"))
        .args(args)
        .output()
        .expect("mapx runs")
}

fn ok(args: &[&str]) -> String {
    let out = mapx(args);
    assert!(
        out.status.success(),
        "mapx {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/worked_example")
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            for (k, v) in tree(&path) {
                files.insert(Path::new(path.file_name().unwrap()).join(k), v);
            }
        } else {
            files.insert(PathBuf::from(path.file_name().unwrap()), fs::read(&path).unwrap());
        }
    }
    files
}

fn read_jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn validator(name: &str) -> jsonschema::Validator {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas");
    let load = |file: &str| -> Value { serde_json::from_str(&fs::read_to_string(dir.join(file)).unwrap()).unwrap() };
    let explanation = jsonschema::Resource::from_contents(load("explanation.schema.json")).unwrap();
    jsonschema::options()
        .with_resource("json-schema:///explanation.schema.json", explanation)
        .build(&load(name))
        .unwrap()
}

fn assert_valid(validator: &jsonschema::Validator, value: &Value) {
    let errors: Vec<String> = validator.iter_errors(value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?} in {value}");
}

#[test]
fn synth_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        ok(&["synth", "--seed", "7", "--docs", "200", "--out", s(dir)]);
    }
    let (ta, tb) = (tree(&a), tree(&b));
    assert_eq!(
        ta.keys().collect::<Vec<_>>(),
        ["documents.jsonl", "items.jsonl", "manifest.json", "run_manifest.json"]
    );
    assert_eq!(ta, tb);

    ok(&["synth", "--seed", "8", "--docs", "200", "--out", s(&b)]);
    assert_ne!(ta, tree(&b));
}

#[test]
fn predict_reproduces_the_worked_example() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pred");
    let data = fixture();
    let models = data.join("models");
    ok(&[
        "predict", "--data", s(&data), "--model-dir", s(&models), "--out", s(&out),
        "--aggregator", "dapa", "--explain", "--at-hours", "2",
    ]);
    let records = read_jsonl(&out.join("predictions.jsonl"));
    assert_eq!(records.len(), 1);
    let r = &records[0];
    let prob = r["prob_false"].as_f64().unwrap();
    assert_eq!(format!("{prob:.2}"), "0.59");
    // The fixture's unknown publisher scores 0.1 rather than 0.15, so the
    // words model carries 0.8 / 0.97 of the weight.
    let e = &r["explanation"];
    assert_eq!(e["tier1"]["model_id"], "content_words");
    assert!((e["tier1"]["share"].as_f64().unwrap() - 0.8 / 0.97).abs() < 1e-9);
    assert_eq!(e["tier3"]["information"], "words");
    assert_eq!(e["tier4"][0]["factor"], "word_count");
    assert_eq!(e["tier4"][0]["value"], 542);
    assert!(out.join("run_manifest.json").is_file());
}

#[test]
fn explain_renders_text_and_json() {
    let data = fixture();
    let models = data.join("models");
    let base = ["explain", "--data", s(&data), "--model-dir", s(&models), "--docs", "d1", "--at-hours", "2"];
    let text = ok(&base);
    assert!(text.contains("probability of falsehood 0.59"), "{text}");
    assert!(text.contains("Tier 1: content_words contributed 82%"), "{text}");
    assert!(text.contains("word_count = 542 (score 0.80)"), "{text}");

    let mut args = base.to_vec();
    args.extend(["--format", "json"]);
    let json: Value = serde_json::from_str(&ok(&args)).unwrap();
    let v = validator("explanation.schema.json");
    for e in json.as_array().unwrap() {
        assert_valid(&v, e);
    }
    assert_eq!(json[0]["tier2"]["network"], "content");
}

#[test]
fn evaluate_rejects_a_corpus_smaller_than_the_fold_count() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("tiny");
    ok(&["synth", "--seed", "1", "--docs", "5", "--out", s(&data)]);
    let out = mapx(&["evaluate", "--data", s(&data), "--out", s(&tmp.path().join("e")), "--folds", "10"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("too few"), "{stderr}");
}

#[test]
fn bad_invocations_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing");
    let cases: Vec<Vec<&str>> = vec![
        vec!["predict", "--no-such-flag"],
        vec!["frobnicate"],
        vec!["predict", "--data", s(&missing), "--model-dir", s(&missing), "--out", s(&missing)],
        vec!["synth", "--out", s(&missing), "--false-rate", "1.5"],
        vec!["degrade", "--data", s(&missing), "--out", s(&missing), "--factor", "colour"],
        vec!["predict", "--data", "x", "--model-dir", "y", "--out", "z", "--aggregator", "median"],
    ];
    for args in cases {
        let out = mapx(&args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty(), "{args:?} printed no diagnostic");
    }
}

#[test]
fn pipeline_outputs_validate_and_rerun_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |name: &str| tmp.path().join(name);
    let (data, models) = (p("data"), p("models"));
    ok(&["synth", "--seed", "3", "--docs", "160", "--users", "80", "--out", s(&data)]);
    ok(&["train", "--data", s(&data), "--model-dir", s(&models), "--seed", "1"]);
    ok(&["predict", "--data", s(&data), "--model-dir", s(&models), "--out", s(&p("pred")), "--explain"]);
    ok(&["evaluate", "--data", s(&data), "--out", s(&p("eval")), "--folds", "4", "--seed", "2"]);
    ok(&["degrade", "--data", s(&data), "--out", s(&p("deg")), "--folds", "4", "--factor", "publisher_type"]);
    ok(&["temporal", "--data", s(&data), "--out", s(&p("temp")), "--folds", "4", "--snapshots", "0,24"]);

    let prediction = validator("prediction.schema.json");
    let scored = read_jsonl(&p("pred").join("predictions.jsonl"));
    assert_eq!(scored.len(), 160);
    for r in &scored {
        assert_valid(&prediction, r);
    }
    let mut broken = scored[0].clone();
    broken["explanation"]["tier2"]["network"] = "social".into();
    assert!(!prediction.is_valid(&broken));
    broken = scored[0].clone();
    broken["prob_false"] = 1.5.into();
    assert!(!prediction.is_valid(&broken));
    let record = validator("test_record.schema.json");
    for r in read_jsonl(&p("eval").join("predictions.jsonl")) {
        assert_valid(&record, &r);
    }
    let manifest = validator("run_manifest.schema.json");
    for dir in ["data", "models", "pred", "eval", "deg", "temp"] {
        let m: Value = serde_json::from_str(&fs::read_to_string(p(dir).join("run_manifest.json")).unwrap()).unwrap();
        assert_valid(&manifest, &m);
        for file in m["outputs"].as_array().unwrap() {
            assert!(p(dir).join(file.as_str().unwrap()).is_file(), "{dir}: {file}");
        }
    }

    let csv = fs::read_to_string(p("temp").join("temporal.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "snapshot_hours,system,f1,accuracy,mean_reliability");
    assert_eq!(csv.lines().count(), 1 + 2 * 7);

    for dir in ["data", "models", "pred", "eval", "deg", "temp"] {
        let again = p(&format!("{dir}-again"));
        ok(&["rerun", s(&p(dir).join("run_manifest.json")), "--out", s(&again)]);
        assert_eq!(tree(&p(dir)), tree(&again), "{dir}");
    }
}
