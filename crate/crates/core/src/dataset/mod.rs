//! Corpus files: JSON Lines, one record per line, UTF-8.
//!
//! `documents.jsonl` holds [`Document`] records
//! (`doc_id, publisher_id, text, publish_time, label?`) and `items.jsonl`
//! holds [`Item`] records
//! (`item_id, doc_id, user_id, timestamp, kind, parent_item_id?, text?`).
//! Item records of kind `friendship` are accepted and skipped. A
//! [`CorpusManifest`] JSON file names both files; a bare directory
//! containing them works too.

mod synth;

pub use synth::{generate_synthetic, SignalStrengths, SynthConfig};

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::osmn::{Corpus, Document, Item};

pub const DOCUMENTS_FILE: &str = "documents.jsonl";
pub const ITEMS_FILE: &str = "items.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub name: String,
    /// Relative paths resolve against the manifest's directory.
    pub documents_path: PathBuf,
    pub items_path: PathBuf,
    #[serde(default = "default_label_semantics")]
    pub label_semantics: BTreeMap<String, String>,
}

fn default_label_semantics() -> BTreeMap<String, String> {
    [("0", "true-news"), ("1", "false-news")]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

impl CorpusManifest {
    pub fn new(name: impl Into<String>) -> Self {
        CorpusManifest {
            name: name.into(),
            documents_path: DOCUMENTS_FILE.into(),
            items_path: ITEMS_FILE.into(),
            label_semantics: default_label_semantics(),
        }
    }

    /// Reads a manifest and resolves its paths against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: CorpusManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        manifest.documents_path = base.join(&manifest.documents_path);
        manifest.items_path = base.join(&manifest.items_path);
        Ok(manifest)
    }
}

#[derive(Deserialize)]
struct KindProbe<'a> {
    #[serde(borrow)]
    kind: Option<&'a str>,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path, skip_friendship: bool) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        };
        if skip_friendship {
            let probe: KindProbe = serde_json::from_str(line).map_err(parse_err)?;
            if probe.kind == Some("friendship") {
                continue;
            }
        }
        records.push(serde_json::from_str(line).map_err(parse_err)?);
    }
    Ok(records)
}

pub fn load_corpus(manifest: &CorpusManifest) -> Result<Corpus> {
    let documents: Vec<Document> = read_jsonl(&manifest.documents_path, false)?;
    let items: Vec<Item> = read_jsonl(&manifest.items_path, true)?;
    Corpus::build(documents, items)
}

/// Loads from a manifest file, or from a directory holding
/// `manifest.json` or the two default JSONL files.
pub fn load_path(path: &Path) -> Result<Corpus> {
    if path.is_dir() {
        let manifest_path = path.join(MANIFEST_FILE);
        if manifest_path.is_file() {
            return load_corpus(&CorpusManifest::from_file(&manifest_path)?);
        }
        let mut manifest = CorpusManifest::new(path.display().to_string());
        manifest.documents_path = path.join(DOCUMENTS_FILE);
        manifest.items_path = path.join(ITEMS_FILE);
        load_corpus(&manifest)
    } else {
        load_corpus(&CorpusManifest::from_file(path)?)
    }
}

fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, records: impl Iterator<Item = &'a T>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Writes both JSONL files and a manifest into `dir`, in identifier order.
pub fn save_corpus(corpus: &Corpus, dir: &Path, name: &str) -> Result<CorpusManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_jsonl(&dir.join(DOCUMENTS_FILE), corpus.documents())?;
    write_jsonl(&dir.join(ITEMS_FILE), corpus.items())?;
    let manifest = CorpusManifest::new(name);
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, docs: &str, items: &str) {
        fs::write(dir.join(DOCUMENTS_FILE), docs).unwrap();
        fs::write(dir.join(ITEMS_FILE), items).unwrap();
    }

    #[test]
    fn two_documents_no_items() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            concat!(
                r#"{"doc_id":"d1","publisher_id":"p1","text":"hello world","publish_time":100,"label":0}"#,
                "\n",
                r#"{"doc_id":"d2","publisher_id":"p2","text":"","publish_time":200}"#,
                "\n"
            ),
            "",
        );
        let corpus = load_path(dir.path()).unwrap();
        assert_eq!(corpus.document_count(), 2);
        assert_eq!(corpus.item_count(), 0);
        assert_eq!(corpus.document("d2").unwrap().label, None);
    }

    #[test]
    fn missing_field_names_line() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            r#"{"doc_id":"d1","publisher_id":"p1","text":"x","publish_time":0}"#,
            concat!(
                r#"{"item_id":"z1","doc_id":"d1","user_id":"u1","timestamp":5,"kind":"post"}"#,
                "\n\n",
                r#"{"item_id":"z2","doc_id":"d1","timestamp":6,"kind":"like"}"#,
                "\n"
            ),
        );
        let err = load_path(dir.path()).unwrap_err();
        match err {
            Error::Parse { line, message, path } => {
                assert_eq!(line, 3);
                assert!(message.contains("user_id"), "{message}");
                assert!(path.ends_with(ITEMS_FILE));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn friendship_records_skipped() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            r#"{"doc_id":"d1","publisher_id":"p1","text":"x","publish_time":0}"#,
            concat!(
                r#"{"kind":"friendship","user_id":"u1","friend_id":"u2"}"#,
                "\n",
                r#"{"item_id":"z1","doc_id":"d1","user_id":"u1","timestamp":5,"kind":"share"}"#,
            ),
        );
        assert_eq!(load_path(dir.path()).unwrap().item_count(), 1);
    }

    #[test]
    fn integrity_failure_surfaces() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            r#"{"doc_id":"d1","publisher_id":"p1","text":"x","publish_time":0}"#,
            r#"{"item_id":"z1","doc_id":"d7","user_id":"u1","timestamp":5,"kind":"post"}"#,
        );
        assert!(matches!(load_path(dir.path()), Err(Error::Integrity(_))));
    }

    #[test]
    fn manifest_paths_are_relative() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("raw")).unwrap();
        write(
            &dir.path().join("raw"),
            r#"{"doc_id":"d1","publisher_id":"p1","text":"x","publish_time":0,"label":1}"#,
            "",
        );
        let manifest = dir.path().join("corpus.json");
        fs::write(
            &manifest,
            r#"{"name":"tiny","documents_path":"raw/documents.jsonl","items_path":"raw/items.jsonl"}"#,
        )
        .unwrap();
        let corpus = load_path(&manifest).unwrap();
        assert_eq!(corpus.document_count(), 1);
        assert!(load_path(&dir.path().join("absent.json")).is_err());
    }
}
