//! Versioned on-disk model directory.
//!
//! ```text
//! <model-dir>/
//!   index.json            ModelIndex: descriptors, known entities, file names
//!   <model_id>.json       ModelFile: {format_version, kind, model_id, state}
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{model_from_state, BaseModel, BaseModelDescriptor};
use crate::enricher::KnownEntities;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const INDEX_FILE: &str = "index.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelIndex {
    pub format_version: u32,
    pub known: KnownEntities,
    pub models: Vec<ModelIndexEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelIndexEntry {
    pub kind: String,
    pub file: String,
    pub descriptor: BaseModelDescriptor,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    kind: String,
    model_id: String,
    state: serde_json::Value,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn save_models(
    dir: &Path,
    models: &[Box<dyn BaseModel>],
    descriptors: &[BaseModelDescriptor],
    known: &KnownEntities,
) -> Result<ModelIndex> {
    if models.len() != descriptors.len() {
        return Err(Error::Config("one descriptor per model required".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(models.len());
    for (model, descriptor) in models.iter().zip(descriptors) {
        let file = format!("{}.json", model.model_id());
        write_json(
            &dir.join(&file),
            &ModelFile {
                format_version: MODEL_FORMAT_VERSION,
                kind: model.kind().to_string(),
                model_id: model.model_id().to_string(),
                state: model.state()?,
            },
        )?;
        entries.push(ModelIndexEntry {
            kind: model.kind().to_string(),
            file,
            descriptor: descriptor.clone(),
        });
    }
    let index = ModelIndex {
        format_version: MODEL_FORMAT_VERSION,
        known: known.clone(),
        models: entries,
    };
    write_json(&dir.join(INDEX_FILE), &index)?;
    Ok(index)
}

pub fn load_models(dir: &Path) -> Result<(Vec<Box<dyn BaseModel>>, ModelIndex)> {
    let index: ModelIndex = read_json(&dir.join(INDEX_FILE))?;
    if index.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Config(format!(
            "model index version {} unsupported (expected {MODEL_FORMAT_VERSION})",
            index.format_version
        )));
    }
    let mut models = Vec::with_capacity(index.models.len());
    for entry in &index.models {
        let path = dir.join(&entry.file);
        let file: ModelFile = read_json(&path)?;
        if file.format_version != MODEL_FORMAT_VERSION || file.kind != entry.kind {
            return Err(Error::Config(format!(
                "{}: expected {} v{MODEL_FORMAT_VERSION}, found {} v{}",
                path.display(),
                entry.kind,
                file.kind,
                file.format_version
            )));
        }
        let model = model_from_state(&file.kind, file.state)?;
        if model.model_id() != entry.descriptor.model_id {
            return Err(Error::Config(format!(
                "{}: model id `{}` does not match index entry `{}`",
                path.display(),
                model.model_id(),
                entry.descriptor.model_id
            )));
        }
        models.push(model);
    }
    Ok((models, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enricher::{EnrichedDocument, Information, Payload};
    use crate::models::{standard_model, PublisherCredibility};
    use crate::osmn::Label;

    #[test]
    fn save_then_load() {
        let doc = |p: &str| EnrichedDocument {
            doc_id: p.into(),
            observe_at: 0,
            informations: vec![Information::new(
                Payload::PublisherHistory {
                    publisher_id: p.into(),
                    documents: vec![],
                },
                vec![],
            )],
        };
        let mut model = standard_model(PublisherCredibility::ID).unwrap();
        model
            .train(&[doc("a"), doc("b")], &[Label::FalseNews, Label::TrueNews])
            .unwrap();
        let mut descriptor = BaseModelDescriptor::for_model(model.as_ref());
        descriptor.validation_score = Some(0.75);

        let dir = tempfile::tempdir().unwrap();
        let models = vec![model];
        let saved = save_models(dir.path(), &models, &[descriptor], &KnownEntities::default()).unwrap();
        let (loaded, index) = load_models(dir.path()).unwrap();
        assert_eq!(index, saved);
        assert_eq!(
            loaded[0].prob_false(&doc("a")).unwrap(),
            models[0].prob_false(&doc("a")).unwrap()
        );
    }

    #[test]
    fn untrained_models_cannot_be_saved() {
        let dir = tempfile::tempdir().unwrap();
        let model = standard_model("content_words").unwrap();
        let descriptor = BaseModelDescriptor::for_model(model.as_ref());
        assert!(save_models(dir.path(), &[model], &[descriptor], &KnownEntities::default()).is_err());
    }
}
