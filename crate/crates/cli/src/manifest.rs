//! Provenance record written into every output directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::args::Command;

pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub mapx_version: String,
    pub seed: Option<u64>,
    /// The parsed invocation with absolute input paths and the output
    /// directory recorded as `.`, so a manifest reruns from anywhere.
    pub invocation: Command,
    /// Configuration after defaults and overrides were applied.
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    /// Files written, relative to the manifest's directory.
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(
        invocation: &Command,
        seed: Option<u64>,
        config: serde_json::Value,
        outputs: &[&str],
    ) -> Self {
        let mut invocation = invocation.clone();
        if let Some(out) = invocation.out_dir_mut() {
            *out = PathBuf::from(".");
        }
        let inputs = invocation.input_paths_mut().into_iter().map(|p| p.clone()).collect();
        RunManifest {
            command: invocation.name().to_string(),
            mapx_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            invocation,
            config,
            inputs,
            outputs: outputs.iter().map(PathBuf::from).collect(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(RUN_MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let path = if path.is_dir() { path.join(RUN_MANIFEST_FILE) } else { path.to_path_buf() };
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// The recorded invocation, writing into `out`.
    pub fn replay(&self, out: PathBuf) -> Result<Command> {
        let mut command = self.invocation.clone();
        match command.out_dir_mut() {
            Some(dir) => *dir = out,
            None => bail!("the recorded `{}` run wrote no files", self.command),
        }
        Ok(command)
    }
}

/// Makes input paths absolute so the recorded invocation does not depend
/// on the working directory.
pub fn absolutize(command: &mut Command) -> Result<()> {
    for path in command.input_paths_mut() {
        if !path.is_absolute() {
            *path = std::path::absolute(&*path).with_context(|| format!("resolving {}", path.display()))?;
        }
    }
    Ok(())
}
