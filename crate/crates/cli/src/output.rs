use std::path::{Path, PathBuf};

use heavy_rmt::io::{sha256_hex, OutputEntry, RunManifest};
use heavy_rmt::Result;
use serde::Serialize;

/// Files of one run plus their manifest.
///
/// Manifest paths are relative to the output directory, so the manifest of
/// a rerun into another directory is byte-identical.
pub struct Run {
    dir: PathBuf,
    stem: String,
    manifest: RunManifest,
}

impl Run {
    pub fn new(dir: &Path, stem: &str, command: &str, config: serde_json::Value, seed: u64, workers: usize) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            stem: stem.to_string(),
            manifest: RunManifest::new(command, config, seed, workers),
        })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        self.manifest.outputs.push(OutputEntry {
            path: PathBuf::from(name),
            sha256: sha256_hex(contents),
        });
        Ok(())
    }

    /// `<stem><suffix>`.
    pub fn write_named(&mut self, suffix: &str, contents: &[u8]) -> Result<()> {
        let name = format!("{}{suffix}", self.stem);
        self.write(&name, contents)
    }

    pub fn write_json<T: Serialize>(&mut self, suffix: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write_named(suffix, text.as_bytes())
    }

    pub fn finish(self) -> Result<()> {
        let path = self.dir.join(format!("{}_manifest.json", self.stem));
        std::fs::write(path, self.manifest.to_json()?)?;
        Ok(())
    }
}
