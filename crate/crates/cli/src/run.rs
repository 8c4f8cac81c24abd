use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Output directory of one run. Files are written whole; nothing carries a
/// timestamp, so reruns with the same config and seed give identical bytes.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create<C: Serialize>(root: &Path, command: &str, config: &C, seed: u64) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let dir = Self {
            root: root.to_path_buf(),
        };
        dir.write("command.txt", format!("{command}\n").as_bytes())?;
        dir.write("config.json", crate::config::to_text(config)?.as_bytes())?;
        dir.write("seed.txt", format!("{seed}\n").as_bytes())?;
        Ok(dir)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        self.write(name, (serde_json::to_string_pretty(value)? + "\n").as_bytes())
    }

    /// A CSV file with a header row.
    pub fn write_csv<R: Serialize>(&self, name: &str, rows: &[R]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        self.write(name, &w.into_inner()?)
    }
}

/// A path from a config, taken relative to the directory of the config file.
pub fn resolve(config_path: Option<&Path>, p: &Path) -> PathBuf {
    match config_path.and_then(Path::parent) {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}
