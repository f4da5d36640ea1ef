//! Output directory handling and run manifests.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::CliError;
use crate::defaults::PhysicalDefaults;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self, CliError> {
        let data = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(Self::of_bytes(path, &data))
    }

    fn of_bytes(path: &Path, data: &[u8]) -> Self {
        Self {
            path: path.display().to_string(),
            sha256: hex(&Sha256::digest(data)),
            bytes: data.len() as u64,
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Files written by one run. Existing files are never replaced without `force`.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    force: bool,
    written: Vec<FileDigest>,
}

impl OutputDir {
    pub fn new(root: impl Into<PathBuf>, force: bool) -> Self {
        Self {
            root: root.into(),
            force,
            written: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Fail before any work is done if a planned file already exists.
    pub fn check(&self, names: &[String]) -> Result<(), CliError> {
        if self.force {
            return Ok(());
        }
        for n in names {
            let p = self.path(n);
            if p.exists() {
                return Err(CliError::Config(format!(
                    "{} exists; pass --force to overwrite",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    fn ensure_root(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.root)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", self.root.display())))
    }

    pub fn write(&mut self, name: &str, data: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        self.ensure_root()?;
        let p = self.path(name);
        if p.exists() && !self.force {
            return Err(CliError::Config(format!("{} exists; pass --force to overwrite", p.display())));
        }
        let data = data.as_ref();
        std::fs::write(&p, data).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        self.written.push(FileDigest::of_bytes(Path::new(name), data));
        Ok(p)
    }

    /// Record a file some other writer has already produced.
    pub fn record(&mut self, name: &str) -> Result<(), CliError> {
        let mut d = FileDigest::of(&self.path(name))?;
        d.path = name.to_string();
        self.written.push(d);
        Ok(())
    }

    pub fn prepare(&self) -> Result<(), CliError> {
        self.ensure_root()
    }

    pub fn written(&self) -> &[FileDigest] {
        &self.written
    }
}

/// Everything needed to reproduce a run. Contains no timestamps, so it is
/// itself byte-identical across repeated deterministic runs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub jobs: usize,
    pub deterministic: bool,
    pub config: serde_json::Value,
    pub defaults: PhysicalDefaults,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub warnings: Vec<String>,
    pub results: serde_json::Value,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
