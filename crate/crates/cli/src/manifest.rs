//! Output directory bookkeeping.
//!
//! While a run is in progress the directory holds a `RUNNING` marker. A
//! successful run replaces it with `manifest.json`, which lists every file
//! with its SHA-256; a failed run replaces it with `FAILED` holding the error.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const MANIFEST: &str = "manifest.json";
pub const RUNNING: &str = "RUNNING";
pub const FAILED: &str = "FAILED";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config: String,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Files in `dir` that the manifest does not list.
    pub fn orphans(&self, dir: &Path) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(dir)? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if name != MANIFEST && !self.files.iter().any(|f| f.path == name) {
                out.push(name);
            }
        }
        out.sort();
        Ok(out)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    /// Create `root` and mark it as in progress, clearing markers of earlier runs.
    pub fn open(root: &Path, label: &str) -> Result<Self> {
        fs::create_dir_all(root)?;
        for stale in [MANIFEST, FAILED] {
            let p = root.join(stale);
            if p.exists() {
                fs::remove_file(p)?;
            }
        }
        fs::write(root.join(RUNNING), format!("{label}\n"))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.root.join(name), bytes)?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(())
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn finish(mut self, mut manifest: Manifest) -> Result<Manifest> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        manifest.files = std::mem::take(&mut self.files);
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(self.root.join(MANIFEST), text)?;
        fs::remove_file(self.root.join(RUNNING))?;
        Ok(manifest)
    }

    pub fn fail(self, message: &str) -> Result<()> {
        let listed: Vec<&str> = self.files.iter().map(|f| f.path.as_str()).collect();
        fs::write(
            self.root.join(FAILED),
            format!(
                "{message}\npartial outputs: {}\n",
                if listed.is_empty() { "none".into() } else { listed.join(", ") }
            ),
        )?;
        let running = self.root.join(RUNNING);
        if running.exists() {
            fs::remove_file(running)?;
        }
        Ok(())
    }
}
