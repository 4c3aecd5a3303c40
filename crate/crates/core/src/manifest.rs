//! Run manifests: everything needed to re-derive an output file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::anthropometry::Mode;
use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// An input file identified by path and content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRef {
    pub path: PathBuf,
    pub sha256: String,
}

impl InputRef {
    pub fn read(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Ok((
            Self {
                path: path.to_path_buf(),
                sha256: sha256_hex(text.as_bytes()),
            },
            text,
        ))
    }

    /// Re-reads the file and fails if its content changed since the manifest was written.
    pub fn reread(&self) -> Result<String> {
        let (now, text) = Self::read(&self.path)?;
        if now.sha256 != self.sha256 {
            return Err(Error::Config(format!(
                "{} changed since the manifest was written (sha256 {} != {})",
                self.path.display(),
                now.sha256,
                self.sha256
            )));
        }
        Ok(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ProfileSource {
    None,
    File { file: InputRef },
    Sampled { table: InputRef, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSource {
    /// Relations taken from the scene file.
    Scene,
    /// Built-in rule lexicon.
    Rules,
    Remote { endpoint: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scene: InputRef,
    pub mode: Mode,
    pub profile: ProfileSource,
    pub backend: BackendSource,
    pub seed: u64,
    pub candidates: usize,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<InputRef>,
    /// Hash of the effective configuration after overrides.
    pub config_hash: String,
}

impl RunManifest {
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("manifest serializes"))
    }
}

/// Manifest plus its hash, as embedded in outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStamp {
    pub manifest: RunManifest,
    pub manifest_hash: String,
}

impl RunStamp {
    pub fn new(manifest: RunManifest) -> Self {
        let manifest_hash = manifest.hash();
        Self {
            manifest,
            manifest_hash,
        }
    }

    pub fn verify(&self) -> Result<()> {
        if self.manifest.hash() == self.manifest_hash {
            Ok(())
        } else {
            Err(Error::Format("embedded manifest does not match its hash".into()))
        }
    }
}
