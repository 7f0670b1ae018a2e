//! Persisted record of which frames were selected, why, and into which split.
//!
//! Serialization is canonical: fixed key order (struct order), two-space
//! indentation, no floats anywhere, so parse -> serialize is byte-identical.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::SceneCategory;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("duplicate entry at /entries/{index}: (video {video_id}, frame {frame_index}, negative {is_negative})")]
    Duplicate {
        index: usize,
        video_id: u32,
        frame_index: u32,
        is_negative: bool,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    Paper,
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub video_id: u32,
    pub frame_index: u32,
    pub category: Option<SceneCategory>,
    pub split: Split,
    pub is_negative: bool,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleManifest {
    pub seed: u64,
    pub mode: SampleMode,
    pub tool_version: String,
    pub entries: Vec<ManifestEntry>,
}

impl SampleManifest {
    pub fn new(seed: u64, mode: SampleMode) -> Self {
        SampleManifest {
            seed,
            mode,
            tool_version: TOOL_VERSION.to_string(),
            entries: Vec::new(),
        }
    }

    /// Entries must be unique on (video_id, frame_index, is_negative).
    pub fn validate(&self) -> Result<(), ManifestError> {
        let mut seen = std::collections::HashSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            if !seen.insert((e.video_id, e.frame_index, e.is_negative)) {
                return Err(ManifestError::Duplicate {
                    index: i,
                    video_id: e.video_id,
                    frame_index: e.frame_index,
                    is_negative: e.is_negative,
                });
            }
        }
        Ok(())
    }

    pub fn to_canonical_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("manifest is always serializable");
        out.push(b'\n');
        out
    }
}

pub fn read_manifest(bytes: &[u8]) -> Result<SampleManifest, ManifestError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let manifest: SampleManifest =
        serde_path_to_error::deserialize(de).map_err(|e| ManifestError::Schema {
            path: format!("/{}", e.path().to_string().replace('.', "/")),
            message: e.inner().to_string(),
        })?;
    manifest.validate()?;
    Ok(manifest)
}

pub fn read_manifest_file(path: &Path) -> Result<SampleManifest, ManifestError> {
    read_manifest(&std::fs::read(path)?)
}

pub fn write_manifest_file(path: &Path, manifest: &SampleManifest) -> Result<(), ManifestError> {
    manifest.validate()?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&manifest.to_canonical_json())?;
    Ok(())
}
