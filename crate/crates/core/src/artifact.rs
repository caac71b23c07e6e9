//! Versioned JSON persistence for emoji vector sets.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knowledge_base::Strategy;
use crate::vectorizer::EmojiVectorSet;

pub const ARTIFACT_FORMAT: &str = "emojirec-vectors";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorArtifact {
    pub format: String,
    pub version: u32,
    pub dimension: usize,
    pub inventory_version: String,
    pub sets: Vec<EmojiVectorSet>,
}

impl VectorArtifact {
    pub fn new(dimension: usize, inventory_version: impl Into<String>, sets: Vec<EmojiVectorSet>) -> Self {
        VectorArtifact {
            format: ARTIFACT_FORMAT.to_string(),
            version: ARTIFACT_VERSION,
            dimension,
            inventory_version: inventory_version.into(),
            sets,
        }
    }

    pub fn set(&self, strategy: Strategy) -> Option<&EmojiVectorSet> {
        self.sets.iter().find(|s| s.strategy == strategy)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let artifact: VectorArtifact =
            serde_json::from_str(text).map_err(|e| Error::InvalidArtifact(e.to_string()))?;
        if artifact.format != ARTIFACT_FORMAT {
            return Err(Error::InvalidArtifact(format!("unexpected format {:?}", artifact.format)));
        }
        if artifact.version != ARTIFACT_VERSION {
            return Err(Error::InvalidArtifact(format!("unsupported version {}", artifact.version)));
        }
        for set in &artifact.sets {
            if set.dimension != artifact.dimension {
                return Err(Error::InvalidArtifact(format!(
                    "{} set has dimension {}, artifact declares {}",
                    set.strategy, set.dimension, artifact.dimension
                )));
            }
            set.validate()?;
        }
        Ok(artifact)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
