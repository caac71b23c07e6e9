//! Emoji sense inventory: names, sense words, and sense definitions.
//!
//! The on-disk form is a JSON document:
//!
//! ```json
//! { "version": "1",
//!   "emojis": [ { "codepoint": "U+1F618", "name": "face blowing a kiss",
//!                 "senses": [ { "word": "love", "pos": "noun" } ],
//!                 "definitions": [ "An intense feeling of affection." ] } ] }
//! ```

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding_store::{tokenize, TokenCounts};
use crate::error::{Error, Result};
use crate::text::Preprocessor;

/// Validates and normalizes a codepoint sequence such as `"u+1f468 U+200D"`
/// into `"U+1F468 U+200D"`.
pub fn normalize_codepoint(raw: &str) -> Result<String> {
    let invalid = || Error::InvalidCodepoint(raw.to_string());
    let mut parts = Vec::new();
    for part in raw.split_whitespace() {
        let hex = part
            .strip_prefix("U+")
            .or_else(|| part.strip_prefix("u+"))
            .ok_or_else(invalid)?;
        if !(4..=6).contains(&hex.len()) || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(invalid());
        }
        let value = u32::from_str_radix(hex, 16).map_err(|_| invalid())?;
        if value > 0x10FFFF {
            return Err(invalid());
        }
        parts.push(format!("U+{}", hex.to_ascii_uppercase()));
    }
    if parts.is_empty() {
        return Err(invalid());
    }
    Ok(parts.join(" "))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenseWord {
    pub word: String,
    /// Part-of-speech tag. Kept for fidelity with the source data; scoring
    /// never reads it.
    #[serde(default)]
    pub pos: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmojiRecord {
    pub codepoint: String,
    #[serde(rename = "name", default)]
    pub short_name: String,
    #[serde(rename = "senses", default)]
    pub sense_words: Vec<SenseWord>,
    #[serde(default)]
    pub definitions: Vec<String>,
}

impl EmojiRecord {
    fn has_knowledge(&self) -> bool {
        !self.short_name.trim().is_empty()
            || self.sense_words.iter().any(|s| !s.word.trim().is_empty())
            || self.definitions.iter().any(|d| !d.trim().is_empty())
    }
}

#[derive(Debug, Deserialize)]
struct InventoryFile {
    #[serde(default)]
    version: String,
    emojis: Vec<EmojiRecord>,
}

/// Validated emoji inventory. Codepoints are unique and normalized.
#[derive(Debug, Clone, Default)]
pub struct EmojiInventory {
    records: Vec<EmojiRecord>,
    source_version: String,
    rejected: Vec<String>,
}

impl EmojiInventory {
    /// Validates records, dropping those with a malformed codepoint or no
    /// knowledge at all. A repeated codepoint is a hard error.
    pub fn new(source_version: impl Into<String>, records: Vec<EmojiRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(records.len());
        let mut rejected = Vec::new();
        for (i, mut record) in records.into_iter().enumerate() {
            match normalize_codepoint(&record.codepoint) {
                Ok(cp) => record.codepoint = cp,
                Err(e) => {
                    rejected.push(format!("record {i}: {e}"));
                    continue;
                }
            }
            if !seen.insert(record.codepoint.clone()) {
                return Err(Error::DuplicateCodepoint(record.codepoint));
            }
            if !record.has_knowledge() {
                rejected.push(format!(
                    "record {i} ({}): no name, senses, or definitions",
                    record.codepoint
                ));
                continue;
            }
            kept.push(record);
        }
        for r in &rejected {
            log::warn!("inventory: rejected {r}");
        }
        Ok(EmojiInventory {
            records: kept,
            source_version: source_version.into(),
            rejected,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InventoryFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidInventory(e.to_string()))?;
        Self::new(file.version, file.emojis)
    }

    pub fn records(&self) -> &[EmojiRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn source_version(&self) -> &str {
        &self.source_version
    }

    /// Diagnostics for records dropped during validation.
    pub fn rejected(&self) -> &[String] {
        &self.rejected
    }

    pub fn get(&self, codepoint: &str) -> Option<&EmojiRecord> {
        self.records.iter().find(|r| r.codepoint == codepoint)
    }
}

/// Loads an inventory JSON file.
pub fn load_inventory(path: impl AsRef<Path>) -> Result<EmojiInventory> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let inventory = EmojiInventory::from_json(&text)?;
    log::info!(
        "inventory {}: {} loaded, {} rejected",
        path.display(),
        inventory.len(),
        inventory.rejected().len()
    );
    Ok(inventory)
}

/// Which piece of emoji knowledge feeds the emoji vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Names,
    Senses,
    Definitions,
    ProcessedDefinitions,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Names,
        Strategy::Senses,
        Strategy::Definitions,
        Strategy::ProcessedDefinitions,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Names => "names",
            Strategy::Senses => "senses",
            Strategy::Definitions => "definitions",
            Strategy::ProcessedDefinitions => "processed_definitions",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "names" | "name" => Ok(Strategy::Names),
            "senses" | "sense" => Ok(Strategy::Senses),
            "definitions" | "defs" => Ok(Strategy::Definitions),
            "processed_definitions" | "processed" => Ok(Strategy::ProcessedDefinitions),
            _ => Err(Error::UnknownName {
                kind: "strategy",
                value: s.to_string(),
            }),
        }
    }
}

/// The token bag an emoji contributes under `strategy`.
///
/// Names and senses give each distinct token weight one; definitions count
/// every occurrence. Only the processed variant runs stopword removal and
/// lemmatization. An empty bag means the record has no data for the strategy.
pub fn knowledge_text(record: &EmojiRecord, strategy: Strategy, preprocessor: &Preprocessor) -> TokenCounts {
    match strategy {
        Strategy::Names => TokenCounts::distinct(tokenize(&record.short_name)),
        Strategy::Senses => TokenCounts::distinct(
            record.sense_words.iter().flat_map(|s| tokenize(&s.word)),
        ),
        Strategy::Definitions => TokenCounts::from_tokens(definition_tokens(record)),
        Strategy::ProcessedDefinitions => {
            TokenCounts::from_tokens(preprocessor.apply(&definition_tokens(record)))
        }
    }
}

fn definition_tokens(record: &EmojiRecord) -> Vec<String> {
    record.definitions.iter().flat_map(|d| tokenize(d)).collect()
}
