//! Cosine scoring and deterministic top-k ranking.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::embedding_store::{dot, norm, Vector};
use crate::error::{Error, Result};
use crate::vectorizer::EmojiVectorSet;

/// Cosine similarity, or `None` when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() {
        return Err(Error::VectorDimension {
            left: a.len(),
            right: b.len(),
        });
    }
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        return Ok(None);
    }
    Ok(Some(dot(a, b) / denom))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEmoji {
    pub codepoint: String,
    /// `None` when the cosine is undefined; such entries sort last.
    pub score: Option<f64>,
}

/// Top-k emojis, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub entries: Vec<RankedEmoji>,
    pub k: usize,
}

impl Ranking {
    pub fn codepoints(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.codepoint.as_str())
    }

    pub fn position(&self, codepoint: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.codepoint == codepoint)
    }
}

/// Higher scores first, undefined scores last, then ascending codepoint.
pub fn compare_ranked(a: &RankedEmoji, b: &RankedEmoji) -> Ordering {
    let by_score = match (a.score, b.score) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    };
    by_score.then_with(|| a.codepoint.cmp(&b.codepoint))
}

/// Ranks candidate emojis against `query`.
///
/// Candidates are the emojis not flagged empty, intersected with
/// `restriction` when one is given. Returns `min(k, candidates)` entries.
pub fn rank(
    query: &Vector,
    emojis: &EmojiVectorSet,
    k: usize,
    restriction: Option<&BTreeSet<String>>,
) -> Result<Ranking> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    if query.dim() != emojis.dimension {
        return Err(Error::VectorDimension {
            left: query.dim(),
            right: emojis.dimension,
        });
    }
    let mut scored = Vec::new();
    for (codepoint, emoji) in &emojis.emojis {
        if emoji.empty || restriction.is_some_and(|r| !r.contains(codepoint)) {
            continue;
        }
        scored.push(RankedEmoji {
            codepoint: codepoint.clone(),
            score: cosine(query.as_slice(), emoji.vector.as_slice())?,
        });
    }
    if scored.is_empty() {
        return Err(Error::NoCandidates);
    }
    scored.sort_by(compare_ranked);
    scored.truncate(k);
    Ok(Ranking { entries: scored, k })
}
