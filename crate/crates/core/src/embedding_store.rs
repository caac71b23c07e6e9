//! Word-embedding storage, tokenization, and bag-of-words composition.
//!
//! The text format is the usual word2vec/fastText `.vec` layout: an optional
//! `<count> <dim>` header line, then one `token f1 f2 ... fD` row per line.
//! Tokens are case-folded on load; when two rows fold to the same token the
//! first one wins and the collision is counted in
//! [`EmbeddingStore::duplicate_tokens`].

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(components: Vec<f64>) -> Self {
        Vector(components)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// Returns `self / |self|`, or a copy of `self` when the norm is zero.
    pub fn normalized(&self) -> Vector {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        Vector(self.0.iter().map(|x| x / n).collect())
    }

    pub fn scaled(&self, factor: f64) -> Vector {
        Vector(self.0.iter().map(|x| x * factor).collect())
    }

    pub(crate) fn add_scaled(&mut self, other: &[f64], factor: f64) {
        debug_assert_eq!(self.0.len(), other.len());
        for (acc, x) in self.0.iter_mut().zip(other) {
            *acc += x * factor;
        }
    }

    pub fn checked_add(&self, other: &Vector) -> Result<Vector> {
        if self.dim() != other.dim() {
            return Err(Error::VectorDimension {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(Vector(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Immutable token → vector map with a uniform dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dimension: usize,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    duplicate_tokens: usize,
}

impl EmbeddingStore {
    /// Builds a store from in-memory `(token, vector)` pairs.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        let mut builder = StoreBuilder::default();
        for (i, (token, vector)) in pairs.into_iter().enumerate() {
            builder.push(i + 1, token.as_ref(), &vector)?;
        }
        builder.finish()
    }

    /// Parses the text embedding format from a reader.
    pub fn from_reader<R: BufRead>(reader: R, expected_dim: Option<usize>) -> Result<Self> {
        let mut builder = StoreBuilder {
            dimension: expected_dim,
            ..Default::default()
        };
        let mut header_count = None;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::MalformedEmbeddingRow {
                line: line_no,
                message: e.to_string(),
            })?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().unwrap_or_default();

            if line_no == 1 {
                if let Some((count, dim)) = parse_header(line) {
                    if let Some(expected) = expected_dim {
                        if expected != dim {
                            return Err(Error::DimensionMismatch {
                                line: line_no,
                                expected,
                                found: dim,
                            });
                        }
                    }
                    builder.dimension = Some(dim);
                    header_count = Some(count);
                    continue;
                }
            }

            let mut values = Vec::new();
            for field in fields {
                let value: f64 = field.parse().map_err(|_| Error::MalformedEmbeddingRow {
                    line: line_no,
                    message: format!("unparsable number {field:?}"),
                })?;
                values.push(value);
            }
            builder.push(line_no, token, &values)?;
        }
        if let Some(count) = header_count {
            if count != builder.rows {
                log::warn!(
                    "embedding header announces {count} rows, file has {}",
                    builder.rows
                );
            }
        }
        builder.finish()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn token_count(&self) -> usize {
        self.index.len()
    }

    /// Rows dropped because their case-folded token was already present.
    pub fn duplicate_tokens(&self) -> usize {
        self.duplicate_tokens
    }

    /// Looks a token up, case-folding it first if the exact form is absent.
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        let row = match self.index.get(token) {
            Some(&row) => row,
            None => *self.index.get(&token.to_lowercase())?,
        };
        let start = row * self.dimension;
        Some(&self.data[start..start + self.dimension])
    }

    pub fn contains(&self, token: &str) -> bool {
        self.get(token).is_some()
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut fields = line.split_whitespace();
    let count = fields.next()?.parse().ok()?;
    let dim = fields.next()?.parse().ok()?;
    if fields.next().is_some() || dim == 0 {
        return None;
    }
    Some((count, dim))
}

#[derive(Default)]
struct StoreBuilder {
    dimension: Option<usize>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    rows: usize,
    duplicates: usize,
}

impl StoreBuilder {
    fn push(&mut self, line: usize, token: &str, values: &[f64]) -> Result<()> {
        if token.is_empty() {
            return Err(Error::MalformedEmbeddingRow {
                line,
                message: "empty token".into(),
            });
        }
        if values.is_empty() {
            return Err(Error::MalformedEmbeddingRow {
                line,
                message: format!("token {token:?} has no vector components"),
            });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::MalformedEmbeddingRow {
                line,
                message: format!("non-finite component {bad}"),
            });
        }
        let dim = *self.dimension.get_or_insert(values.len());
        if values.len() != dim {
            return Err(Error::DimensionMismatch {
                line,
                expected: dim,
                found: values.len(),
            });
        }
        self.rows += 1;
        let key = token.to_lowercase();
        if self.index.contains_key(&key) {
            self.duplicates += 1;
            return Ok(());
        }
        self.index.insert(key, self.index.len());
        self.data.extend_from_slice(values);
        Ok(())
    }

    fn finish(self) -> Result<EmbeddingStore> {
        let dimension = match self.dimension {
            Some(d) if !self.index.is_empty() => d,
            _ => return Err(Error::EmptyEmbeddingFile),
        };
        if self.duplicates > 0 {
            log::warn!("{} duplicate embedding tokens ignored", self.duplicates);
        }
        Ok(EmbeddingStore {
            dimension,
            index: self.index,
            data: self.data,
            duplicate_tokens: self.duplicates,
        })
    }
}

/// Loads a word-embedding text file.
pub fn load_word_embeddings(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    EmbeddingStore::from_reader(BufReader::new(file), expected_dim)
}

/// Lowercases and splits on anything that is not a letter or digit.
///
/// Emoji, symbols, and punctuation all act as separators and never appear in
/// the output.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

/// Multiset of tokens. Every stored count is at least one.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCounts(BTreeMap<String, u64>);

impl TokenCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts every occurrence.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut counts = Self::new();
        for t in tokens {
            counts.add(t, 1);
        }
        counts
    }

    /// Each distinct token once, with count one.
    pub fn distinct<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut counts = Self::new();
        for t in tokens {
            counts.0.insert(t.into(), 1);
        }
        counts
    }

    /// Adds `n` occurrences of `token`. Zero is a no-op.
    pub fn add(&mut self, token: impl Into<String>, n: u64) {
        if n == 0 {
            return;
        }
        *self.0.entry(token.into()).or_insert(0) += n;
    }

    pub fn get(&self, token: &str) -> u64 {
        self.0.get(token).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

impl<S: Into<String>> FromIterator<(S, u64)> for TokenCounts {
    fn from_iter<I: IntoIterator<Item = (S, u64)>>(iter: I) -> Self {
        let mut counts = TokenCounts::new();
        for (t, n) in iter {
            counts.add(t, n);
        }
        counts
    }
}

/// Output of a bag-of-words composition with its vocabulary coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct BowResult {
    pub vector: Vector,
    /// Distinct tokens in the input bag.
    pub tokens_total: usize,
    /// Distinct tokens found in the store.
    pub tokens_found: usize,
}

impl BowResult {
    /// True when no token was found; the vector is then all zeros.
    pub fn is_empty(&self) -> bool {
        self.tokens_found == 0
    }

    pub fn coverage(&self) -> f64 {
        if self.tokens_total == 0 {
            0.0
        } else {
            self.tokens_found as f64 / self.tokens_total as f64
        }
    }
}

/// Count-weighted mean of the vectors of in-vocabulary tokens.
///
/// Out-of-vocabulary tokens are left out of both the weighted sum and the
/// total weight.
pub fn bow_embedding(store: &EmbeddingStore, counts: &TokenCounts) -> BowResult {
    let mut vector = Vector::zeros(store.dimension());
    let mut weight = 0u64;
    let mut found = 0;
    for (token, count) in counts.iter() {
        if let Some(v) = store.get(token) {
            vector.add_scaled(v, count as f64);
            weight += count;
            found += 1;
        }
    }
    if weight > 0 {
        let w = weight as f64;
        for x in vector.0.iter_mut() {
            *x /= w;
        }
    }
    BowResult {
        vector,
        tokens_total: counts.len(),
        tokens_found: found,
    }
}
