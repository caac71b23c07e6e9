//! Emoji vectors from knowledge text, and query vectors from classifier
//! output plus captions.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding_store::{bow_embedding, tokenize, BowResult, EmbeddingStore, TokenCounts, Vector};
use crate::error::{Error, Result};
use crate::knowledge_base::{knowledge_text, EmojiInventory, Strategy};
use crate::text::Preprocessor;

/// One emoji's vector. `empty` is set when none of its knowledge tokens were
/// in the vocabulary, in which case the vector is all zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmojiVector {
    pub vector: Vector,
    pub empty: bool,
}

/// Emoji vectors for one strategy, keyed by codepoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmojiVectorSet {
    pub strategy: Strategy,
    pub dimension: usize,
    pub emojis: BTreeMap<String, EmojiVector>,
}

impl EmojiVectorSet {
    pub fn len(&self) -> usize {
        self.emojis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emojis.is_empty()
    }

    pub fn empty_count(&self) -> usize {
        self.emojis.values().filter(|e| e.empty).count()
    }

    pub fn get(&self, codepoint: &str) -> Option<&EmojiVector> {
        self.emojis.get(codepoint)
    }

    /// Checks the dimension and zero-vector invariants, e.g. after reading an
    /// artifact from disk.
    pub fn validate(&self) -> Result<()> {
        for (cp, e) in &self.emojis {
            if e.vector.dim() != self.dimension {
                return Err(Error::InvalidArtifact(format!(
                    "{cp}: vector has dimension {}, set declares {}",
                    e.vector.dim(),
                    self.dimension
                )));
            }
            if e.vector.as_slice().iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArtifact(format!("{cp}: non-finite component")));
            }
            if e.empty && !e.vector.is_zero() {
                return Err(Error::InvalidArtifact(format!("{cp}: flagged empty but non-zero")));
            }
        }
        Ok(())
    }
}

/// Builds every emoji's vector under `strategy`.
pub fn build_emoji_vectors(
    store: &EmbeddingStore,
    inventory: &EmojiInventory,
    strategy: Strategy,
    preprocessor: &Preprocessor,
) -> EmojiVectorSet {
    let emojis: BTreeMap<_, _> = inventory
        .records()
        .iter()
        .map(|record| {
            let bow = bow_embedding(store, &knowledge_text(record, strategy, preprocessor));
            let empty = bow.is_empty();
            (
                record.codepoint.clone(),
                EmojiVector {
                    vector: bow.vector,
                    empty,
                },
            )
        })
        .collect();
    let set = EmojiVectorSet {
        strategy,
        dimension: store.dimension(),
        emojis,
    };
    let flagged = set.empty_count();
    if flagged > 0 {
        log::info!("{strategy}: {flagged} of {} emojis have no in-vocabulary knowledge", set.len());
    }
    set
}

/// Classifier output for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ClassProbability>", into = "Vec<ClassProbability>")]
pub struct ClassProbabilities(Vec<ClassProbability>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProbability {
    pub label: String,
    pub prob: f64,
}

/// Slack allowed on the probability total for float rounding in exports.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

impl ClassProbabilities {
    /// Probabilities must lie in `[0, 1]` and sum to at most `1 + 1e-6`;
    /// labels must be non-empty and unique.
    pub fn new(entries: Vec<ClassProbability>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut sum = 0.0;
        for e in &entries {
            if e.label.trim().is_empty() {
                return Err(Error::InvalidProbabilities("empty class label".into()));
            }
            if !seen.insert(e.label.as_str()) {
                return Err(Error::InvalidProbabilities(format!("duplicate label {:?}", e.label)));
            }
            if !e.prob.is_finite() || !(0.0..=1.0).contains(&e.prob) {
                return Err(Error::InvalidProbabilities(format!(
                    "probability {} for {:?} outside [0, 1]",
                    e.prob, e.label
                )));
            }
            sum += e.prob;
        }
        if sum > 1.0 + PROB_SUM_TOLERANCE {
            return Err(Error::InvalidProbabilities(format!("probabilities sum to {sum}")));
        }
        Ok(ClassProbabilities(entries))
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(label, prob)| ClassProbability {
                    label: label.into(),
                    prob,
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[ClassProbability] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().map(|e| e.prob).sum()
    }
}

impl TryFrom<Vec<ClassProbability>> for ClassProbabilities {
    type Error = Error;

    fn try_from(entries: Vec<ClassProbability>) -> Result<Self> {
        Self::new(entries)
    }
}

impl From<ClassProbabilities> for Vec<ClassProbability> {
    fn from(p: ClassProbabilities) -> Self {
        p.0
    }
}

/// Word vector for a classifier label.
///
/// Comma-separated synonyms and multi-word names are flattened into a single
/// token bag, so `"tabby, tabby cat"` is the bag `{tabby: 2, cat: 1}`.
pub fn class_label_vector(store: &EmbeddingStore, label: &str) -> BowResult {
    bow_embedding(store, &TokenCounts::from_tokens(tokenize(label)))
}

/// Bag-of-words vector of a caption, every occurrence counted.
pub fn caption_vector(store: &EmbeddingStore, caption: &str) -> BowResult {
    bow_embedding(store, &TokenCounts::from_tokens(tokenize(caption)))
}

/// Probability-weighted sum of class label vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageVector {
    pub vector: Vector,
    pub labels_total: usize,
    pub labels_found: usize,
    /// Probability mass carried by labels that had a vector.
    pub coverage: f64,
}

impl ImageVector {
    pub fn is_empty(&self) -> bool {
        self.labels_found == 0
    }
}

/// Sums `P_i · vec(label_i)` over labels with vocabulary coverage.
///
/// Labels without any in-vocabulary token are dropped along with their
/// probability mass; the remaining weights are not renormalized.
pub fn image_vector(store: &EmbeddingStore, probs: &ClassProbabilities) -> ImageVector {
    let mut vector = Vector::zeros(store.dimension());
    let mut found = 0;
    let mut coverage = 0.0;
    for entry in probs.entries() {
        let label = class_label_vector(store, &entry.label);
        if label.is_empty() {
            continue;
        }
        vector.add_scaled(label.vector.as_slice(), entry.prob);
        coverage += entry.prob;
        found += 1;
    }
    ImageVector {
        vector,
        labels_total: probs.len(),
        labels_found: found,
        coverage,
    }
}

/// Query composition: image only, or image plus caption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    V,
    VT,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::V, Mode::VT];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::V => "V",
            Mode::VT => "VT",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "v" => Ok(Mode::V),
            "vt" | "v+t" => Ok(Mode::VT),
            _ => Err(Error::UnknownName {
                kind: "mode",
                value: s.to_string(),
            }),
        }
    }
}

/// How the image and caption parts are added in `VT` mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fusion {
    /// Each part is scaled to unit length before adding, and the sum is
    /// scaled to unit length again.
    #[default]
    NormalizeAdd,
    /// Plain vector sum.
    RawAdd,
}

impl Fusion {
    pub fn as_str(self) -> &'static str {
        match self {
            Fusion::NormalizeAdd => "normalize-add",
            Fusion::RawAdd => "raw-add",
        }
    }
}

impl fmt::Display for Fusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Fusion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "normalize-add" | "normalize" => Ok(Fusion::NormalizeAdd),
            "raw-add" | "raw" => Ok(Fusion::RawAdd),
            _ => Err(Error::UnknownName {
                kind: "fusion",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryVector {
    pub vector: Vector,
    /// Effective mode; a `VT` request without a usable caption becomes `V`.
    pub mode: Mode,
    pub image_coverage: f64,
    /// Unset whenever the effective mode is `V`.
    pub caption_coverage: Option<f64>,
    /// True when `VT` was requested but fell back to `V`.
    pub degraded: bool,
}

/// Combines the image vector with an optional caption vector.
///
/// A `VT` request whose caption is missing or fully out of vocabulary falls
/// back to the image vector and sets [`QueryVector::degraded`]; callers
/// report that as a warning.
pub fn compose_query(
    image: &ImageVector,
    caption: Option<&BowResult>,
    mode: Mode,
    fusion: Fusion,
) -> Result<QueryVector> {
    let caption = caption.filter(|c| !c.is_empty());
    let image_only = |degraded| {
        if image.is_empty() {
            return Err(Error::EmptyQuery);
        }
        Ok(QueryVector {
            vector: image.vector.clone(),
            mode: Mode::V,
            image_coverage: image.coverage,
            caption_coverage: None,
            degraded,
        })
    };
    match (mode, caption) {
        (Mode::V, _) => image_only(false),
        (Mode::VT, None) => image_only(true),
        (Mode::VT, Some(caption)) => {
            let prepare = |v: &Vector| match fusion {
                Fusion::NormalizeAdd => v.normalized(),
                Fusion::RawAdd => v.clone(),
            };
            let text = prepare(&caption.vector);
            let vector = if image.is_empty() {
                if text.dim() != image.vector.dim() {
                    return Err(Error::VectorDimension {
                        left: image.vector.dim(),
                        right: text.dim(),
                    });
                }
                text
            } else {
                let sum = prepare(&image.vector).checked_add(&text)?;
                match fusion {
                    Fusion::NormalizeAdd => sum.normalized(),
                    Fusion::RawAdd => sum,
                }
            };
            Ok(QueryVector {
                vector,
                mode: Mode::VT,
                image_coverage: image.coverage,
                caption_coverage: Some(caption.coverage()),
                degraded: false,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge_base::{EmojiRecord, SenseWord, Strategy};
    use proptest::prelude::*;

    fn store(rows: &[(&str, &[f64])]) -> EmbeddingStore {
        EmbeddingStore::from_pairs(rows.iter().map(|(t, v)| (*t, v.to_vec()))).unwrap()
    }

    fn record(cp: &str, senses: &[&str], defs: &[&str]) -> EmojiRecord {
        EmojiRecord {
            codepoint: cp.into(),
            short_name: String::new(),
            sense_words: senses
                .iter()
                .map(|w| SenseWord {
                    word: w.to_string(),
                    pos: "noun".into(),
                })
                .collect(),
            definitions: defs.iter().map(|d| d.to_string()).collect(),
        }
    }

    #[test]
    fn emoji_vector_examples() {
        let pre = Preprocessor::default();
        let s = store(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        let inv = EmojiInventory::new("t", vec![record("U+1F600", &["a", "b"], &[])]).unwrap();
        let set = build_emoji_vectors(&s, &inv, Strategy::Senses, &pre);
        assert_eq!(set.get("U+1F600").unwrap().vector.as_slice(), &[0.5, 0.5]);

        let s = store(&[("a", &[3.0, 0.0]), ("b", &[0.0, 3.0])]);
        let inv = EmojiInventory::new("t", vec![record("U+1F600", &["x"], &["a a b"])]).unwrap();
        let set = build_emoji_vectors(&s, &inv, Strategy::Definitions, &pre);
        assert_eq!(set.get("U+1F600").unwrap().vector.as_slice(), &[2.0, 1.0]);

        let set = build_emoji_vectors(&s, &inv, Strategy::Senses, &pre);
        let e = set.get("U+1F600").unwrap();
        assert!(e.empty && e.vector.is_zero());
        assert_eq!(set.empty_count(), 1);
        set.validate().unwrap();
    }

    #[test]
    fn label_vector_examples() {
        let s = store(&[("golden", &[1.0, 0.0]), ("retriever", &[0.0, 1.0])]);
        assert_eq!(class_label_vector(&s, "golden retriever").vector.as_slice(), &[0.5, 0.5]);
        assert!(class_label_vector(&s, "zzz").is_empty());

        let s = store(&[("tabby", &[3.0, 0.0]), ("cat", &[0.0, 3.0])]);
        let r = class_label_vector(&s, "tabby, tabby cat");
        assert_eq!(r.vector.as_slice(), &[2.0, 1.0]);
    }

    #[test]
    fn image_vector_examples() {
        let s = store(&[("dog", &[1.0, 0.0]), ("cat", &[0.0, 1.0])]);
        let p = ClassProbabilities::from_pairs([("dog", 0.8), ("cat", 0.2)]).unwrap();
        assert_eq!(image_vector(&s, &p).vector.as_slice(), &[0.8, 0.2]);

        let p = ClassProbabilities::from_pairs([("dog", 1.0)]).unwrap();
        assert_eq!(image_vector(&s, &p).vector.as_slice(), s.get("dog").unwrap());

        let p = ClassProbabilities::from_pairs([("dog", 0.5), ("zzz", 0.5)]).unwrap();
        let img = image_vector(&s, &p);
        assert_eq!(img.vector.as_slice(), &[0.5, 0.0]);
        assert_eq!(img.coverage, 0.5);
        assert_eq!((img.labels_found, img.labels_total), (1, 2));

        let p = ClassProbabilities::from_pairs([("zzz", 1.0)]).unwrap();
        assert!(image_vector(&s, &p).is_empty());
    }

    #[test]
    fn probability_validation() {
        assert!(ClassProbabilities::from_pairs([("a", 0.7), ("b", 0.5)]).is_err());
        assert!(ClassProbabilities::from_pairs([("a", -0.1)]).is_err());
        assert!(ClassProbabilities::from_pairs([("a", 0.1), ("a", 0.1)]).is_err());
        assert!(ClassProbabilities::from_pairs([(" ", 0.1)]).is_err());
        assert!(ClassProbabilities::from_pairs([("a", f64::NAN)]).is_err());
        assert!(ClassProbabilities::from_pairs([("a", 0.5), ("b", 0.5000005)]).is_ok());
        let parsed: std::result::Result<ClassProbabilities, _> =
            serde_json::from_str(r#"[{"label":"a","prob":0.9},{"label":"b","prob":0.3}]"#);
        assert!(parsed.is_err());
    }

    fn image(v: &[f64]) -> ImageVector {
        ImageVector {
            vector: Vector::new(v.to_vec()),
            labels_total: 1,
            labels_found: 1,
            coverage: 1.0,
        }
    }

    fn bow(v: &[f64], found: usize) -> BowResult {
        BowResult {
            vector: Vector::new(v.to_vec()),
            tokens_total: 1,
            tokens_found: found,
        }
    }

    #[test]
    fn compose_examples() {
        let q = compose_query(&image(&[3.0, 4.0]), None, Mode::V, Fusion::NormalizeAdd).unwrap();
        assert_eq!(q.vector.as_slice(), &[3.0, 4.0]);
        assert_eq!(q.caption_coverage, None);

        let cap = bow(&[0.0, 1.0], 1);
        let q = compose_query(&image(&[1.0, 0.0]), Some(&cap), Mode::VT, Fusion::NormalizeAdd).unwrap();
        assert_eq!(q.mode, Mode::VT);
        for x in q.vector.as_slice() {
            assert!((x - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }

        let q2 = compose_query(&image(&[2.0, 0.0]), Some(&bow(&[0.0, 5.0], 1)), Mode::VT, Fusion::NormalizeAdd)
            .unwrap();
        assert_eq!(q2.vector, q.vector);
        let q = compose_query(&image(&[2.0, 0.0]), Some(&bow(&[0.0, 5.0], 1)), Mode::VT, Fusion::RawAdd).unwrap();
        assert_eq!(q.vector.as_slice(), &[2.0, 5.0]);
    }

    #[test]
    fn compose_degrades_and_fails_on_empty() {
        let empty_caption = bow(&[0.0, 0.0], 0);
        let v = compose_query(&image(&[3.0, 4.0]), None, Mode::V, Fusion::NormalizeAdd).unwrap();
        let vt = compose_query(&image(&[3.0, 4.0]), Some(&empty_caption), Mode::VT, Fusion::NormalizeAdd).unwrap();
        assert_eq!(v.vector, vt.vector);
        assert!(vt.degraded);
        assert_eq!(vt.mode, Mode::V);

        let no_image = ImageVector {
            vector: Vector::zeros(2),
            labels_total: 1,
            labels_found: 0,
            coverage: 0.0,
        };
        assert!(matches!(
            compose_query(&no_image, Some(&empty_caption), Mode::VT, Fusion::NormalizeAdd),
            Err(Error::EmptyQuery)
        ));
        assert!(matches!(
            compose_query(&no_image, None, Mode::V, Fusion::NormalizeAdd),
            Err(Error::EmptyQuery)
        ));
        let q = compose_query(&no_image, Some(&bow(&[0.0, 2.0], 1)), Mode::VT, Fusion::NormalizeAdd).unwrap();
        assert_eq!(q.vector.as_slice(), &[0.0, 1.0]);
        assert!(compose_query(&image(&[1.0, 0.0]), Some(&bow(&[1.0, 0.0, 0.0], 1)), Mode::VT, Fusion::RawAdd).is_err());
    }

    #[test]
    fn senses_and_definitions_agree_when_definitions_list_each_sense_once() {
        let pre = Preprocessor::default();
        let s = store(&[("love", &[1.0, 2.0, 0.0]), ("heart", &[0.0, 1.0, 4.0]), ("red", &[2.0, 2.0, 2.0])]);
        let inv = EmojiInventory::new(
            "t",
            vec![record("U+2764", &["love", "heart", "red"], &["love heart red"])],
        )
        .unwrap();
        let a = build_emoji_vectors(&s, &inv, Strategy::Senses, &pre);
        let b = build_emoji_vectors(&s, &inv, Strategy::Definitions, &pre);
        assert_eq!(a.emojis, b.emojis);
    }

    proptest! {
        #[test]
        fn image_vector_is_linear(
            probs in prop::collection::vec(0.0f64..0.2, 1..5),
            alpha in 0.0f64..1.0,
        ) {
            let s = store(&[("l0", &[1.0, -2.0, 0.5]), ("l1", &[0.3, 0.3, 3.0]), ("l2", &[-1.0, 0.0, 2.0]), ("l3", &[4.0, 1.0, 1.0]), ("l4", &[0.0, 0.0, 1.0])]);
            let p = ClassProbabilities::from_pairs(probs.iter().enumerate().map(|(i, &p)| (format!("l{i}"), p))).unwrap();
            let q = ClassProbabilities::from_pairs(probs.iter().enumerate().map(|(i, &p)| (format!("l{i}"), p * alpha))).unwrap();
            let a = image_vector(&s, &p).vector.scaled(alpha);
            let b = image_vector(&s, &q).vector;
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
