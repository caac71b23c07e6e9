//! Stopword filtering and lemmatization for definition text.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// A set of lowercase words dropped during preprocessing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    /// The bundled English list (version 1, 155 words, all articles included).
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        StopWords(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for StopWords {
    fn default() -> Self {
        Self::english()
    }
}

/// Maps an inflected word form to its lemma.
///
/// Implementations must be idempotent: `lemmatize(lemmatize(w)) == lemmatize(w)`.
pub trait Lemmatizer: Send + Sync {
    fn lemmatize(&self, word: &str) -> String;
}

/// Irregular forms and words the suffix rules would mangle.
const EXCEPTIONS: &[(&str, &str)] = &[
    ("am", "be"),
    ("are", "be"),
    ("is", "be"),
    ("was", "be"),
    ("were", "be"),
    ("been", "be"),
    ("being", "be"),
    ("has", "have"),
    ("had", "have"),
    ("having", "have"),
    ("does", "do"),
    ("did", "do"),
    ("done", "do"),
    ("doing", "do"),
    ("goes", "go"),
    ("going", "go"),
    ("went", "go"),
    ("gone", "go"),
    ("ran", "run"),
    ("ate", "eat"),
    ("eaten", "eat"),
    ("saw", "see"),
    ("seen", "see"),
    ("sang", "sing"),
    ("sung", "sing"),
    ("swam", "swim"),
    ("swum", "swim"),
    ("flew", "fly"),
    ("flown", "fly"),
    ("flies", "fly"),
    ("gave", "give"),
    ("given", "give"),
    ("took", "take"),
    ("taken", "take"),
    ("made", "make"),
    ("came", "come"),
    ("felt", "feel"),
    ("fell", "fall"),
    ("fallen", "fall"),
    ("slept", "sleep"),
    ("sat", "sit"),
    ("stood", "stand"),
    ("wrote", "write"),
    ("written", "write"),
    ("drank", "drink"),
    ("drunk", "drink"),
    ("drove", "drive"),
    ("driven", "drive"),
    ("rode", "ride"),
    ("ridden", "ride"),
    ("held", "hold"),
    ("kept", "keep"),
    ("told", "tell"),
    ("said", "say"),
    ("thought", "think"),
    ("brought", "bring"),
    ("bought", "buy"),
    ("caught", "catch"),
    ("taught", "teach"),
    ("found", "find"),
    ("built", "build"),
    ("sent", "send"),
    ("spent", "spend"),
    ("wore", "wear"),
    ("worn", "wear"),
    ("broke", "break"),
    ("broken", "break"),
    ("spoke", "speak"),
    ("spoken", "speak"),
    ("chose", "choose"),
    ("chosen", "choose"),
    ("froze", "freeze"),
    ("frozen", "freeze"),
    ("knew", "know"),
    ("known", "know"),
    ("grew", "grow"),
    ("grown", "grow"),
    ("threw", "throw"),
    ("thrown", "throw"),
    ("blew", "blow"),
    ("blown", "blow"),
    ("drew", "draw"),
    ("drawn", "draw"),
    ("began", "begin"),
    ("begun", "begin"),
    ("men", "man"),
    ("women", "woman"),
    ("children", "child"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("mice", "mouse"),
    ("geese", "goose"),
    ("people", "person"),
    ("leaves", "leaf"),
    ("wolves", "wolf"),
    ("knives", "knife"),
    ("lives", "life"),
    ("wives", "wife"),
    ("halves", "half"),
    ("shelves", "shelf"),
    ("loaves", "loaf"),
    ("better", "good"),
    ("best", "good"),
    ("worse", "bad"),
    ("worst", "bad"),
    ("excited", "excite"),
    ("surprised", "surprise"),
    ("amazed", "amaze"),
    ("confused", "confuse"),
    ("created", "create"),
    ("headaches", "headache"),
];

/// Words already in lemma form that the suffix rules would otherwise strip.
const PROTECTED: &[&str] = &[
    "always", "beloved", "building", "bus", "ceiling", "chaos", "evening", "gas", "his", "lens",
    "morning", "news", "nothing", "something", "anything", "everything", "perhaps", "pudding",
    "series", "species", "this", "us", "wedding", "yes", "hundred", "sacred", "naked", "wicked",
    "kindred", "ragged", "rugged", "crooked", "its", "sometimes", "darling", "sibling",
];

/// Suffix-stripping English lemmatizer with an exception table.
///
/// Rules, first match wins, applied until the word stops changing:
///
/// * `-ies` → `-y` (`puppies` → `puppy`), `-sses` → `-ss`,
///   `-xes`/`-ches`/`-shes`/`-zzes` drop `-es`
/// * plural `-s` is dropped unless the word ends in `-ss`, `-us` or `-is`
/// * `-ied` → `-y`
/// * `-ing` and `-ed` are dropped when the remaining stem has a vowel and at
///   least three letters; a doubled final consonant is then undoubled
///   (`running` → `run`) and a final `e` is restored on short
///   consonant-vowel-consonant stems and stems ending in `c`, `v`, `iz` or
///   `bl` (`making` → `make`, `dancing` → `dance`)
///
/// Iterating to a fixed point makes the lemmatizer idempotent.
#[derive(Debug, Clone)]
pub struct RuleLemmatizer {
    exceptions: HashMap<&'static str, &'static str>,
    protected: HashSet<&'static str>,
}

impl Default for RuleLemmatizer {
    fn default() -> Self {
        let exceptions: HashMap<_, _> = EXCEPTIONS.iter().copied().collect();
        let protected = PROTECTED
            .iter()
            .copied()
            .chain(exceptions.values().copied())
            .collect();
        RuleLemmatizer {
            exceptions,
            protected,
        }
    }
}

impl RuleLemmatizer {
    pub fn new() -> Self {
        Self::default()
    }

    fn step(&self, word: &str) -> Option<String> {
        if let Some(lemma) = self.exceptions.get(word) {
            return Some((*lemma).to_string());
        }
        if self.protected.contains(word) || !word.is_ascii() {
            return None;
        }
        let len = word.len();
        if len > 4 && word.ends_with("ies") {
            return Some(format!("{}y", &word[..len - 3]));
        }
        if word.ends_with("sses") {
            return Some(word[..len - 2].to_string());
        }
        if ["xes", "ches", "shes", "zzes"].iter().any(|s| word.ends_with(s)) {
            return Some(word[..len - 2].to_string());
        }
        if len > 3
            && word.ends_with('s')
            && !["ss", "us", "is"].iter().any(|s| word.ends_with(s))
        {
            return Some(word[..len - 1].to_string());
        }
        if len > 4 && word.ends_with("ied") {
            return Some(format!("{}y", &word[..len - 3]));
        }
        if let Some(stem) = word.strip_suffix("ing") {
            if stem.len() >= 3 && has_vowel(stem) {
                return Some(restore_stem(stem));
            }
        }
        if let Some(stem) = word.strip_suffix("ed") {
            if !stem.ends_with('e') && stem.len() >= 3 && has_vowel(stem) {
                return Some(restore_stem(stem));
            }
        }
        None
    }
}

impl Lemmatizer for RuleLemmatizer {
    fn lemmatize(&self, word: &str) -> String {
        let mut current = word.to_string();
        // Every rule shortens the word and exception targets are protected,
        // so this settles long before the cap.
        for _ in 0..32 {
            match self.step(&current) {
                Some(next) if next != current => current = next,
                _ => break,
            }
        }
        current
    }
}

fn is_vowel_at(bytes: &[u8], i: usize) -> bool {
    match bytes[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => true,
        b'y' => i > 0 && !is_vowel_at(bytes, i - 1),
        _ => false,
    }
}

fn has_vowel(stem: &str) -> bool {
    let b = stem.as_bytes();
    (0..b.len()).any(|i| is_vowel_at(b, i))
}

fn vowel_groups(stem: &str) -> usize {
    let b = stem.as_bytes();
    let mut groups = 0;
    let mut prev = false;
    for i in 0..b.len() {
        let v = is_vowel_at(b, i);
        if v && !prev {
            groups += 1;
        }
        prev = v;
    }
    groups
}

fn restore_stem(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    let last = b[n - 1];
    if n >= 4 && last == b[n - 2] && !is_vowel_at(b, n - 1) && !matches!(last, b'l' | b's' | b'z')
    {
        return stem[..n - 1].to_string();
    }
    let short_cvc = n >= 3
        && !is_vowel_at(b, n - 3)
        && is_vowel_at(b, n - 2)
        && !is_vowel_at(b, n - 1)
        && !matches!(last, b'w' | b'x' | b'y')
        && vowel_groups(stem) == 1;
    let wants_e = ["c", "v", "iz", "bl"].iter().any(|s| stem.ends_with(s));
    if short_cvc || wants_e {
        format!("{stem}e")
    } else {
        stem.to_string()
    }
}

/// Drops stopwords, lemmatizes what remains, and drops lemmas that are
/// themselves stopwords. Order is preserved and the result is a fixed point
/// of this function.
pub fn preprocess(tokens: &[String], stopwords: &StopWords, lemmatizer: &dyn Lemmatizer) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stopwords.contains(t))
        .map(|t| lemmatizer.lemmatize(t))
        .filter(|t| !t.is_empty() && !stopwords.contains(t))
        .collect()
}

/// Stopword list plus lemmatizer, as used for processed definitions.
pub struct Preprocessor {
    pub stopwords: StopWords,
    pub lemmatizer: Box<dyn Lemmatizer>,
}

impl Preprocessor {
    pub fn new(stopwords: StopWords, lemmatizer: Box<dyn Lemmatizer>) -> Self {
        Preprocessor {
            stopwords,
            lemmatizer,
        }
    }

    pub fn apply(&self, tokens: &[String]) -> Vec<String> {
        preprocess(tokens, &self.stopwords, self.lemmatizer.as_ref())
    }
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor::new(StopWords::english(), Box::new(RuleLemmatizer::new()))
    }
}

impl std::fmt::Debug for Preprocessor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Preprocessor")
            .field("stopwords", &self.stopwords.len())
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn strings(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn bundled_list_has_articles() {
        let sw = StopWords::english();
        assert_eq!(sw.len(), 155);
        for article in ["a", "an", "the"] {
            assert!(sw.contains(article));
        }
    }

    #[test]
    fn preprocess_examples() {
        let sw = StopWords::english();
        let lem = RuleLemmatizer::new();
        assert_eq!(
            preprocess(&strings(&["the", "dogs", "are", "running"]), &sw, &lem),
            ["dog", "run"]
        );
        assert!(preprocess(&[], &sw, &lem).is_empty());
        let once = preprocess(&strings(&["dog"]), &sw, &lem);
        assert_eq!(once, ["dog"]);
        assert_eq!(preprocess(&once, &sw, &lem), ["dog"]);
    }

    #[test]
    fn lemmatizer_table() {
        let lem = RuleLemmatizer::new();
        let cases = [
            ("dogs", "dog"),
            ("puppies", "puppy"),
            ("glasses", "glass"),
            ("boxes", "box"),
            ("churches", "church"),
            ("horses", "horse"),
            ("running", "run"),
            ("sitting", "sit"),
            ("playing", "play"),
            ("making", "make"),
            ("hoping", "hope"),
            ("hopping", "hop"),
            ("smiling", "smile"),
            ("dancing", "dance"),
            ("kissing", "kiss"),
            ("falling", "fall"),
            ("adding", "add"),
            ("crying", "cry"),
            ("eating", "eat"),
            ("loved", "love"),
            ("played", "play"),
            ("cried", "cry"),
            ("hugged", "hug"),
            ("wanted", "want"),
            ("feeling", "feel"),
            ("feelings", "feel"),
            ("things", "thing"),
            ("waves", "wave"),
            ("went", "go"),
            ("children", "child"),
            ("beloved", "beloved"),
            ("morning", "morning"),
            ("speed", "speed"),
            ("famous", "famous"),
            ("analysis", "analysis"),
            ("sea", "sea"),
            ("café", "café"),
        ];
        for (word, lemma) in cases {
            assert_eq!(lem.lemmatize(word), lemma, "{word}");
        }
    }

    #[test]
    fn exception_targets_are_fixed_points() {
        let lem = RuleLemmatizer::new();
        for (_, target) in EXCEPTIONS {
            assert_eq!(lem.lemmatize(target), *target);
        }
    }

    #[test]
    fn stopword_file_override() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sw.txt");
        std::fs::write(&p, "# custom\nDog\n\ncat\n").unwrap();
        let sw = StopWords::from_file(&p).unwrap();
        assert_eq!(sw.len(), 2);
        assert!(sw.contains("dog"));
        let lem = RuleLemmatizer::new();
        assert_eq!(preprocess(&strings(&["dogs", "the", "cats", "birds"]), &sw, &lem), ["the", "bird"]);
    }

    proptest! {
        #[test]
        fn lemmatizer_idempotent(word in "[a-z]{1,14}") {
            let lem = RuleLemmatizer::new();
            let once = lem.lemmatize(&word);
            prop_assert_eq!(lem.lemmatize(&once), once);
        }

        #[test]
        fn preprocess_idempotent(words in prop::collection::vec("[a-z]{1,10}|the|an|a|are|is|dogs|running|having", 0..12)) {
            let sw = StopWords::english();
            let lem = RuleLemmatizer::new();
            let once = preprocess(&words, &sw, &lem);
            prop_assert_eq!(preprocess(&once, &sw, &lem), once);
        }
    }
}
