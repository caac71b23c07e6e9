//! Brute-force reference implementations used by the integration tests.
//!
//! Nothing here calls into the scoring code of the library; only the text
//! preprocessor is shared, for the processed-definitions strategy.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use emojirec::Preprocessor;

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden")
}

pub fn golden(name: &str) -> PathBuf {
    golden_dir().join(name)
}

pub type Words = HashMap<String, Vec<f64>>;

pub fn read_words(path: &Path) -> Words {
    let text = std::fs::read_to_string(path).unwrap();
    let mut words = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if i == 0 && fields.len() == 2 {
            continue;
        }
        let vector = fields[1..].iter().map(|x| x.parse().unwrap()).collect();
        words.entry(fields[0].to_lowercase()).or_insert(vector);
    }
    words
}

pub fn words_of(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.to_lowercase().chars() {
        if c.is_alphanumeric() {
            cur.push(c);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Σ v·c / Σ c over in-vocabulary tokens, or `None` if none is found.
pub fn mean_vector(words: &Words, dim: usize, counts: &[(String, u64)]) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; dim];
    let mut weight = 0.0;
    for (token, count) in counts {
        if let Some(v) = words.get(token) {
            for d in 0..dim {
                sum[d] += v[d] * *count as f64;
            }
            weight += *count as f64;
        }
    }
    if weight == 0.0 {
        None
    } else {
        Some(sum.iter().map(|x| x / weight).collect())
    }
}

pub fn tally(tokens: &[String]) -> Vec<(String, u64)> {
    let mut m: BTreeMap<String, u64> = BTreeMap::new();
    for t in tokens {
        *m.entry(t.clone()).or_default() += 1;
    }
    m.into_iter().collect()
}

pub fn distinct(tokens: &[String]) -> Vec<(String, u64)> {
    tokens.iter().cloned().collect::<BTreeSet<_>>().into_iter().map(|t| (t, 1)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn length(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn unit(a: &[f64]) -> Vec<f64> {
    let n = length(a);
    a.iter().map(|x| x / n).collect()
}

pub fn cos(a: &[f64], b: &[f64]) -> Option<f64> {
    let d = length(a) * length(b);
    if d == 0.0 {
        None
    } else {
        Some(dot(a, b) / d)
    }
}

/// Scores every candidate and sorts: defined scores descending, then
/// undefined ones, ties by codepoint.
pub fn exhaustive_rank(query: &[f64], candidates: &[(String, Vec<f64>)]) -> Vec<(String, Option<f64>)> {
    let mut scored: Vec<(String, Option<f64>)> = candidates.iter().map(|(c, v)| (c.clone(), cos(query, v))).collect();
    // insertion sort, to stay independent of the library's comparator
    for i in 1..scored.len() {
        let mut j = i;
        while j > 0 && before(&scored[j], &scored[j - 1]) {
            scored.swap(j, j - 1);
            j -= 1;
        }
    }
    scored
}

fn before(a: &(String, Option<f64>), b: &(String, Option<f64>)) -> bool {
    match (a.1, b.1) {
        (Some(x), Some(y)) if x != y => x > y,
        (Some(_), None) => true,
        (None, Some(_)) => false,
        _ => a.0 < b.0,
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Kind {
    Names,
    Senses,
    Definitions,
    Processed,
}

pub struct OracleEmoji {
    pub codepoint: String,
    pub vector: Option<Vec<f64>>,
}

pub fn oracle_emojis(words: &Words, dim: usize, inventory: &serde_json::Value, kind: Kind) -> Vec<OracleEmoji> {
    let pre = Preprocessor::default();
    inventory["emojis"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            let defs: Vec<String> = e["definitions"]
                .as_array()
                .unwrap()
                .iter()
                .flat_map(|d| words_of(d.as_str().unwrap()))
                .collect();
            let counts = match kind {
                Kind::Names => distinct(&words_of(e["name"].as_str().unwrap())),
                Kind::Senses => {
                    let s: Vec<String> = e["senses"]
                        .as_array()
                        .unwrap()
                        .iter()
                        .flat_map(|s| words_of(s["word"].as_str().unwrap()))
                        .collect();
                    distinct(&s)
                }
                Kind::Definitions => tally(&defs),
                Kind::Processed => tally(&pre.apply(&defs)),
            };
            OracleEmoji {
                codepoint: e["codepoint"].as_str().unwrap().to_string(),
                vector: mean_vector(words, dim, &counts),
            }
        })
        .collect()
}

pub struct OracleQuery {
    pub id: String,
    pub gold: String,
    pub image: Option<Vec<f64>>,
    pub caption: Option<Vec<f64>>,
}

pub fn oracle_queries(words: &Words, dim: usize, jsonl: &str) -> Vec<OracleQuery> {
    jsonl
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let q: serde_json::Value = serde_json::from_str(line).unwrap();
            let mut image = vec![0.0; dim];
            let mut any = false;
            for c in q["classes"].as_array().unwrap() {
                let label = tally(&words_of(c["label"].as_str().unwrap()));
                if let Some(v) = mean_vector(words, dim, &label) {
                    let p = c["prob"].as_f64().unwrap();
                    for d in 0..dim {
                        image[d] += p * v[d];
                    }
                    any = true;
                }
            }
            let caption = q["caption"].as_str().unwrap_or("");
            OracleQuery {
                id: q["id"].as_str().unwrap().to_string(),
                gold: q["gold"].as_str().unwrap().to_string(),
                image: any.then_some(image),
                caption: mean_vector(words, dim, &tally(&words_of(caption))),
            }
        })
        .collect()
}

/// Query vector for mode "V" or "VT" under normalize-add fusion.
pub fn oracle_query_vector(q: &OracleQuery, vt: bool) -> Option<Vec<f64>> {
    match (&q.image, &q.caption, vt) {
        (Some(i), Some(c), true) => {
            let sum: Vec<f64> = unit(i).iter().zip(unit(c)).map(|(a, b)| a + b).collect();
            Some(unit(&sum))
        }
        (None, Some(c), true) => Some(c.clone()),
        (image, _, _) => image.clone(),
    }
}

/// Hit counts at each k, or `None` for a query that cannot be scored.
pub fn oracle_hits(
    q: &OracleQuery,
    emojis: &[OracleEmoji],
    vt: bool,
    ks: &[usize],
    allowed: Option<&BTreeSet<String>>,
) -> Option<Vec<bool>> {
    let query = oracle_query_vector(q, vt)?;
    let candidates: Vec<(String, Vec<f64>)> = emojis
        .iter()
        .filter(|e| allowed.is_none_or(|a| a.contains(&e.codepoint)))
        .filter_map(|e| e.vector.clone().map(|v| (e.codepoint.clone(), v)))
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let ranked = exhaustive_rank(&query, &candidates);
    Some(ks.iter().map(|&k| ranked.iter().take(k).any(|(c, _)| *c == q.gold)).collect())
}

/// The `n` most frequent gold codepoints, ties by codepoint.
pub fn oracle_top(queries: &[OracleQuery], n: usize) -> BTreeSet<String> {
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for q in queries {
        *freq.entry(&q.gold).or_default() += 1;
    }
    let mut v: Vec<(&str, usize)> = freq.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    v.into_iter().take(n).map(|(c, _)| c.to_string()).collect()
}
