//! Labeled query datasets, the evaluation grid, hit@k accuracy, majority
//! labels, and Cohen's kappa.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding_store::EmbeddingStore;
use crate::error::{Error, Result};
use crate::knowledge_base::{normalize_codepoint, EmojiInventory, Strategy};
use crate::scorer::{rank, Ranking};
use crate::text::Preprocessor;
use crate::vectorizer::{
    build_emoji_vectors, caption_vector, compose_query, image_vector, ClassProbabilities, Fusion,
    Mode, QueryVector,
};

/// One image with its classifier output, caption, and gold emoji.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledQuery {
    pub id: String,
    pub classes: ClassProbabilities,
    #[serde(default)]
    pub caption: String,
    pub gold: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineRejection {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct QueryLoad {
    pub queries: Vec<LabeledQuery>,
    pub rejected: Vec<LineRejection>,
}

/// Parses query JSONL, rejecting bad lines individually. Blank lines are
/// skipped; a repeated id is rejected after its first occurrence.
pub fn parse_queries(text: &str) -> QueryLoad {
    let mut queries = Vec::new();
    let mut rejected = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let parsed = serde_json::from_str::<LabeledQuery>(line)
            .map_err(|e| e.to_string())
            .and_then(|mut q| {
                if q.id.trim().is_empty() {
                    return Err("empty id".to_string());
                }
                q.gold = normalize_codepoint(&q.gold).map_err(|e| e.to_string())?;
                if !ids.insert(q.id.clone()) {
                    return Err(format!("duplicate id {:?}", q.id));
                }
                Ok(q)
            });
        match parsed {
            Ok(q) => queries.push(q),
            Err(reason) => {
                log::warn!("query line {line_no} rejected: {reason}");
                rejected.push(LineRejection {
                    line: line_no,
                    reason,
                });
            }
        }
    }
    QueryLoad { queries, rejected }
}

/// Loads a query JSONL file; at least one valid query is required.
pub fn load_queries(path: impl AsRef<Path>) -> Result<QueryLoad> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let load = parse_queries(&text);
    if load.queries.is_empty() {
        return Err(Error::EmptyDataset {
            path: path.to_path_buf(),
            rejected: load.rejected.len(),
        });
    }
    Ok(load)
}

/// True when `gold` is among the first `k` entries.
pub fn hit_at_k(ranking: &Ranking, gold: &str, k: usize) -> bool {
    ranking.entries.iter().take(k).any(|e| e.codepoint == gold)
}

/// Hit counter for one grid cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HitTally {
    pub hits: u64,
    pub total: u64,
}

impl HitTally {
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = bool>) -> Self {
        let mut tally = Self::default();
        for hit in outcomes {
            tally.record(hit);
        }
        tally
    }

    pub fn record(&mut self, hit: bool) {
        self.total += 1;
        self.hits += u64::from(hit);
    }

    /// `hits / total`, or zero for an empty tally.
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.hits as f64 / self.total as f64
        }
    }

    pub fn accuracy_percent(&self) -> f64 {
        100.0 * self.accuracy()
    }
}

/// Strict plurality winner, or `None` when the top count is shared.
pub fn majority_label<S: AsRef<str>>(labels: &[S]) -> Option<&str> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l.as_ref()).or_default() += 1;
    }
    let best = *counts.values().max()?;
    let mut winners = counts.iter().filter(|(_, &c)| c == best);
    let (label, _) = winners.next()?;
    if winners.next().is_some() {
        None
    } else {
        Some(label)
    }
}

/// Cohen's kappa for two raters over the union of their categories.
///
/// Computed from integer counts as
/// `(n·agree − Σ a_c·b_c) / (n² − Σ a_c·b_c)`. When chance agreement is
/// total (both raters used one and the same category) kappa is 1.
pub fn cohen_kappa<S: AsRef<str>>(a: &[S], b: &[S]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidAnnotations("no items to compare".into()));
    }
    let n = a.len() as u128;
    let mut agree = 0u128;
    let mut marg_a: HashMap<&str, u128> = HashMap::new();
    let mut marg_b: HashMap<&str, u128> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x.as_ref(), y.as_ref());
        agree += u128::from(x == y);
        *marg_a.entry(x).or_default() += 1;
        *marg_b.entry(y).or_default() += 1;
    }
    let chance: u128 = marg_a
        .iter()
        .map(|(c, na)| na * marg_b.get(c).copied().unwrap_or(0))
        .sum();
    let denom = n * n - chance;
    if denom == 0 {
        return Ok(1.0);
    }
    let numer = (n * agree) as f64 - chance as f64;
    Ok(numer / denom as f64)
}

/// Per-item labels from a fixed set of annotators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationSet {
    items: BTreeMap<String, Vec<String>>,
    annotators: usize,
}

#[derive(Deserialize)]
struct AnnotationLine {
    id: String,
    labels: Vec<String>,
}

impl AnnotationSet {
    /// Every item must carry the same number of labels.
    pub fn new(items: BTreeMap<String, Vec<String>>) -> Result<Self> {
        let annotators = items.values().next().map_or(0, Vec::len);
        if let Some((id, labels)) = items.iter().find(|(_, l)| l.len() != annotators) {
            return Err(Error::InvalidAnnotations(format!(
                "item {id:?} has {} labels, expected {annotators}",
                labels.len()
            )));
        }
        Ok(AnnotationSet { items, annotators })
    }

    /// Parses annotation JSONL: `{"id": str, "labels": [codepoint, ...]}`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut items = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: String| Error::InvalidAnnotations(format!("line {}: {msg}", i + 1));
            let parsed: AnnotationLine = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
            let labels = parsed
                .labels
                .iter()
                .map(|l| normalize_codepoint(l))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| bad(e.to_string()))?;
            if items.insert(parsed.id.clone(), labels).is_some() {
                return Err(bad(format!("duplicate id {:?}", parsed.id)));
            }
        }
        if items.is_empty() {
            return Err(Error::InvalidAnnotations("no annotated items".into()));
        }
        Self::new(items)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn annotators(&self) -> usize {
        self.annotators
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &BTreeMap<String, Vec<String>> {
        &self.items
    }

    /// All labels from one annotator, in item-id order.
    pub fn column(&self, annotator: usize) -> Vec<&str> {
        self.items.values().map(|l| l[annotator].as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairKappa {
    pub first: usize,
    pub second: usize,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaTable {
    pub items: usize,
    pub annotators: usize,
    pub pairs: Vec<PairKappa>,
    pub mean: f64,
}

/// Kappa for every annotator pair plus their unweighted mean.
pub fn pairwise_kappa(ann: &AnnotationSet) -> Result<KappaTable> {
    if ann.annotators() < 2 {
        return Err(Error::TooFewAnnotators(ann.annotators()));
    }
    let mut pairs = Vec::new();
    for i in 0..ann.annotators() {
        for j in i + 1..ann.annotators() {
            pairs.push(PairKappa {
                first: i,
                second: j,
                kappa: cohen_kappa(&ann.column(i), &ann.column(j))?,
            });
        }
    }
    let mean = pairs.iter().map(|p| p.kappa).sum::<f64>() / pairs.len() as f64;
    Ok(KappaTable {
        items: ann.len(),
        annotators: ann.annotators(),
        pairs,
        mean,
    })
}

/// Result of replacing gold labels with annotator majorities.
#[derive(Debug, Clone)]
pub struct MajorityGold {
    pub queries: Vec<LabeledQuery>,
    /// Items whose annotators produced no strict plurality.
    pub no_majority: Vec<String>,
    /// Queries with no annotation entry.
    pub unannotated: Vec<String>,
}

/// Sets each query's gold to the majority annotator label. Queries without a
/// majority or without annotations are dropped and listed.
pub fn apply_majority_gold(queries: &[LabeledQuery], ann: &AnnotationSet) -> MajorityGold {
    let mut out = MajorityGold {
        queries: Vec::new(),
        no_majority: Vec::new(),
        unannotated: Vec::new(),
    };
    for q in queries {
        match ann.items().get(&q.id) {
            None => out.unannotated.push(q.id.clone()),
            Some(labels) => match majority_label(labels) {
                None => out.no_majority.push(q.id.clone()),
                Some(label) => out.queries.push(LabeledQuery {
                    gold: label.to_string(),
                    ..q.clone()
                }),
            },
        }
    }
    out
}

/// Candidate set used for scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Restriction {
    All,
    /// The `n` most frequent gold emojis of the evaluated dataset.
    TopFrequent(usize),
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Restriction::All => f.write_str("all"),
            Restriction::TopFrequent(n) => write!(f, "top{n}"),
        }
    }
}

impl FromStr for Restriction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if lower == "all" || lower == "none" {
            return Ok(Restriction::All);
        }
        lower
            .strip_prefix("top")
            .unwrap_or(&lower)
            .trim_start_matches(['-', '_'])
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Restriction::TopFrequent)
            .ok_or_else(|| Error::UnknownName {
                kind: "restriction",
                value: s.to_string(),
            })
    }
}

impl Serialize for Restriction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Restriction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The `n` most frequent gold codepoints; ties go to the smaller codepoint.
pub fn top_frequent_golds(queries: &[LabeledQuery], n: usize) -> BTreeSet<String> {
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for q in queries {
        *freq.entry(q.gold.as_str()).or_default() += 1;
    }
    let mut by_count: Vec<_> = freq.into_iter().collect();
    by_count.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    by_count.into_iter().take(n).map(|(cp, _)| cp.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub strategies: Vec<Strategy>,
    pub modes: Vec<Mode>,
    pub ks: Vec<usize>,
    pub restrictions: Vec<Restriction>,
    pub fusion: Fusion,
}

impl Default for GridConfig {
    /// Every strategy and mode, k ∈ {1, 3}, full candidate set.
    fn default() -> Self {
        GridConfig {
            strategies: Strategy::ALL.to_vec(),
            modes: Mode::ALL.to_vec(),
            ks: vec![1, 3],
            restrictions: vec![Restriction::All],
            fusion: Fusion::NormalizeAdd,
        }
    }
}

impl GridConfig {
    fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::EmptyGrid("no strategies"));
        }
        if self.modes.is_empty() {
            return Err(Error::EmptyGrid("no modes"));
        }
        if self.ks.is_empty() {
            return Err(Error::EmptyGrid("no k values"));
        }
        if self.restrictions.is_empty() {
            return Err(Error::EmptyGrid("no restrictions"));
        }
        if self.ks.contains(&0) {
            return Err(Error::InvalidK);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub strategy: Strategy,
    pub mode: Mode,
    pub k: usize,
    pub restriction: Restriction,
    pub hits: u64,
    pub total: u64,
    pub accuracy: f64,
    /// Queries left out of `total`, by reason.
    pub skipped: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub strategies: Vec<Strategy>,
    pub modes: Vec<Mode>,
    pub ks: Vec<usize>,
    pub restrictions: Vec<Restriction>,
    pub fusion: Fusion,
    pub embedding_dimension: usize,
    pub vocabulary_size: usize,
    pub inventory_version: String,
    pub inventory_size: usize,
    pub query_count: usize,
    /// Largest number of classes exported for any query.
    pub max_classes_per_query: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageStats {
    /// Emojis with no in-vocabulary knowledge, per strategy.
    pub empty_emojis: BTreeMap<Strategy, usize>,
    pub mean_image_coverage: f64,
    pub mean_caption_coverage: f64,
    pub empty_images: usize,
    pub empty_captions: usize,
    /// `VT` queries that fell back to image-only scoring.
    pub degraded_vt_queries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ReportConfig,
    /// Codepoints in each top-N candidate set, sorted.
    pub restriction_sets: BTreeMap<String, Vec<String>>,
    pub cells: Vec<GridCell>,
    pub coverage: CoverageStats,
    /// Dataset items dropped before evaluation, by reason.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub excluded: BTreeMap<String, usize>,
}

const SKIP_EMPTY_QUERY: &str = "empty_query";
const SKIP_NO_CANDIDATES: &str = "no_candidates";
const SKIP_OUTSIDE_RESTRICTION: &str = "gold_outside_restriction";

/// Runs every (strategy, mode, restriction, k) cell over `queries`.
///
/// Queries are processed in id order, so the report does not depend on the
/// input order. Per-query failures are counted as skips and never abort the
/// grid.
pub fn evaluate(
    queries: &[LabeledQuery],
    store: &EmbeddingStore,
    inventory: &EmojiInventory,
    preprocessor: &Preprocessor,
    config: &GridConfig,
) -> Result<EvalReport> {
    config.validate()?;
    let mut queries: Vec<&LabeledQuery> = queries.iter().collect();
    queries.sort_by(|a, b| {
        a.id.cmp(&b.id)
            .then_with(|| a.gold.cmp(&b.gold))
            .then_with(|| a.caption.cmp(&b.caption))
    });
    let owned: Vec<LabeledQuery> = queries.iter().map(|q| (*q).clone()).collect();

    let images: Vec<_> = queries.iter().map(|q| image_vector(store, &q.classes)).collect();
    let captions: Vec<_> = queries.iter().map(|q| caption_vector(store, &q.caption)).collect();

    let n = queries.len().max(1) as f64;
    let coverage_base = CoverageStats {
        empty_emojis: BTreeMap::new(),
        mean_image_coverage: images.iter().map(|i| i.coverage).sum::<f64>() / n,
        mean_caption_coverage: captions.iter().map(|c| c.coverage()).sum::<f64>() / n,
        empty_images: images.iter().filter(|i| i.is_empty()).count(),
        empty_captions: captions.iter().filter(|c| c.is_empty()).count(),
        degraded_vt_queries: 0,
    };

    let mut query_vectors: BTreeMap<Mode, Vec<Result<QueryVector>>> = BTreeMap::new();
    for &mode in &config.modes {
        query_vectors.entry(mode).or_insert_with(|| {
            images
                .iter()
                .zip(&captions)
                .map(|(img, cap)| compose_query(img, Some(cap), mode, config.fusion))
                .collect()
        });
    }

    let mut restriction_sets: BTreeMap<Restriction, BTreeSet<String>> = BTreeMap::new();
    for &r in &config.restrictions {
        if let Restriction::TopFrequent(top) = r {
            restriction_sets.insert(r, top_frequent_golds(&owned, top));
        }
    }

    let k_max = *config.ks.iter().max().expect("validated non-empty");
    let mut coverage = coverage_base;
    if let Some(vt) = query_vectors.get(&Mode::VT) {
        coverage.degraded_vt_queries = vt.iter().filter(|q| q.as_ref().is_ok_and(|q| q.degraded)).count();
    }
    let mut cells = Vec::new();
    for &strategy in &config.strategies {
        let vectors = build_emoji_vectors(store, inventory, strategy, preprocessor);
        coverage.empty_emojis.insert(strategy, vectors.empty_count());
        for &mode in &config.modes {
            let composed = &query_vectors[&mode];
            for &restriction in &config.restrictions {
                let allowed = restriction_sets.get(&restriction);
                let mut tallies = vec![HitTally::default(); config.ks.len()];
                let mut skipped: BTreeMap<String, u64> = BTreeMap::new();
                for (query, qv) in queries.iter().zip(composed) {
                    if allowed.is_some_and(|set| !set.contains(&query.gold)) {
                        *skipped.entry(SKIP_OUTSIDE_RESTRICTION.into()).or_default() += 1;
                        continue;
                    }
                    let qv = match qv {
                        Ok(qv) => qv,
                        Err(_) => {
                            *skipped.entry(SKIP_EMPTY_QUERY.into()).or_default() += 1;
                            continue;
                        }
                    };
                    match rank(&qv.vector, &vectors, k_max, allowed) {
                        Ok(ranking) => {
                            for (tally, &k) in tallies.iter_mut().zip(&config.ks) {
                                tally.record(hit_at_k(&ranking, &query.gold, k));
                            }
                        }
                        Err(Error::NoCandidates) => {
                            *skipped.entry(SKIP_NO_CANDIDATES.into()).or_default() += 1;
                        }
                        Err(e) => return Err(e),
                    }
                }
                for (tally, &k) in tallies.iter().zip(&config.ks) {
                    cells.push(GridCell {
                        strategy,
                        mode,
                        k,
                        restriction,
                        hits: tally.hits,
                        total: tally.total,
                        accuracy: tally.accuracy(),
                        skipped: skipped.clone(),
                    });
                }
            }
        }
    }

    Ok(EvalReport {
        config: ReportConfig {
            strategies: config.strategies.clone(),
            modes: config.modes.clone(),
            ks: config.ks.clone(),
            restrictions: config.restrictions.clone(),
            fusion: config.fusion,
            embedding_dimension: store.dimension(),
            vocabulary_size: store.token_count(),
            inventory_version: inventory.source_version().to_string(),
            inventory_size: inventory.len(),
            query_count: queries.len(),
            max_classes_per_query: queries.iter().map(|q| q.classes.len()).max().unwrap_or(0),
        },
        restriction_sets: restriction_sets
            .into_iter()
            .map(|(r, set)| (r.to_string(), set.into_iter().collect()))
            .collect(),
        cells,
        coverage,
        excluded: BTreeMap::new(),
    })
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per grid cell: strategy, mode, k, restriction, hits, total, accuracy.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["strategy", "mode", "k", "restriction", "hits", "total", "accuracy"])?;
        for c in &self.cells {
            w.write_record([
                c.strategy.to_string(),
                c.mode.to_string(),
                c.k.to_string(),
                c.restriction.to_string(),
                c.hits.to_string(),
                c.total.to_string(),
                c.accuracy.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Human-readable accuracy table.
    pub fn summary_table(&self) -> String {
        let mut out = format!(
            "{:<22} {:<4} {:>3} {:<12} {:>8} {:>8} {:>9}\n",
            "strategy", "mode", "k", "restriction", "hits", "total", "accuracy"
        );
        for c in &self.cells {
            out.push_str(&format!(
                "{:<22} {:<4} {:>3} {:<12} {:>8} {:>8} {:>8.2}%\n",
                c.strategy.as_str(),
                c.mode.as_str(),
                c.k,
                c.restriction.to_string(),
                c.hits,
                c.total,
                100.0 * c.accuracy
            ));
        }
        out
    }
}
