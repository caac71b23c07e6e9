//! `emojirec` command-line tool.
//!
//! Exit codes: 0 success, 2 usage or I/O error, 3 empty query, 4 empty dataset.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use emojirec::evaluator::apply_majority_gold;
use emojirec::{
    evaluate, load_inventory, load_queries, load_word_embeddings, pairwise_kappa, AnnotationSet,
    ClassProbabilities, Error, Fusion, GridConfig, ImageQuery, Mode, Preprocessor, Recommender, Restriction,
    RuleLemmatizer, StopWords, Strategy, VectorArtifact,
};

#[derive(Parser)]
#[command(name = "emojirec", version, about = "Recommend emojis for images from classifier output and captions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build emoji vector sets and write them as a JSON artifact.
    Build(BuildArgs),
    /// Rank emojis for one or more image queries.
    Recommend(RecommendArgs),
    /// Run the strategy × mode × k × restriction evaluation grid.
    Evaluate(EvaluateArgs),
    /// Pairwise Cohen's kappa between annotators.
    Kappa(KappaArgs),
}

#[derive(Args)]
struct TextArgs {
    /// Stopword list replacing the bundled English list.
    #[arg(long, value_name = "PATH")]
    stopwords: Option<PathBuf>,
}

impl TextArgs {
    fn preprocessor(&self) -> Result<Preprocessor, Failure> {
        let stopwords = match &self.stopwords {
            Some(p) => StopWords::from_file(p).map_err(flag("--stopwords"))?,
            None => StopWords::english(),
        };
        Ok(Preprocessor::new(stopwords, Box::new(RuleLemmatizer::new())))
    }
}

#[derive(Args)]
struct BuildArgs {
    /// Word-embedding text file.
    #[arg(long, value_name = "PATH")]
    embeddings: PathBuf,
    /// Emoji inventory JSON.
    #[arg(long, value_name = "PATH")]
    inventory: PathBuf,
    /// Knowledge strategies to build.
    #[arg(long, value_delimiter = ',', default_values = ["names", "senses", "definitions", "processed_definitions"])]
    strategy: Vec<Strategy>,
    #[command(flatten)]
    text: TextArgs,
    /// Output artifact path.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct RecommendArgs {
    #[arg(long, value_name = "PATH")]
    embeddings: PathBuf,
    #[arg(long, value_name = "PATH", required_unless_present = "artifact")]
    inventory: Option<PathBuf>,
    /// Prebuilt vector artifact used instead of the inventory.
    #[arg(long, value_name = "PATH", conflicts_with = "inventory")]
    artifact: Option<PathBuf>,
    #[arg(long, default_value = "processed_definitions")]
    strategy: Strategy,
    #[arg(long, default_value = "vt")]
    mode: Mode,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value = "normalize-add")]
    fusion: Fusion,
    #[command(flatten)]
    text: TextArgs,
    /// Query JSONL file; every line is ranked.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["label", "caption"])]
    query: Option<PathBuf>,
    /// Inline class probability as LABEL=PROB; repeatable.
    #[arg(long, value_name = "LABEL=PROB", required_unless_present = "query")]
    label: Vec<String>,
    /// Inline caption.
    #[arg(long)]
    caption: Option<String>,
    /// Emit JSON instead of tab-separated lines.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, value_name = "PATH")]
    embeddings: PathBuf,
    #[arg(long, value_name = "PATH")]
    inventory: PathBuf,
    /// Labeled query JSONL.
    #[arg(long, value_name = "PATH")]
    queries: PathBuf,
    /// Annotation JSONL; majority labels replace the queries' gold emojis.
    #[arg(long, value_name = "PATH")]
    annotations: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values = ["names", "senses", "definitions", "processed_definitions"])]
    strategy: Vec<Strategy>,
    #[arg(long, value_delimiter = ',', default_values = ["v", "vt"])]
    mode: Vec<Mode>,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 3])]
    k: Vec<usize>,
    /// Also score against the N most frequent gold emojis; repeatable.
    #[arg(long, value_delimiter = ',', value_name = "N")]
    restrict_top: Vec<usize>,
    #[arg(long, default_value = "normalize-add")]
    fusion: Fusion,
    #[command(flatten)]
    text: TextArgs,
    /// Report path prefix; `.json` and `.csv` files are written.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Print the JSON report instead of the summary table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct KappaArgs {
    /// Annotation JSONL.
    #[arg(long, value_name = "PATH")]
    annotations: PathBuf,
    #[arg(long)]
    json: bool,
}

enum Failure {
    Usage(String),
    EmptyQuery(String),
    EmptyDataset(String),
}

fn flag(name: &'static str) -> impl Fn(Error) -> Failure {
    move |e| {
        let mut failure = Failure::from(e);
        match &mut failure {
            Failure::Usage(m) | Failure::EmptyQuery(m) | Failure::EmptyDataset(m) => *m = format!("{name}: {m}"),
        }
        failure
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::EmptyQuery => Failure::EmptyQuery(e.to_string()),
            Error::EmptyDataset { .. } => Failure::EmptyDataset(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(args) => cmd_build(args),
        Command::Recommend(args) => cmd_recommend(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Kappa(args) => cmd_kappa(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (code, msg) = match failure {
                Failure::Usage(m) => (2, m),
                Failure::EmptyQuery(m) => (3, m),
                Failure::EmptyDataset(m) => (4, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn cmd_build(args: BuildArgs) -> Result<(), Failure> {
    let store = load_word_embeddings(&args.embeddings, None).map_err(flag("--embeddings"))?;
    let inventory = load_inventory(&args.inventory).map_err(flag("--inventory"))?;
    let pre = args.text.preprocessor()?;
    let strategies: BTreeSet<Strategy> = args.strategy.iter().copied().collect();
    let sets = strategies
        .into_iter()
        .map(|s| emojirec::build_emoji_vectors(&store, &inventory, s, &pre))
        .collect::<Vec<_>>();
    for set in &sets {
        eprintln!(
            "{}: {} emojis, {} without in-vocabulary knowledge",
            set.strategy,
            set.len(),
            set.empty_count()
        );
    }
    let artifact = VectorArtifact::new(store.dimension(), inventory.source_version(), sets);
    artifact.write(&args.out)?;
    Ok(())
}

fn parse_label(raw: &str) -> Result<(String, f64), Failure> {
    let (label, prob) = raw
        .rsplit_once('=')
        .ok_or_else(|| Failure::Usage(format!("--label expects LABEL=PROB, got {raw:?}")))?;
    let prob: f64 = prob
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("--label {raw:?}: probability is not a number")))?;
    Ok((label.trim().to_string(), prob))
}

#[derive(Serialize)]
struct RecommendOutput<'a> {
    id: &'a str,
    mode: Mode,
    degraded: bool,
    ranking: &'a [emojirec::scorer::RankedEmoji],
}

fn cmd_recommend(args: RecommendArgs) -> Result<(), Failure> {
    let store = load_word_embeddings(&args.embeddings, None).map_err(flag("--embeddings"))?;
    let recommender = match (&args.artifact, &args.inventory) {
        (Some(path), _) => {
            let artifact = VectorArtifact::read(path).map_err(flag("--artifact"))?;
            Recommender::from_sets(store, artifact.sets)?
        }
        (None, Some(path)) => Recommender::new(store, load_inventory(path).map_err(flag("--inventory"))?, args.text.preprocessor()?),
        (None, None) => unreachable!("clap requires --inventory or --artifact"),
    }
    .with_fusion(args.fusion);

    let queries = match &args.query {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            let mut queries = Vec::new();
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let q: ImageQuery = serde_json::from_str(line)
                    .map_err(|e| Failure::Usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
                queries.push(q);
            }
            if queries.is_empty() {
                return Err(Failure::EmptyDataset(format!("no queries in {}", path.display())));
            }
            queries
        }
        None => {
            let pairs = args.label.iter().map(|l| parse_label(l)).collect::<Result<Vec<_>, _>>()?;
            vec![ImageQuery {
                id: "inline".into(),
                classes: ClassProbabilities::from_pairs(pairs)?,
                caption: args.caption.clone().unwrap_or_default(),
            }]
        }
    };

    let mut results = Vec::new();
    let mut empty = None;
    for q in &queries {
        match recommender.recommend(q, args.strategy, args.mode, args.k, None) {
            Ok(rec) => {
                if rec.query.degraded {
                    eprintln!("warning: query {:?} has no usable caption; scored with image features only", q.id);
                }
                results.push((q, rec));
            }
            Err(Error::EmptyQuery) => {
                eprintln!("error: query {:?} has no usable image or caption signal", q.id);
                empty.get_or_insert(q.id.clone());
            }
            Err(e) => return Err(e.into()),
        }
    }

    if args.json {
        let out: Vec<_> = results
            .iter()
            .map(|(q, rec)| RecommendOutput {
                id: &q.id,
                mode: rec.query.mode,
                degraded: rec.query.degraded,
                ranking: &rec.ranking.entries,
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&out).map_err(Error::from)?);
    } else {
        let many = queries.len() > 1;
        for (q, rec) in &results {
            if many {
                println!("# {}", q.id);
            }
            for e in &rec.ranking.entries {
                match e.score {
                    Some(s) => println!("{}\t{s:.6}", e.codepoint),
                    None => println!("{}\tundefined", e.codepoint),
                }
            }
        }
    }
    match empty {
        Some(id) => Err(Failure::EmptyQuery(format!("query {id:?} is empty"))),
        None => Ok(()),
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let store = load_word_embeddings(&args.embeddings, None).map_err(flag("--embeddings"))?;
    let inventory = load_inventory(&args.inventory).map_err(flag("--inventory"))?;
    let pre = args.text.preprocessor()?;
    let load = load_queries(&args.queries).map_err(flag("--queries"))?;

    let mut excluded = std::collections::BTreeMap::new();
    if !load.rejected.is_empty() {
        excluded.insert("rejected_lines".to_string(), load.rejected.len());
    }
    let queries = match &args.annotations {
        Some(path) => {
            let ann = AnnotationSet::load(path).map_err(flag("--annotations"))?;
            let outcome = apply_majority_gold(&load.queries, &ann);
            if !outcome.no_majority.is_empty() {
                excluded.insert("no_majority".to_string(), outcome.no_majority.len());
            }
            if !outcome.unannotated.is_empty() {
                excluded.insert("unannotated".to_string(), outcome.unannotated.len());
            }
            outcome.queries
        }
        None => load.queries,
    };
    if queries.is_empty() {
        return Err(Failure::EmptyDataset("no queries left to evaluate".into()));
    }

    let mut restrictions = vec![Restriction::All];
    for &n in &args.restrict_top {
        if n == 0 {
            return Err(Failure::Usage("--restrict-top must be at least 1".into()));
        }
        restrictions.push(Restriction::TopFrequent(n));
    }
    restrictions.dedup();
    let config = GridConfig {
        strategies: dedup(args.strategy),
        modes: dedup(args.mode),
        ks: dedup(args.k),
        restrictions,
        fusion: args.fusion,
    };
    let mut report = evaluate(&queries, &store, &inventory, &pre, &config)?;
    report.excluded = excluded;

    let json = report.to_json()?;
    write_file(&args.out.with_extension("json"), &json)?;
    write_file(&args.out.with_extension("csv"), &report.to_csv()?)?;
    if args.json {
        print!("{json}");
    } else {
        print!("{}", report.summary_table());
    }
    Ok(())
}

fn dedup<T: PartialEq + Copy>(items: Vec<T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(items.len());
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

fn cmd_kappa(args: KappaArgs) -> Result<(), Failure> {
    let ann = AnnotationSet::load(&args.annotations).map_err(flag("--annotations"))?;
    let table = pairwise_kappa(&ann)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&table).map_err(Error::from)?);
        return Ok(());
    }
    println!("items\t{}", table.items);
    println!("annotators\t{}", table.annotators);
    for p in &table.pairs {
        println!("kappa({},{})\t{:.6}", p.first + 1, p.second + 1, p.kappa);
    }
    println!("mean\t{:.6}", table.mean);
    Ok(())
}
