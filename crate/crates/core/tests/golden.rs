mod common;

use std::collections::BTreeSet;

use common::*;
use emojirec::{
    evaluate, load_inventory, load_queries, load_word_embeddings, GridConfig, ImageQuery, Mode, Preprocessor,
    Recommender, Restriction, Strategy,
};

fn kind(s: Strategy) -> Kind {
    match s {
        Strategy::Names => Kind::Names,
        Strategy::Senses => Kind::Senses,
        Strategy::Definitions => Kind::Definitions,
        Strategy::ProcessedDefinitions => Kind::Processed,
    }
}

#[test]
fn grid_accuracies_match_brute_force() {
    let store = load_word_embeddings(golden("embeddings.txt"), Some(6)).unwrap();
    let inventory = load_inventory(golden("inventory.json")).unwrap();
    let queries = load_queries(golden("queries.jsonl")).unwrap().queries;
    let config = GridConfig {
        restrictions: vec![Restriction::All, Restriction::TopFrequent(5)],
        ..GridConfig::default()
    };
    let report = evaluate(&queries, &store, &inventory, &Preprocessor::default(), &config).unwrap();

    let words = read_words(&golden("embeddings.txt"));
    let inv_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(golden("inventory.json")).unwrap()).unwrap();
    let oq = oracle_queries(&words, 6, &std::fs::read_to_string(golden("queries.jsonl")).unwrap());
    let top5 = oracle_top(&oq, 5);
    assert_eq!(report.restriction_sets["top5"], top5.iter().cloned().collect::<Vec<_>>());

    assert_eq!(report.cells.len(), 4 * 2 * 2 * 2);
    for cell in &report.cells {
        let emojis = oracle_emojis(&words, 6, &inv_json, kind(cell.strategy));
        let allowed = match cell.restriction {
            Restriction::All => None,
            Restriction::TopFrequent(_) => Some(&top5),
        };
        let (mut hits, mut total) = (0u64, 0u64);
        for q in &oq {
            if allowed.is_some_and(|a| !a.contains(&q.gold)) {
                continue;
            }
            if let Some(h) = oracle_hits(q, &emojis, cell.mode == Mode::VT, &[cell.k], allowed) {
                total += 1;
                hits += h[0] as u64;
            }
        }
        assert_eq!((cell.hits, cell.total), (hits, total), "{:?}", cell);
        assert_eq!(cell.accuracy, hits as f64 / total as f64);
    }
}

#[test]
fn recommend_puts_oracle_best_first() {
    let store = load_word_embeddings(golden("embeddings.txt"), None).unwrap();
    let inventory = load_inventory(golden("inventory.json")).unwrap();
    let rec = Recommender::new(store, inventory, Preprocessor::default());
    let words = read_words(&golden("embeddings.txt"));
    let inv_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(golden("inventory.json")).unwrap()).unwrap();
    let text = std::fs::read_to_string(golden("queries.jsonl")).unwrap();
    let oq = oracle_queries(&words, 6, &text);
    let emojis = oracle_emojis(&words, 6, &inv_json, Kind::Senses);
    for (line, q) in text.lines().zip(&oq) {
        let query: ImageQuery = serde_json::from_str(line).unwrap();
        let qv = oracle_query_vector(q, true).unwrap();
        let candidates: Vec<_> = emojis.iter().filter_map(|e| e.vector.clone().map(|v| (e.codepoint.clone(), v))).collect();
        let expected = exhaustive_rank(&qv, &candidates);
        let got = rec.recommend(&query, Strategy::Senses, Mode::VT, 5, None).unwrap();
        let got: Vec<&str> = got.ranking.codepoints().collect();
        let want: Vec<&str> = expected.iter().take(5).map(|(c, _)| c.as_str()).collect();
        assert_eq!(got, want, "query {}", q.id);
    }
}

#[test]
fn every_emoji_has_knowledge_under_every_strategy() {
    let store = load_word_embeddings(golden("embeddings.txt"), None).unwrap();
    let inventory = load_inventory(golden("inventory.json")).unwrap();
    assert_eq!(inventory.len(), 10);
    assert!(inventory.get("U+1F468 U+200D U+1F373").is_some());
    for s in Strategy::ALL {
        let set = emojirec::build_emoji_vectors(&store, &inventory, s, &Preprocessor::default());
        assert_eq!(set.len(), 10);
        assert_eq!(set.empty_count(), 0, "{s}");
    }
}

#[test]
fn majority_gold_drops_split_items() {
    let ann = emojirec::AnnotationSet::load(golden("annotations.jsonl")).unwrap();
    let queries = load_queries(golden("queries.jsonl")).unwrap().queries;
    let out = emojirec::evaluator::apply_majority_gold(&queries, &ann);
    assert_eq!(out.no_majority, vec!["q07".to_string()]);
    assert_eq!(out.queries.len(), 11);
    let gold: BTreeSet<_> = out.queries.iter().map(|q| (q.id.as_str(), q.gold.as_str())).collect();
    assert!(gold.contains(&("q04", "U+1F355")));
}
