//! Knowledge-enabled emoji recommendation.
//!
//! Emojis are embedded as bag-of-words averages over their names, sense
//! words, or sense definitions. An image is embedded as the
//! probability-weighted sum of its classifier labels' word vectors,
//! optionally fused with its caption, and emojis are ranked by cosine
//! similarity to that query vector.

pub mod artifact;
pub mod embedding_store;
pub mod error;
pub mod evaluator;
pub mod knowledge_base;
pub mod recommender;
pub mod scorer;
pub mod text;
pub mod vectorizer;

pub use artifact::VectorArtifact;
pub use embedding_store::{bow_embedding, load_word_embeddings, tokenize, BowResult, EmbeddingStore, TokenCounts, Vector};
pub use error::{Error, Result};
pub use evaluator::{
    cohen_kappa, evaluate, hit_at_k, load_queries, majority_label, pairwise_kappa, AnnotationSet, EvalReport,
    GridConfig, HitTally, LabeledQuery, Restriction,
};
pub use knowledge_base::{knowledge_text, load_inventory, EmojiInventory, EmojiRecord, Strategy};
pub use recommender::{ImageQuery, Recommendation, Recommender};
pub use scorer::{cosine, rank, Ranking};
pub use text::{preprocess, Lemmatizer, Preprocessor, RuleLemmatizer, StopWords};
pub use vectorizer::{
    build_emoji_vectors, class_label_vector, compose_query, image_vector, ClassProbabilities, EmojiVectorSet,
    Fusion, ImageVector, Mode, QueryVector,
};
