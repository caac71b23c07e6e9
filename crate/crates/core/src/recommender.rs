//! Single-query recommendation over a loaded store and inventory.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::embedding_store::EmbeddingStore;
use crate::error::{Error, Result};
use crate::knowledge_base::{EmojiInventory, Strategy};
use crate::scorer::{rank, Ranking};
use crate::text::Preprocessor;
use crate::vectorizer::{
    build_emoji_vectors, caption_vector, compose_query, image_vector, ClassProbabilities, EmojiVectorSet, Fusion,
    Mode, QueryVector,
};

/// An image to recommend for: classifier output and an optional caption.
///
/// Deserializes from the query JSONL schema; a `gold` field, if present, is
/// ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageQuery {
    #[serde(default)]
    pub id: String,
    pub classes: ClassProbabilities,
    #[serde(default)]
    pub caption: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub query: QueryVector,
    pub ranking: Ranking,
}

/// Emoji vector sets come either from the inventory (built lazily, once per
/// strategy) or from a prebuilt artifact.
pub struct Recommender {
    store: EmbeddingStore,
    inventory: Option<EmojiInventory>,
    preprocessor: Preprocessor,
    fusion: Fusion,
    sets: Mutex<BTreeMap<Strategy, Arc<EmojiVectorSet>>>,
}

impl Recommender {
    pub fn new(store: EmbeddingStore, inventory: EmojiInventory, preprocessor: Preprocessor) -> Self {
        Recommender {
            store,
            inventory: Some(inventory),
            preprocessor,
            fusion: Fusion::default(),
            sets: Mutex::new(BTreeMap::new()),
        }
    }

    /// Uses prebuilt vector sets instead of an inventory.
    pub fn from_sets(store: EmbeddingStore, sets: Vec<EmojiVectorSet>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for set in sets {
            if set.dimension != store.dimension() {
                return Err(Error::VectorDimension {
                    left: store.dimension(),
                    right: set.dimension,
                });
            }
            map.insert(set.strategy, Arc::new(set));
        }
        Ok(Recommender {
            store,
            inventory: None,
            preprocessor: Preprocessor::default(),
            fusion: Fusion::default(),
            sets: Mutex::new(map),
        })
    }

    pub fn with_fusion(mut self, fusion: Fusion) -> Self {
        self.fusion = fusion;
        self
    }

    pub fn store(&self) -> &EmbeddingStore {
        &self.store
    }

    pub fn inventory(&self) -> Option<&EmojiInventory> {
        self.inventory.as_ref()
    }

    pub fn vector_set(&self, strategy: Strategy) -> Result<Arc<EmojiVectorSet>> {
        let mut sets = self.sets.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(set) = sets.get(&strategy) {
            return Ok(Arc::clone(set));
        }
        let inventory = self.inventory.as_ref().ok_or_else(|| {
            Error::InvalidArtifact(format!("artifact has no {strategy} vectors"))
        })?;
        let set = Arc::new(build_emoji_vectors(&self.store, inventory, strategy, &self.preprocessor));
        sets.insert(strategy, Arc::clone(&set));
        Ok(set)
    }

    pub fn compose(&self, query: &ImageQuery, mode: Mode) -> Result<QueryVector> {
        let image = image_vector(&self.store, &query.classes);
        let caption = caption_vector(&self.store, &query.caption);
        let composed = compose_query(&image, Some(&caption), mode, self.fusion)?;
        if composed.degraded {
            log::warn!(
                "query {:?}: caption has no in-vocabulary tokens, using image-only scoring",
                query.id
            );
        }
        Ok(composed)
    }

    pub fn recommend(
        &self,
        query: &ImageQuery,
        strategy: Strategy,
        mode: Mode,
        k: usize,
        restriction: Option<&BTreeSet<String>>,
    ) -> Result<Recommendation> {
        let set = self.vector_set(strategy)?;
        let composed = self.compose(query, mode)?;
        let ranking = rank(&composed.vector, &set, k, restriction)?;
        Ok(Recommendation {
            query: composed,
            ranking,
        })
    }
}
