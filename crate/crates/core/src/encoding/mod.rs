//! Text to concepts (extraction) and text to vectors (embedding).

mod embed;
mod extract;
mod sentiment;

use std::time::Duration;

pub use embed::{tokenize, Embedded, Embedder, HashEmbedder, RemoteEmbedder};
pub use extract::{
    extract_rule_based, negated_preference_label, split_clauses, ConceptLookup, EmptyMemory,
    ExtractedConcept, ExtractedRelation, ExtractionResult, Extractor, ExtractorKind,
    RemoteExtractor, USER_LABEL,
};
pub use sentiment::{lexicon_score, sentiment, sentiment_of_text};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

fn http_agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(true)
        .build()
        .into()
}

/// Extractor plus embedder, as configured for one engine.
#[derive(Debug, Clone)]
pub struct Encoder {
    pub extractor: Extractor,
    pub embedder: Embedder,
}

impl Encoder {
    pub fn local(dim: usize) -> Self {
        Encoder { extractor: Extractor::rule_based(), embedder: Embedder::hashing(dim) }
    }

    pub fn dim(&self) -> usize {
        self.embedder.dim()
    }
}
