//! Sleep-consolidated semantic memory for conversational agents.
//!
//! Utterances are encoded into a typed concept graph, scored for importance,
//! buffered in a small working memory, and periodically consolidated offline:
//! Hebbian strengthening with global downscaling, random-walk dreaming, and
//! value-based forgetting.
//!
//! ```
//! use scm_core::{Clock, Engine, EngineConfig};
//!
//! let mut cfg = EngineConfig::default();
//! cfg.auto_sleep = false;
//! let mut engine = Engine::new(cfg, Clock::simulated()).unwrap();
//! engine.process_message("I live in Mumbai").unwrap();
//! let hits = engine.query("where do I live", 3).unwrap();
//! assert_eq!(hits[0].label, "Mumbai");
//! ```

pub mod audit;
pub mod bench;
pub mod clock;
pub mod encoding;
pub mod engine;
pub mod error;
pub mod graph;
pub mod model;
pub mod persistence;
pub mod self_model;
pub mod settings;
pub mod sleep;
pub mod valuation;
pub mod working_memory;

pub use clock::Clock;
pub use engine::{Engine, EngineBuilder, EngineStats, GraphView, IngestReport, SelfReport};
pub use error::{Result, ScmError, SnapshotError};
pub use graph::{MemoryGraph, RetrievalHit};
pub use model::{
    make_concept_id, Ablation, Concept, ConceptId, ConceptType, Duration, Embedding, EngineConfig,
    Episode, Predicate, Relation, Timestamp, ValueVector,
};
pub use persistence::MemorySnapshot;
pub use settings::Settings;
pub use sleep::{SleepReason, SleepReport, SleepTrigger};
