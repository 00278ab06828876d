//! Shared domain types: identifiers, taxonomies, embeddings, value vectors,
//! concepts, relations, episodes and the engine configuration.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ScmError};

/// UTC instant with microsecond resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub const MICROS_PER_HOUR: i64 = 3_600_000_000;

    pub fn from_micros(us: i64) -> Self {
        Timestamp(us)
    }

    pub fn as_micros(self) -> i64 {
        self.0
    }

    /// Fractional hours elapsed from `earlier` to `self`, never negative.
    pub fn hours_since(self, earlier: Timestamp) -> f64 {
        ((self.0 - earlier.0).max(0)) as f64 / Self::MICROS_PER_HOUR as f64
    }
}

/// A span of time in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Duration(pub i64);

impl Duration {
    pub fn from_hours(hours: f64) -> Self {
        Duration((hours * Timestamp::MICROS_PER_HOUR as f64).round() as i64)
    }

    pub fn from_micros(us: i64) -> Self {
        Duration(us)
    }
}

impl Add<Duration> for Timestamp {
    type Output = Timestamp;

    fn add(self, rhs: Duration) -> Timestamp {
        Timestamp(self.0.saturating_add(rhs.0))
    }
}

impl Sub for Timestamp {
    type Output = Duration;

    fn sub(self, rhs: Timestamp) -> Duration {
        Duration(self.0 - rhs.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(String);

impl ConceptId {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Wraps an already-derived id string (snapshot loading, wire formats).
    pub fn from_raw(raw: impl Into<String>) -> Self {
        ConceptId(raw.into())
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Case-folds and collapses internal whitespace.
pub fn normalize_label(label: &str) -> String {
    label
        .split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Content-addressed concept id: equal (normalized label, type) pairs always
/// produce the same id, so re-extracting a fact is idempotent.
pub fn make_concept_id(label: &str, ctype: ConceptType) -> Result<ConceptId> {
    let norm = normalize_label(label);
    if norm.is_empty() {
        return Err(ScmError::InvalidArgument("concept label is empty".into()));
    }
    let mut hasher = Sha256::new();
    hasher.update(ctype.as_str().as_bytes());
    hasher.update([0u8]);
    hasher.update(norm.as_bytes());
    let digest = hasher.finalize();
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    Ok(ConceptId(format!("{}-{}", ctype.as_str(), hex)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptType {
    Person,
    Preference,
    Fact,
    Event,
    Object,
    Location,
    Abstract,
}

impl ConceptType {
    pub const ALL: [ConceptType; 7] = [
        ConceptType::Person,
        ConceptType::Preference,
        ConceptType::Fact,
        ConceptType::Event,
        ConceptType::Object,
        ConceptType::Location,
        ConceptType::Abstract,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConceptType::Person => "person",
            ConceptType::Preference => "preference",
            ConceptType::Fact => "fact",
            ConceptType::Event => "event",
            ConceptType::Object => "object",
            ConceptType::Location => "location",
            ConceptType::Abstract => "abstract",
        }
    }

    /// Unknown names map to `Abstract`.
    pub fn coerce(name: &str) -> Self {
        let n = name.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == n)
            .unwrap_or(ConceptType::Abstract)
    }
}

impl fmt::Display for ConceptType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    HasProperty,
    Prefers,
    RelatedTo,
    Contradicts,
    Causes,
    PartOf,
}

impl Predicate {
    pub const ALL: [Predicate; 6] = [
        Predicate::HasProperty,
        Predicate::Prefers,
        Predicate::RelatedTo,
        Predicate::Contradicts,
        Predicate::Causes,
        Predicate::PartOf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Predicate::HasProperty => "has_property",
            Predicate::Prefers => "prefers",
            Predicate::RelatedTo => "related_to",
            Predicate::Contradicts => "contradicts",
            Predicate::Causes => "causes",
            Predicate::PartOf => "part_of",
        }
    }

    /// Unknown names map to `RelatedTo`.
    pub fn coerce(name: &str) -> Self {
        let n = name.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == n)
            .unwrap_or(Predicate::RelatedTo)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dense vector of fixed dimension. Stored embeddings are unit-norm or the
/// all-zero null embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f32>);

impl Embedding {
    pub fn null(dim: usize) -> Self {
        Embedding(vec![0.0; dim])
    }

    /// L2-normalizes `values`; a zero vector stays null.
    pub fn normalized(values: Vec<f32>) -> Self {
        let norm = values.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Embedding(vec![0.0; values.len()]);
        }
        Embedding(values.into_iter().map(|v| (v as f64 / norm) as f32).collect())
    }

    /// Wraps raw values without normalizing. Used when loading snapshots.
    pub fn from_raw(values: Vec<f32>) -> Self {
        Embedding(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn is_null(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| a as f64 * b as f64)
            .sum()
    }

    /// Cosine similarity; 0.0 when either side is null or dimensions differ.
    pub fn cosine(&self, other: &Embedding) -> f64 {
        if self.dim() != other.dim() {
            return 0.0;
        }
        let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
        for (&a, &b) in self.0.iter().zip(&other.0) {
            let (a, b) = (a as f64, b as f64);
            dot += a * b;
            na += a * a;
            nb += b * b;
        }
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
    }

    /// True for unit-norm (within 1e-6) or null embeddings.
    pub fn is_well_formed(&self) -> bool {
        self.is_null() || (self.norm() - 1.0).abs() <= 1e-6
    }
}

/// The four importance dimensions of a concept.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ValueVector {
    pub novelty: f64,
    pub emotional: f64,
    pub task: f64,
    pub repetition: f64,
}

impl ValueVector {
    pub fn new(novelty: f64, emotional: f64, task: f64, repetition: f64) -> Self {
        ValueVector { novelty, emotional, task, repetition }
    }

    /// Same value in every dimension; composes to `x` under any weights
    /// summing to one.
    pub fn uniform(x: f64) -> Self {
        ValueVector::new(x, x, x, x)
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.novelty)
            && (-1.0..=1.0).contains(&self.emotional)
            && (-1.0..=1.0).contains(&self.task)
            && (0.0..1.0).contains(&self.repetition)
    }

    /// Per-dimension keep-the-larger-magnitude merge (sign travels with the
    /// winning value).
    pub fn merge_max(&self, other: &ValueVector) -> ValueVector {
        fn pick(a: f64, b: f64) -> f64 {
            if b.abs() > a.abs() {
                b
            } else {
                a
            }
        }
        ValueVector {
            novelty: pick(self.novelty, other.novelty),
            emotional: pick(self.emotional, other.emotional),
            task: pick(self.task, other.task),
            repetition: pick(self.repetition, other.repetition),
        }
    }

    pub fn mean<'a>(values: impl IntoIterator<Item = &'a ValueVector>) -> ValueVector {
        let mut acc = ValueVector::default();
        let mut n = 0usize;
        for v in values {
            acc.novelty += v.novelty;
            acc.emotional += v.emotional;
            acc.task += v.task;
            acc.repetition += v.repetition;
            n += 1;
        }
        if n == 0 {
            return acc;
        }
        let n = n as f64;
        ValueVector::new(acc.novelty / n, acc.emotional / n, acc.task / n, acc.repetition / n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub id: ConceptId,
    pub label: String,
    pub ctype: ConceptType,
    pub description: String,
    pub embedding: Embedding,
    pub value: ValueVector,
    pub importance: f64,
    pub created_at: Timestamp,
    pub last_access: Timestamp,
    pub access_count: u64,
    pub protected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub src: ConceptId,
    pub dst: ConceptId,
    pub predicate: Predicate,
    pub strength: f64,
    pub created_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub eid: String,
    pub timestamp: Timestamp,
    pub concept_ids: Vec<ConceptId>,
    pub text: String,
    pub value: ValueVector,
    pub importance: f64,
    pub last_access: Timestamp,
    pub access_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaggerWeights {
    pub novelty: f64,
    pub emotional: f64,
    pub task: f64,
    pub repetition: f64,
}

impl Default for TaggerWeights {
    fn default() -> Self {
        TaggerWeights { novelty: 0.30, emotional: 0.20, task: 0.35, repetition: 0.15 }
    }
}

impl TaggerWeights {
    pub fn sum(&self) -> f64 {
        self.novelty + self.emotional + self.task + self.repetition
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    pub semantic: f64,
    pub importance: f64,
    pub graph: f64,
}

impl Default for FusionWeights {
    fn default() -> Self {
        FusionWeights { semantic: 0.5, importance: 0.3, graph: 0.2 }
    }
}

impl FusionWeights {
    pub fn sum(&self) -> f64 {
        self.semantic + self.importance + self.graph
    }
}

/// Components that can be switched off for ablation runs. All `false` is the
/// complete engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Ablation {
    pub wm_limit: bool,
    pub tagger: bool,
    pub nrem: bool,
    pub rem: bool,
    pub forget: bool,
    pub self_model: bool,
}

impl Ablation {
    pub fn none() -> Self {
        Ablation::default()
    }

    pub fn parse(name: &str) -> Result<Self> {
        let mut a = Ablation::default();
        match name.trim().to_ascii_lowercase().as_str() {
            "wm_limit" => a.wm_limit = true,
            "tagger" => a.tagger = true,
            "nrem" => a.nrem = true,
            "rem" => a.rem = true,
            "forget" => a.forget = true,
            "self" | "self_model" => a.self_model = true,
            other => {
                return Err(ScmError::InvalidArgument(format!("unknown component '{other}'")))
            }
        }
        Ok(a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub wm_capacity: usize,
    pub tagger_weights: TaggerWeights,
    pub eta: f64,
    pub alpha: f64,
    pub lambda_per_hour: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub theta_e: f64,
    pub theta_c: f64,
    pub tau_hours: f64,
    pub target_size: usize,
    pub theta_f_floor: f64,
    pub rem_seed_count: usize,
    pub rem_walk_steps: usize,
    pub embedding_dim: usize,
    pub fusion_weights: FusionWeights,
    pub rng_seed: u64,
    pub self_label: String,
    pub auto_sleep: bool,
    pub ablation: Ablation,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            wm_capacity: 7,
            tagger_weights: TaggerWeights::default(),
            eta: 0.1,
            alpha: 0.8,
            lambda_per_hour: 0.01,
            beta1: 0.8,
            beta2: 0.2,
            theta_e: 0.9,
            theta_c: 0.3,
            tau_hours: 1.0,
            target_size: 100,
            theta_f_floor: 0.05,
            rem_seed_count: 3,
            rem_walk_steps: 5,
            embedding_dim: 384,
            fusion_weights: FusionWeights::default(),
            rng_seed: 42,
            self_label: "SCM".to_string(),
            auto_sleep: true,
            ablation: Ablation::default(),
        }
    }
}

const WEIGHT_SUM_TOL: f64 = 1e-9;

impl EngineConfig {
    /// Sets β₂ and keeps β₁ + β₂ = 1.
    pub fn with_beta2(mut self, beta2: f64) -> Self {
        self.beta2 = beta2;
        self.beta1 = 1.0 - beta2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ScmError::Config(msg));
        if self.wm_capacity == 0 {
            return bad("wm_capacity must be positive".into());
        }
        if (self.tagger_weights.sum() - 1.0).abs() > WEIGHT_SUM_TOL {
            return bad(format!("tagger weights sum to {}, expected 1.0", self.tagger_weights.sum()));
        }
        if (self.fusion_weights.sum() - 1.0).abs() > WEIGHT_SUM_TOL {
            return bad(format!("fusion weights sum to {}, expected 1.0", self.fusion_weights.sum()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if !(self.eta > 0.0) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if (self.beta1 + self.beta2 - 1.0).abs() > WEIGHT_SUM_TOL {
            return bad(format!("beta1 + beta2 = {}, expected 1.0", self.beta1 + self.beta2));
        }
        if self.lambda_per_hour < 0.0 {
            return bad("lambda_per_hour must be non-negative".into());
        }
        if self.target_size == 0 {
            return bad("target_size must be positive".into());
        }
        if self.embedding_dim == 0 {
            return bad("embedding_dim must be positive".into());
        }
        if self.self_label.trim().is_empty() {
            return bad("self_label must not be empty".into());
        }
        Ok(())
    }
}
