//! The engine facade: per-message wake pipeline, retrieval, sleep
//! orchestration and snapshots.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audit::AuditLog;
use crate::clock::Clock;
use crate::encoding::{sentiment, Encoder};
use crate::error::{Result, ScmError};
use crate::graph::{MemoryGraph, RetrievalHit};
use crate::model::{
    make_concept_id, normalize_label, Concept, ConceptId, ConceptType, Duration, EngineConfig,
    Episode, Predicate, Relation, Timestamp, ValueVector,
};
use crate::persistence::{self, MemorySnapshot, RuntimeState, SNAPSHOT_VERSION};
use crate::self_model::{self, Counters, SelfState};
use crate::sleep::{self, SleepReport, SleepTrigger};
use crate::valuation::{self, SessionGoal, Tagger};
use crate::working_memory::WorkingMemory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestedConcept {
    pub id: ConceptId,
    pub label: String,
    pub ctype: ConceptType,
    pub value: ValueVector,
    pub importance: f64,
    pub is_new: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationUpdate {
    pub src: ConceptId,
    pub dst: ConceptId,
    pub predicate: Predicate,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub episode_id: String,
    pub concepts: Vec<IngestedConcept>,
    pub relations: Vec<RelationUpdate>,
    pub evicted_episode: Option<String>,
    pub wm_size: usize,
    pub degraded: bool,
    pub sleep: Option<SleepReport>,
}

impl IngestReport {
    pub fn concept_ids(&self) -> Vec<ConceptId> {
        self.concepts.iter().map(|c| c.id.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineStats {
    pub concepts: usize,
    pub edges: usize,
    pub contradicts: usize,
    pub wm_size: usize,
    pub wm_capacity: Option<usize>,
    pub entropy: f64,
    pub conflict_density: f64,
    pub last_sleep: Timestamp,
    pub now: Timestamp,
    pub counters: Counters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeView {
    pub id: ConceptId,
    pub label: String,
    pub ctype: ConceptType,
    pub importance: f64,
    pub access_count: u64,
    pub protected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphView {
    pub nodes: Vec<NodeView>,
    pub edges: Vec<Relation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfReport {
    pub self_concept_id: Option<ConceptId>,
    pub capabilities: Vec<String>,
    pub counters: Counters,
    pub report: String,
}

pub struct EngineBuilder {
    config: EngineConfig,
    clock: Option<Clock>,
    encoder: Option<Encoder>,
    audit: Option<PathBuf>,
}

impl EngineBuilder {
    pub fn clock(mut self, clock: Clock) -> Self {
        self.clock = Some(clock);
        self
    }

    pub fn encoder(mut self, encoder: Encoder) -> Self {
        self.encoder = Some(encoder);
        self
    }

    pub fn audit_log(mut self, path: impl Into<PathBuf>) -> Self {
        self.audit = Some(path.into());
        self
    }

    pub fn build(self) -> Result<Engine> {
        let config = self.config;
        config.validate()?;
        let clock = self.clock.unwrap_or_else(Clock::system);
        let encoder = self.encoder.unwrap_or_else(|| Encoder::local(config.embedding_dim));
        check_dim(&config, &encoder)?;
        let now = clock.now();
        let mut engine = Engine {
            tagger: tagger_for(&config),
            wm: wm_for(&config),
            graph: MemoryGraph::new(),
            self_state: SelfState::disabled(Counters::default()),
            goal: None,
            goal_pinned: false,
            last_sleep: now,
            episode_seq: 0,
            in_sleep: false,
            audit: self.audit.map(AuditLog::new),
            config,
            clock,
            encoder,
        };
        engine.init_self(Counters::default(), now)?;
        Ok(engine)
    }
}

fn check_dim(config: &EngineConfig, encoder: &Encoder) -> Result<()> {
    if encoder.dim() != config.embedding_dim {
        return Err(ScmError::Config(format!(
            "embedder dimension {} does not match configured {}",
            encoder.dim(),
            config.embedding_dim
        )));
    }
    Ok(())
}

fn tagger_for(config: &EngineConfig) -> Tagger {
    if config.ablation.tagger {
        Tagger::uniform(config.tagger_weights)
    } else {
        Tagger::new(config.tagger_weights)
    }
}

fn wm_for(config: &EngineConfig) -> WorkingMemory {
    if config.ablation.wm_limit {
        WorkingMemory::unbounded()
    } else {
        WorkingMemory::new(config.wm_capacity)
    }
}

struct Staged {
    concept: Concept,
    is_new: bool,
}

pub struct Engine {
    config: EngineConfig,
    clock: Clock,
    encoder: Encoder,
    tagger: Tagger,
    graph: MemoryGraph,
    wm: WorkingMemory,
    self_state: SelfState,
    goal: Option<SessionGoal>,
    goal_pinned: bool,
    last_sleep: Timestamp,
    episode_seq: u64,
    in_sleep: bool,
    audit: Option<AuditLog>,
}

impl Engine {
    pub fn builder(config: EngineConfig) -> EngineBuilder {
        EngineBuilder { config, clock: None, encoder: None, audit: None }
    }

    /// Engine with the local encoder and the given clock.
    pub fn new(config: EngineConfig, clock: Clock) -> Result<Self> {
        Self::builder(config).clock(clock).build()
    }

    fn init_self(&mut self, counters: Counters, now: Timestamp) -> Result<()> {
        self.self_state = if self.config.ablation.self_model {
            SelfState::disabled(counters)
        } else {
            self_model::init_self(&mut self.graph, &self.config.self_label, &self.encoder.embedder, counters, now)?
        };
        Ok(())
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    pub fn graph(&self) -> &MemoryGraph {
        &self.graph
    }

    pub fn working_memory(&self) -> &WorkingMemory {
        &self.wm
    }

    pub fn self_state(&self) -> &SelfState {
        &self.self_state
    }

    pub fn counters(&self) -> Counters {
        self.self_state.counters
    }

    pub fn goal(&self) -> Option<&SessionGoal> {
        self.goal.as_ref()
    }

    pub fn last_sleep(&self) -> Timestamp {
        self.last_sleep
    }

    pub fn is_sleeping(&self) -> bool {
        self.in_sleep
    }

    pub fn audit_log(&self) -> Option<&AuditLog> {
        self.audit.as_ref()
    }

    pub fn set_audit_log(&mut self, path: Option<PathBuf>) {
        self.audit = path.map(AuditLog::new);
    }

    /// Fixes the goal until `clear_goal` is called.
    pub fn set_goal(&mut self, text: &str) -> Result<()> {
        let embedded = self.encoder.embedder.embed(text)?;
        self.goal = Some(SessionGoal { text: text.to_string(), embedding: embedded.embedding });
        self.goal_pinned = true;
        Ok(())
    }

    /// Returns to tracking the latest utterance.
    pub fn clear_goal(&mut self) {
        self.goal_pinned = false;
    }

    pub fn advance_clock(&self, hours: f64) -> Result<Timestamp> {
        if !hours.is_finite() || hours < 0.0 {
            return Err(ScmError::InvalidArgument(format!("hours must be a non-negative number, got {hours}")));
        }
        self.clock.advance(Duration::from_hours(hours))
    }

    fn next_eid(&mut self) -> String {
        let eid = format!("ep-{:06}", self.episode_seq);
        self.episode_seq += 1;
        eid
    }

    fn stage_concepts(
        &mut self,
        extraction: &crate::encoding::ExtractionResult,
        now: Timestamp,
    ) -> Result<(Vec<Staged>, bool)> {
        let mut degraded = false;
        let max_count = self.graph.max_access_count();
        let mut staged: Vec<Staged> = Vec::new();
        for ec in &extraction.concepts {
            let id = make_concept_id(&ec.label, ec.ctype)?;
            if staged.iter().any(|s| s.concept.id == id) {
                continue;
            }
            let embedded = self.encoder.embedder.embed(&format!("{} {}", ec.label, ec.description))?;
            degraded |= embedded.degraded;
            let e = embedded.embedding;
            let novelty = if e.is_null() {
                0.0
            } else {
                valuation::novelty(&e, self.graph.concepts().map(|c| &c.embedding))?
            };
            let emotional = sentiment(ec.sentiment_hint, &ec.description);
            let task = valuation::task_relevance(&e, self.goal.as_ref());
            let prior = self.graph.get(&id).map(|c| c.access_count);
            let count = prior.unwrap_or(0) + 1;
            let repetition = valuation::repetition(count, max_count.max(count))?;
            let (value, importance) = self.tagger.tag(ValueVector::new(novelty, emotional, task, repetition));
            staged.push(Staged {
                concept: Concept {
                    id,
                    label: ec.label.clone(),
                    ctype: ec.ctype,
                    description: ec.description.clone(),
                    embedding: e,
                    value,
                    importance,
                    created_at: now,
                    last_access: now,
                    access_count: 1,
                    protected: false,
                },
                is_new: prior.is_none(),
            });
        }
        Ok((staged, degraded))
    }

    fn resolve_label(&self, label: &str, staged: &[Staged]) -> Option<ConceptId> {
        let norm = normalize_label(label);
        staged
            .iter()
            .find(|s| normalize_label(&s.concept.label) == norm)
            .map(|s| s.concept.id.clone())
            .or_else(|| self.graph.ids_for_label(label).next().cloned())
    }

    /// The wake pipeline for one utterance.
    pub fn process_message(&mut self, text: &str) -> Result<IngestReport> {
        if self.in_sleep {
            return Err(ScmError::Busy("a sleep cycle is running".into()));
        }
        if text.trim().is_empty() {
            return Err(ScmError::InvalidArgument("message text is empty".into()));
        }
        let now = self.clock.now();
        let extraction = self.encoder.extractor.extract(text, &self.graph)?;
        let mut degraded = extraction.degraded;

        if !self.goal_pinned {
            let g = self.encoder.embedder.embed(text)?;
            degraded |= g.degraded;
            self.goal = Some(SessionGoal { text: text.to_string(), embedding: g.embedding });
        }

        let (staged, emb_degraded) = self.stage_concepts(&extraction, now)?;
        degraded |= emb_degraded;

        let mut report_concepts = Vec::with_capacity(staged.len());
        for s in &staged {
            report_concepts.push(IngestedConcept {
                id: s.concept.id.clone(),
                label: s.concept.label.clone(),
                ctype: s.concept.ctype,
                value: s.concept.value,
                importance: s.concept.importance,
                is_new: s.is_new,
            });
            self.graph.upsert_concept(s.concept.clone(), now, &self.tagger);
        }

        let mut relations = Vec::new();
        for r in &extraction.relations {
            let (Some(src), Some(dst)) = (self.resolve_label(&r.src_label, &staged), self.resolve_label(&r.dst_label, &staged))
            else {
                continue;
            };
            let delta = self.config.eta * self.graph.get(&src).map_or(0.0, |c| c.importance)
                * self.graph.get(&dst).map_or(0.0, |c| c.importance);
            let strength = self.graph.add_or_strengthen(&src, &dst, r.predicate, delta, now)?;
            relations.push(RelationUpdate { src, dst, predicate: r.predicate, strength });
        }

        let values: Vec<ValueVector> = staged.iter().map(|s| s.concept.value).collect();
        let (value, importance) = self.tagger.tag(ValueVector::mean(&values));
        let eid = self.next_eid();
        let evicted = self.wm.admit(Episode {
            eid: eid.clone(),
            timestamp: now,
            concept_ids: staged.iter().map(|s| s.concept.id.clone()).collect(),
            text: text.to_string(),
            value,
            importance,
            last_access: now,
            access_count: 0,
        });
        self.self_state.counters.messages_processed += 1;

        let sleep = if self.config.auto_sleep {
            match self.pending_trigger() {
                Some(trigger) => Some(self.run_sleep_cycle(trigger)?),
                None => None,
            }
        } else {
            None
        };

        Ok(IngestReport {
            episode_id: eid,
            concepts: report_concepts,
            relations,
            evicted_episode: evicted.map(|e| e.eid),
            wm_size: self.wm.len(),
            degraded,
            sleep,
        })
    }

    /// First exceeded sleep condition, if any.
    pub fn pending_trigger(&self) -> Option<SleepTrigger> {
        sleep::should_sleep(
            self.wm.entropy(),
            self.graph.conflict_density(),
            self.clock.now().hours_since(self.last_sleep),
            &self.config,
        )
    }

    /// Periodic check: sleeps if automatic sleep is on and a condition holds.
    pub fn tick(&mut self) -> Result<Option<SleepReport>> {
        if !self.config.auto_sleep || self.in_sleep {
            return Ok(None);
        }
        match self.pending_trigger() {
            Some(t) => self.run_sleep_cycle(t).map(Some),
            None => Ok(None),
        }
    }

    /// Fused retrieval; marks the returned concepts as accessed.
    pub fn query(&mut self, text: &str, k: usize) -> Result<Vec<RetrievalHit>> {
        if k == 0 {
            return Err(ScmError::InvalidArgument("k must be at least 1".into()));
        }
        let q = self.encoder.embedder.embed(text)?.embedding;
        let now = self.clock.now();
        Ok(self.graph.retrieve(&q, k, &self.config.fusion_weights, now, &self.tagger))
    }

    /// Retrieval without touching access statistics.
    pub fn peek(&self, text: &str, k: usize) -> Result<Vec<RetrievalHit>> {
        if k == 0 {
            return Err(ScmError::InvalidArgument("k must be at least 1".into()));
        }
        let q = self.encoder.embedder.embed(text)?.embedding;
        Ok(self.graph.rank(&q, k, &self.config.fusion_weights))
    }

    pub fn touch_concept(&mut self, id: &ConceptId) -> Result<()> {
        let now = self.clock.now();
        self.graph.touch(id, now, &self.tagger)
    }

    /// Stores a concept with a fixed importance, bypassing extraction and
    /// valuation. Used to build benchmark populations.
    pub fn inject_concept(&mut self, label: &str, ctype: ConceptType, importance: f64) -> Result<ConceptId> {
        if !(0.0..=1.0).contains(&importance) {
            return Err(ScmError::InvalidArgument(format!("importance {importance} outside [0, 1]")));
        }
        let id = make_concept_id(label, ctype)?;
        let now = self.clock.now();
        let embedding = self.encoder.embedder.embed(label)?.embedding;
        let (value, importance) = self.tagger.tag(ValueVector::uniform(importance));
        let concept = Concept {
            id: id.clone(),
            label: label.to_string(),
            ctype,
            description: label.to_string(),
            embedding,
            value,
            importance,
            created_at: now,
            last_access: now,
            access_count: 0,
            protected: false,
        };
        if self.graph.contains(&id) {
            self.graph.upsert_concept(concept, now, &self.tagger);
        } else {
            self.graph.insert_concept(concept);
        }
        Ok(id)
    }

    /// Adds `delta` to the edge strength, creating the edge if needed.
    pub fn relate(&mut self, src: &ConceptId, dst: &ConceptId, predicate: Predicate, delta: f64) -> Result<f64> {
        let now = self.clock.now();
        self.graph.add_or_strengthen(src, dst, predicate, delta, now)
    }

    /// Admits an episode over existing concepts without extraction.
    pub fn admit_episode(&mut self, concept_ids: Vec<ConceptId>, text: &str) -> Result<Option<String>> {
        if concept_ids.is_empty() {
            return Err(ScmError::InvalidArgument("episode needs at least one concept".into()));
        }
        let mut values = Vec::with_capacity(concept_ids.len());
        for id in &concept_ids {
            let c = self.graph.get(id).ok_or_else(|| ScmError::NotFound(format!("concept {id}")))?;
            values.push(c.value);
        }
        let (value, importance) = self.tagger.tag(ValueVector::mean(&values));
        let now = self.clock.now();
        let eid = self.next_eid();
        let evicted = self.wm.admit(Episode {
            eid,
            timestamp: now,
            concept_ids,
            text: text.to_string(),
            value,
            importance,
            last_access: now,
            access_count: 0,
        });
        Ok(evicted.map(|e| e.eid))
    }

    pub fn touch_episode(&mut self, eid: &str) -> Result<Episode> {
        let now = self.clock.now();
        self.wm.touch(eid, now, &self.tagger)
    }

    /// Manual sleep, bypassing the trigger check.
    pub fn sleep(&mut self) -> Result<SleepReport> {
        self.run_sleep_cycle(SleepTrigger::manual())
    }

    pub fn run_sleep_cycle(&mut self, trigger: SleepTrigger) -> Result<SleepReport> {
        if self.in_sleep {
            return Err(ScmError::Busy("a sleep cycle is already running".into()));
        }
        self.in_sleep = true;
        let out = self.sleep_inner(trigger);
        self.in_sleep = false;
        out
    }

    fn sleep_inner(&mut self, trigger: SleepTrigger) -> Result<SleepReport> {
        let started_at = self.clock.now();
        let cycle = self.self_state.counters.sleep_cycles_completed + 1;
        let ablation = self.config.ablation;

        let episodes = self.wm.drain();
        let (mut pairs, mut downscaled) = (0, 0);
        if !ablation.nrem {
            pairs = sleep::hebbian(&mut self.graph, &episodes, self.config.eta, started_at);
            downscaled = self.graph.downscale(self.config.alpha);
        }
        let transferred: BTreeSet<ConceptId> =
            episodes.iter().flat_map(|e| e.concept_ids.iter().cloned()).collect();
        for id in &transferred {
            self.graph.refresh_last_access(id, started_at);
        }

        let mut dreams = sleep::DreamOutcome::default();
        if !ablation.rem {
            let candidates: BTreeSet<ConceptId> = transferred
                .iter()
                .filter(|id| self.graph.get(id).is_some_and(|c| !c.protected))
                .cloned()
                .collect();
            let seeds = sleep::dream_seeds(&self.graph, &candidates, self.config.rem_seed_count);
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.rng_seed ^ cycle);
            dreams = sleep::dream(&mut self.graph, &seeds, &self.config, &mut rng, started_at);
        }

        let (theta_f, forgotten) = if ablation.forget {
            (f64::NAN, Vec::new())
        } else {
            sleep::forget(&mut self.graph, started_at, &self.config)
        };

        if let Some(self_id) = self.self_state.self_concept_id.clone() {
            let eid = self.next_eid();
            self.wm.admit(Episode {
                eid,
                timestamp: started_at,
                concept_ids: vec![self_id],
                text: format!(
                    "sleep cycle {cycle}: {} episodes consolidated, {} dreams integrated, {} concepts forgotten",
                    episodes.len(),
                    dreams.integrated,
                    forgotten.len()
                ),
                value: ValueVector::default(),
                importance: 0.0,
                last_access: started_at,
                access_count: 0,
            });
        }

        let counters = &mut self.self_state.counters;
        counters.sleep_cycles_completed = cycle;
        counters.dreams_generated += dreams.integrated as u64;
        self.last_sleep = started_at;

        let report = SleepReport {
            cycle,
            trigger,
            pairs_strengthened: pairs,
            edges_downscaled: downscaled,
            episodes_transferred: episodes.len(),
            dreams_attempted: dreams.attempted,
            dreams_integrated: dreams.integrated,
            dream_paths: dreams.paths,
            theta_f: if theta_f.is_nan() { 0.0 } else { theta_f },
            concepts_forgotten: forgotten.len(),
            forgotten_ids: forgotten,
            started_at,
            ended_at: self.clock.now(),
        };
        if let Some(log) = &self.audit {
            log.record(&report)?;
        }
        Ok(report)
    }

    pub fn stats(&self) -> EngineStats {
        let g = self.graph.stats();
        EngineStats {
            concepts: g.concepts,
            edges: g.edges,
            contradicts: g.contradicts,
            wm_size: self.wm.len(),
            wm_capacity: self.wm.capacity(),
            entropy: self.wm.entropy(),
            conflict_density: self.graph.conflict_density(),
            last_sleep: self.last_sleep,
            now: self.clock.now(),
            counters: self.self_state.counters,
        }
    }

    /// Unprotected concept count.
    pub fn ltm_size(&self) -> usize {
        self.graph.concepts().filter(|c| !c.protected).count()
    }

    pub fn introspect(&self, query: &str) -> String {
        self_model::introspect(&self.self_state, &self.graph, query)
    }

    pub fn self_report(&self, query: &str) -> SelfReport {
        SelfReport {
            self_concept_id: self.self_state.self_concept_id.clone(),
            capabilities: self
                .self_state
                .capability_ids
                .iter()
                .filter_map(|id| self.graph.get(id))
                .map(|c| c.label.clone())
                .collect(),
            counters: self.self_state.counters,
            report: self.introspect(query),
        }
    }

    /// The `limit` most important concepts and the edges among them.
    pub fn graph_view(&self, limit: usize) -> GraphView {
        let mut nodes: Vec<&Concept> = self.graph.concepts().collect();
        nodes.sort_by(|a, b| {
            b.importance
                .partial_cmp(&a.importance)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.id.cmp(&b.id))
        });
        nodes.truncate(limit);
        let keep: BTreeSet<&ConceptId> = nodes.iter().map(|c| &c.id).collect();
        let edges = self
            .graph
            .relations()
            .filter(|r| keep.contains(&r.src) && keep.contains(&r.dst))
            .cloned()
            .collect();
        GraphView {
            nodes: nodes
                .into_iter()
                .map(|c| NodeView {
                    id: c.id.clone(),
                    label: c.label.clone(),
                    ctype: c.ctype,
                    importance: c.importance,
                    access_count: c.access_count,
                    protected: c.protected,
                })
                .collect(),
            edges,
        }
    }

    pub fn to_snapshot(&self) -> MemorySnapshot {
        MemorySnapshot {
            version: SNAPSHOT_VERSION,
            saved_at: self.clock.now(),
            config: self.config.clone(),
            counters: self.self_state.counters,
            concepts: self.graph.concepts().cloned().collect(),
            relations: self.graph.relations().cloned().collect(),
            episodes: self.wm.episodes().cloned().collect(),
            last_sleep_time: self.last_sleep,
            goal: self.goal.clone(),
            runtime: RuntimeState {
                episode_seq: self.episode_seq,
                clock_now: self.clock.now(),
                goal_pinned: self.goal_pinned,
            },
        }
    }

    /// Rebuilds an engine from a snapshot. A simulated clock resumes from the
    /// saved time if that is later than its own.
    pub fn from_snapshot(snap: MemorySnapshot, clock: Clock, encoder: Encoder) -> Result<Self> {
        snap.validate()?;
        check_dim(&snap.config, &encoder)?;
        let clock = if clock.is_simulated() && snap.runtime.clock_now > clock.now() {
            Clock::simulated_at(snap.runtime.clock_now)
        } else {
            clock
        };
        let mut graph = MemoryGraph::new();
        for c in snap.concepts {
            graph.insert_concept(c);
        }
        for r in snap.relations {
            graph.insert_relation(r)?;
        }
        graph
            .check_integrity()
            .map_err(|e| ScmError::Snapshot(crate::error::SnapshotError::Integrity(e)))?;
        let config = snap.config;
        let capacity = if config.ablation.wm_limit { None } else { Some(config.wm_capacity) };
        let wm = WorkingMemory::restore(capacity, snap.episodes)?;
        let now = clock.now();
        let mut engine = Engine {
            tagger: tagger_for(&config),
            wm,
            graph,
            self_state: SelfState::disabled(snap.counters),
            goal: snap.goal,
            goal_pinned: snap.runtime.goal_pinned,
            last_sleep: snap.last_sleep_time,
            episode_seq: snap.runtime.episode_seq,
            in_sleep: false,
            audit: None,
            config,
            clock,
            encoder,
        };
        engine.init_self(snap.counters, now)?;
        Ok(engine)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<usize> {
        persistence::save(path, &self.to_snapshot())
    }

    pub fn load(path: impl AsRef<Path>, clock: Clock, encoder: Encoder) -> Result<Self> {
        Self::from_snapshot(persistence::load(path)?, clock, encoder)
    }

    /// Replaces the memory state with the snapshot at `path`, keeping this
    /// engine's clock, encoder and audit log.
    pub fn reload(&mut self, path: impl AsRef<Path>) -> Result<()> {
        if self.in_sleep {
            return Err(ScmError::Busy("a sleep cycle is running".into()));
        }
        let snap = persistence::load(path)?;
        let mut fresh = Self::from_snapshot(snap, self.clock.clone(), self.encoder.clone())?;
        fresh.audit = self.audit.take();
        *self = fresh;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine() -> Engine {
        let mut cfg = EngineConfig::default();
        cfg.auto_sleep = false;
        Engine::new(cfg, Clock::simulated()).unwrap()
    }

    #[test]
    fn fresh_engine_has_self_model_only() {
        let e = engine();
        let s = e.stats();
        assert_eq!((s.concepts, s.edges, s.wm_size), (11, 10, 0));
        assert_eq!(e.ltm_size(), 0);
    }

    #[test]
    fn live_in_adds_one_location() {
        let mut e = engine();
        let r = e.process_message("I live in Mumbai").unwrap();
        let locs: Vec<_> = r.concepts.iter().filter(|c| c.ctype == ConceptType::Location).collect();
        assert_eq!(locs.len(), 1);
        assert_eq!(locs[0].label, "Mumbai");
        assert_eq!(r.wm_size, 1);
        assert_eq!(e.counters().messages_processed, 1);
        assert!(r.relations.iter().any(|x| x.predicate == Predicate::RelatedTo));
    }

    #[test]
    fn repeated_fact_has_zero_novelty() {
        let mut e = engine();
        e.process_message("I live in Mumbai").unwrap();
        let r = e.process_message("I live in Mumbai").unwrap();
        let m = r.concepts.iter().find(|c| c.label == "Mumbai").unwrap();
        assert!(m.value.novelty.abs() < 1e-6);
        assert!(!m.is_new);
        assert_eq!(e.graph().get(&m.id).unwrap().access_count, 2);
    }

    #[test]
    fn ten_turns_fill_wm_to_capacity() {
        let mut e = engine();
        for i in 0..10 {
            e.process_message(&format!("note number {i} is filed")).unwrap();
        }
        assert_eq!(e.working_memory().len(), 7);
    }

    #[test]
    fn empty_message_rejected() {
        let mut e = engine();
        assert!(matches!(e.process_message("  "), Err(ScmError::InvalidArgument(_))));
        assert_eq!(e.counters().messages_processed, 0);
    }

    #[test]
    fn vacuous_manual_sleep() {
        let mut e = engine();
        let r = e.sleep().unwrap();
        assert_eq!(r.pairs_strengthened, 0);
        assert_eq!(r.episodes_transferred, 0);
        assert_eq!(r.dreams_attempted, 0);
        assert_eq!(r.concepts_forgotten, 0);
        assert_eq!(e.counters().sleep_cycles_completed, 1);
        assert_eq!(e.stats().concepts, 11);
    }

    #[test]
    fn query_on_empty_engine_returns_self_nodes() {
        let mut e = engine();
        let hits = e.query("what can you do", 3).unwrap();
        assert!(!hits.is_empty());
        assert!(hits.iter().all(|h| e.graph().get(&h.concept_id).unwrap().protected));
        assert!(matches!(e.query("x", 0), Err(ScmError::InvalidArgument(_))));
    }

    #[test]
    fn auto_sleep_fires_on_entropy() {
        let mut e = Engine::new(EngineConfig::default(), Clock::simulated()).unwrap();
        e.process_message("I live in Mumbai").unwrap();
        let r = e.process_message("I work as a nurse").unwrap();
        let s = r.sleep.expect("entropy trigger");
        assert_eq!(s.trigger.reason, sleep::SleepReason::Entropy);
    }
}
