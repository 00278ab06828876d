//! Memory systems compared on the evaluation scenario.

use std::collections::{BTreeMap, VecDeque};

use crate::clock::Clock;
use crate::encoding::{ConceptLookup, Encoder};
use crate::engine::Engine;
use crate::error::Result;
use crate::model::{make_concept_id, normalize_label, Ablation, ConceptId, ConceptType, Embedding, EngineConfig};

use super::scenario::Probe;

pub trait MemoryBackend {
    fn name(&self) -> &str;
    fn ingest(&mut self, text: &str) -> Result<()>;
    /// Stores a low-value item with a given importance, where supported.
    fn inject_noise(&mut self, label: &str, importance: f64) -> Result<()>;
    fn advance_hours(&mut self, hours: f64) -> Result<()>;
    fn consolidate(&mut self) -> Result<()>;
    fn recalls(&mut self, probe: &Probe, k: usize) -> Result<bool>;
    fn ltm_size(&self) -> usize;
    fn retains(&self, label: &str) -> bool;
}

/// The engine with an optional set of disabled components.
pub struct EngineBackend {
    name: String,
    pub engine: Engine,
}

impl EngineBackend {
    pub fn new(name: impl Into<String>, mut config: EngineConfig, ablation: Ablation) -> Result<Self> {
        config.auto_sleep = false;
        config.ablation = ablation;
        Ok(EngineBackend { name: name.into(), engine: Engine::new(config, Clock::simulated())? })
    }
}

impl MemoryBackend for EngineBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn ingest(&mut self, text: &str) -> Result<()> {
        self.engine.process_message(text).map(drop)
    }

    fn inject_noise(&mut self, label: &str, importance: f64) -> Result<()> {
        let id = self.engine.inject_concept(label, ConceptType::Fact, importance)?;
        self.engine.admit_episode(vec![id], label)?;
        Ok(())
    }

    fn advance_hours(&mut self, hours: f64) -> Result<()> {
        self.engine.advance_clock(hours).map(drop)
    }

    fn consolidate(&mut self) -> Result<()> {
        self.engine.sleep().map(drop)
    }

    fn recalls(&mut self, probe: &Probe, k: usize) -> Result<bool> {
        let want = normalize_label(&probe.expected);
        Ok(self.engine.query(&probe.query, k)?.iter().any(|h| normalize_label(&h.label) == want))
    }

    fn ltm_size(&self) -> usize {
        self.engine.ltm_size()
    }

    fn retains(&self, label: &str) -> bool {
        self.engine.graph().ids_for_label(label).next().is_some()
    }
}

/// Keeps the last `capacity` raw utterances; recall is substring matching.
pub struct FifoBackend {
    capacity: usize,
    buffer: VecDeque<String>,
}

impl FifoBackend {
    pub fn new(capacity: usize) -> Self {
        FifoBackend { capacity, buffer: VecDeque::new() }
    }

    fn push(&mut self, text: &str) {
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(normalize_label(text));
    }
}

impl MemoryBackend for FifoBackend {
    fn name(&self) -> &str {
        "fifo"
    }

    fn ingest(&mut self, text: &str) -> Result<()> {
        self.push(text);
        Ok(())
    }

    fn inject_noise(&mut self, label: &str, _importance: f64) -> Result<()> {
        self.push(label);
        Ok(())
    }

    fn advance_hours(&mut self, _hours: f64) -> Result<()> {
        Ok(())
    }

    fn consolidate(&mut self) -> Result<()> {
        Ok(())
    }

    /// Negated preferences are matched on their object.
    fn recalls(&mut self, probe: &Probe, _k: usize) -> Result<bool> {
        let want = normalize_label(&probe.expected);
        let want = want.strip_prefix("not ").unwrap_or(&want).to_string();
        Ok(self.buffer.iter().any(|t| t.contains(&want)))
    }

    fn ltm_size(&self) -> usize {
        self.buffer.len()
    }

    fn retains(&self, label: &str) -> bool {
        let label = normalize_label(label);
        self.buffer.iter().any(|t| *t == label)
    }
}

/// Extracted concepts ranked by cosine alone; nothing is ever dropped.
pub struct VectorBackend {
    encoder: Encoder,
    entries: BTreeMap<ConceptId, (String, Embedding)>,
}

impl VectorBackend {
    pub fn new(dim: usize) -> Self {
        VectorBackend { encoder: Encoder::local(dim), entries: BTreeMap::new() }
    }
}

impl ConceptLookup for VectorBackend {
    fn contains_id(&self, id: &ConceptId) -> bool {
        self.entries.contains_key(id)
    }

    fn contains_label(&self, label: &str) -> bool {
        let want = normalize_label(label);
        self.entries.values().any(|(l, _)| normalize_label(l) == want)
    }
}

impl MemoryBackend for VectorBackend {
    fn name(&self) -> &str {
        "vector"
    }

    fn ingest(&mut self, text: &str) -> Result<()> {
        let found = self.encoder.extractor.extract(text, &*self)?;
        for c in found.concepts {
            let id = make_concept_id(&c.label, c.ctype)?;
            let e = self.encoder.embedder.embed(&format!("{} {}", c.label, c.description))?.embedding;
            self.entries.insert(id, (c.label, e));
        }
        Ok(())
    }

    fn inject_noise(&mut self, label: &str, _importance: f64) -> Result<()> {
        let id = make_concept_id(label, ConceptType::Fact)?;
        let e = self.encoder.embedder.embed(label)?.embedding;
        self.entries.insert(id, (label.to_string(), e));
        Ok(())
    }

    fn advance_hours(&mut self, _hours: f64) -> Result<()> {
        Ok(())
    }

    fn consolidate(&mut self) -> Result<()> {
        Ok(())
    }

    fn recalls(&mut self, probe: &Probe, k: usize) -> Result<bool> {
        let q = self.encoder.embedder.embed(&probe.query)?.embedding;
        let mut scored: Vec<(f64, &String)> =
            self.entries.values().map(|(l, e)| (q.cosine(e), l)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        let want = normalize_label(&probe.expected);
        Ok(scored.iter().take(k).any(|(_, l)| normalize_label(l) == want))
    }

    fn ltm_size(&self) -> usize {
        self.entries.len()
    }

    fn retains(&self, label: &str) -> bool {
        self.contains_label(label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe(q: &str, e: &str) -> Probe {
        Probe { query: q.into(), expected: e.into() }
    }

    #[test]
    fn fifo_forgets_oldest() {
        let mut f = FifoBackend::new(2);
        for t in ["I like tea", "I hate rain", "I love chess"] {
            f.ingest(t).unwrap();
        }
        assert!(!f.recalls(&probe("tea?", "tea"), 3).unwrap());
        assert!(f.recalls(&probe("rain?", "not rain"), 3).unwrap());
        assert_eq!(f.ltm_size(), 2);
    }

    #[test]
    fn vector_ranks_by_cosine() {
        let mut v = VectorBackend::new(64);
        v.ingest("I live in Mumbai and I love chess").unwrap();
        assert!(v.recalls(&probe("where do I live", "Mumbai"), 1).unwrap());
        assert!(v.retains("chess"));
    }
}
