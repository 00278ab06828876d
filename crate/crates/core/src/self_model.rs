//! The protected self node, its capability nodes, runtime counters and
//! template-based introspection.

use serde::{Deserialize, Serialize};

use crate::encoding::Embedder;
use crate::error::Result;
use crate::graph::MemoryGraph;
use crate::model::{make_concept_id, Concept, ConceptId, ConceptType, Predicate, Timestamp, ValueVector};

pub const SELF_IMPORTANCE: f64 = 0.95;
pub const CAPABILITY_IMPORTANCE: f64 = 0.5;
pub const CAPABILITY_LINK_STRENGTH: f64 = 0.5;

pub const CAPABILITIES: [&str; 10] = [
    "encode meaning",
    "tag value",
    "hold working memory",
    "store long-term memory",
    "consolidate in NREM",
    "dream in REM",
    "forget intentionally",
    "introspect",
    "persist memory",
    "answer queries",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counters {
    pub messages_processed: u64,
    pub sleep_cycles_completed: u64,
    pub dreams_generated: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfState {
    /// Absent when the self-model is disabled.
    pub self_concept_id: Option<ConceptId>,
    pub capability_ids: Vec<ConceptId>,
    pub counters: Counters,
}

impl SelfState {
    pub fn disabled(counters: Counters) -> Self {
        SelfState { self_concept_id: None, capability_ids: Vec::new(), counters }
    }
}

fn protected_concept(
    label: &str,
    description: String,
    importance: f64,
    embedder: &Embedder,
    now: Timestamp,
) -> Result<Concept> {
    let text = format!("{label} {description}");
    Ok(Concept {
        id: make_concept_id(label, ConceptType::Abstract)?,
        label: label.to_string(),
        ctype: ConceptType::Abstract,
        description,
        embedding: embedder.embed(&text)?.embedding,
        value: ValueVector::uniform(importance),
        importance,
        created_at: now,
        last_access: now,
        access_count: 0,
        protected: true,
    })
}

/// Inserts the self node and capability nodes where missing. Existing nodes
/// and edges are left alone, so running it on a loaded memory is a no-op.
pub fn init_self(
    graph: &mut MemoryGraph,
    self_label: &str,
    embedder: &Embedder,
    counters: Counters,
    now: Timestamp,
) -> Result<SelfState> {
    let self_id = make_concept_id(self_label, ConceptType::Abstract)?;
    if !graph.contains(&self_id) {
        let c = protected_concept(
            self_label,
            "memory system self model".to_string(),
            SELF_IMPORTANCE,
            embedder,
            now,
        )?;
        graph.insert_concept(c);
    }
    let mut capability_ids = Vec::with_capacity(CAPABILITIES.len());
    for cap in CAPABILITIES {
        let id = make_concept_id(cap, ConceptType::Abstract)?;
        if !graph.contains(&id) {
            let c = protected_concept(
                cap,
                format!("capability: {cap}"),
                CAPABILITY_IMPORTANCE,
                embedder,
                now,
            )?;
            graph.insert_concept(c);
        }
        if graph.relation(&self_id, &id, Predicate::HasProperty).is_none() {
            graph.add_or_strengthen(&self_id, &id, Predicate::HasProperty, CAPABILITY_LINK_STRENGTH, now)?;
        }
        capability_ids.push(id);
    }
    Ok(SelfState { self_concept_id: Some(self_id), capability_ids, counters })
}

fn capability_list(state: &SelfState, graph: &MemoryGraph) -> Vec<String> {
    let listed: Vec<String> = state
        .capability_ids
        .iter()
        .filter_map(|id| graph.get(id))
        .map(|c| c.label.clone())
        .collect();
    if listed.is_empty() {
        CAPABILITIES.iter().map(|s| s.to_string()).collect()
    } else {
        listed
    }
}

/// Deterministic report chosen by keyword.
pub fn introspect(state: &SelfState, graph: &MemoryGraph, query: &str) -> String {
    let q = query.to_lowercase();
    let c = &state.counters;
    let stats = graph.stats();
    if q.contains("dream") {
        format!(
            "I have generated {} dreams across {} sleep cycles.",
            c.dreams_generated, c.sleep_cycles_completed
        )
    } else if q.contains("sleep") || q.contains("slept") {
        format!(
            "I have completed {} sleep cycles and generated {} dreams.",
            c.sleep_cycles_completed, c.dreams_generated
        )
    } else if q.contains("can you") || q.contains("capab") || q.contains("able") {
        let caps = capability_list(state, graph);
        format!("I have {} capabilities: {}.", caps.len(), caps.join(", "))
    } else if q.contains("memory") || q.contains("remember") || q.contains("know") {
        format!(
            "My long-term memory holds {} concepts and {} relations, built from {} messages.",
            stats.concepts, stats.edges, c.messages_processed
        )
    } else {
        format!(
            "I hold {} concepts and {} relations. I have processed {} messages, completed {} sleep cycles and generated {} dreams.",
            stats.concepts, stats.edges, c.messages_processed, c.sleep_cycles_completed, c.dreams_generated
        )
    }
}
