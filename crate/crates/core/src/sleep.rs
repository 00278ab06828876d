//! Offline sleep phases: trigger evaluation, Hebbian consolidation with
//! global downscaling, strength-weighted dream walks, and value-based
//! forgetting.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::MemoryGraph;
use crate::model::{ConceptId, EngineConfig, Episode, Predicate, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SleepReason {
    Entropy,
    Conflict,
    Time,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SleepTrigger {
    pub reason: SleepReason,
    pub measured: f64,
    pub threshold: f64,
}

impl SleepTrigger {
    pub fn manual() -> Self {
        SleepTrigger { reason: SleepReason::Manual, measured: 0.0, threshold: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SleepReport {
    pub cycle: u64,
    pub trigger: SleepTrigger,
    pub pairs_strengthened: usize,
    pub edges_downscaled: usize,
    pub episodes_transferred: usize,
    pub dreams_attempted: usize,
    pub dreams_integrated: usize,
    pub dream_paths: Vec<Vec<ConceptId>>,
    pub theta_f: f64,
    pub concepts_forgotten: usize,
    pub forgotten_ids: Vec<ConceptId>,
    pub started_at: Timestamp,
    pub ended_at: Timestamp,
}

/// Checks entropy, then conflict density, then elapsed time.
pub fn should_sleep(
    entropy: f64,
    conflict_density: f64,
    hours_since_sleep: f64,
    cfg: &EngineConfig,
) -> Option<SleepTrigger> {
    let checks = [
        (SleepReason::Entropy, entropy, cfg.theta_e),
        (SleepReason::Conflict, conflict_density, cfg.theta_c),
        (SleepReason::Time, hours_since_sleep, cfg.tau_hours),
    ];
    checks
        .into_iter()
        .find(|(_, measured, threshold)| measured > threshold)
        .map(|(reason, measured, threshold)| SleepTrigger { reason, measured, threshold })
}

/// Distinct concept ids of an episode in first-seen order.
fn distinct_ids(ep: &Episode) -> Vec<&ConceptId> {
    let mut seen = BTreeSet::new();
    ep.concept_ids.iter().filter(|id| seen.insert(*id)).collect()
}

/// Strengthens `related_to` between every co-occurring pair by η·I_i·I_j.
/// All increments use importance as it stands before any of them.
pub fn hebbian(graph: &mut MemoryGraph, episodes: &[Episode], eta: f64, now: Timestamp) -> usize {
    let mut updates: Vec<(ConceptId, ConceptId, f64)> = Vec::new();
    for ep in episodes {
        let ids = distinct_ids(ep);
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                let (Some(ca), Some(cb)) = (graph.get(a), graph.get(b)) else {
                    continue;
                };
                updates.push(((*a).clone(), (*b).clone(), eta * ca.importance * cb.importance));
            }
        }
    }
    for (a, b, delta) in &updates {
        graph
            .add_or_strengthen(a, b, Predicate::RelatedTo, *delta, now)
            .expect("endpoints checked above");
    }
    updates.len()
}

/// Outgoing transition distribution: strength over total outgoing strength,
/// excluding contradictions. Empty when there is nowhere to go.
pub fn transition_probabilities(graph: &MemoryGraph, node: &ConceptId) -> Vec<(ConceptId, f64)> {
    let edges: Vec<_> = graph
        .out_edges(node)
        .filter(|r| r.predicate != Predicate::Contradicts && r.strength > 0.0)
        .map(|r| (r.dst.clone(), r.strength))
        .collect();
    let total: f64 = edges.iter().map(|(_, s)| s).sum();
    if total <= 0.0 {
        return Vec::new();
    }
    edges.into_iter().map(|(d, s)| (d, s / total)).collect()
}

fn sample_next<R: Rng + ?Sized>(graph: &MemoryGraph, node: &ConceptId, rng: &mut R) -> Option<ConceptId> {
    let edges: Vec<_> = graph
        .out_edges(node)
        .filter(|r| r.predicate != Predicate::Contradicts && r.strength > 0.0)
        .collect();
    let total: f64 = edges.iter().map(|r| r.strength).sum();
    if edges.is_empty() || total <= 0.0 {
        return None;
    }
    let mut x = rng.random::<f64>() * total;
    for r in &edges {
        x -= r.strength;
        if x < 0.0 {
            return Some(r.dst.clone());
        }
    }
    edges.last().map(|r| r.dst.clone())
}

/// Random walk of up to `steps` transitions. The path includes the seed.
pub fn random_walk<R: Rng + ?Sized>(
    graph: &MemoryGraph,
    seed: &ConceptId,
    steps: usize,
    rng: &mut R,
) -> Vec<ConceptId> {
    let mut path = vec![seed.clone()];
    for _ in 0..steps {
        match sample_next(graph, path.last().unwrap(), rng) {
            Some(next) => path.push(next),
            None => break,
        }
    }
    path
}

/// A walk becomes a new association when it ends somewhere new, the
/// endpoints are not already linked, and no step crosses a contradiction.
pub fn integrable(graph: &MemoryGraph, path: &[ConceptId]) -> bool {
    let (Some(start), Some(end)) = (path.first(), path.last()) else {
        return false;
    };
    if start == end || graph.linked(start, end) {
        return false;
    }
    path.windows(2).all(|w| !graph.has_contradiction(&w[0], &w[1]))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DreamOutcome {
    pub attempted: usize,
    pub integrated: usize,
    pub paths: Vec<Vec<ConceptId>>,
}

pub fn dream<R: Rng + ?Sized>(
    graph: &mut MemoryGraph,
    seeds: &[ConceptId],
    cfg: &EngineConfig,
    rng: &mut R,
    now: Timestamp,
) -> DreamOutcome {
    let mut out = DreamOutcome::default();
    for seed in seeds {
        if !graph.contains(seed) {
            continue;
        }
        let path = random_walk(graph, seed, cfg.rem_walk_steps, rng);
        out.attempted += 1;
        if integrable(graph, &path) {
            let (start, end) = (&path[0], path.last().unwrap());
            graph
                .add_or_strengthen(start, end, Predicate::RelatedTo, cfg.eta, now)
                .expect("walk endpoints exist");
            out.integrated += 1;
        }
        out.paths.push(path);
    }
    out
}

/// Top `n` concepts by importance among `candidates`, ties by id.
pub fn dream_seeds(graph: &MemoryGraph, candidates: &BTreeSet<ConceptId>, n: usize) -> Vec<ConceptId> {
    let mut pool: Vec<_> = candidates.iter().filter_map(|id| graph.get(id)).collect();
    pool.sort_by(|a, b| {
        b.importance
            .partial_cmp(&a.importance)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.id.cmp(&b.id))
    });
    pool.into_iter().take(n).map(|c| c.id.clone()).collect()
}

/// β₁·I + β₂·exp(−λ·Δt): fresh concepts get the full recency bonus.
pub fn retention_score(importance: f64, hours_since_access: f64, cfg: &EngineConfig) -> f64 {
    cfg.beta1 * importance + cfg.beta2 * (-cfg.lambda_per_hour * hours_since_access).exp()
}

/// μ_I − σ_I·|G|/target over unprotected concepts, floored.
pub fn forgetting_threshold(importances: &[f64], cfg: &EngineConfig) -> f64 {
    if importances.is_empty() {
        return cfg.theta_f_floor;
    }
    let n = importances.len() as f64;
    let mean = importances.iter().sum::<f64>() / n;
    let var = importances.iter().map(|i| (i - mean).powi(2)).sum::<f64>() / n;
    let raw = mean - var.sqrt() * (n / cfg.target_size as f64);
    raw.max(cfg.theta_f_floor)
}

/// Removes every unprotected concept scoring below the adaptive threshold.
pub fn forget(graph: &mut MemoryGraph, now: Timestamp, cfg: &EngineConfig) -> (f64, Vec<ConceptId>) {
    let candidates: Vec<_> = graph.concepts().filter(|c| !c.protected).collect();
    let importances: Vec<f64> = candidates.iter().map(|c| c.importance).collect();
    let theta = forgetting_threshold(&importances, cfg);
    let doomed: Vec<ConceptId> = candidates
        .iter()
        .filter(|c| retention_score(c.importance, now.hours_since(c.last_access), cfg) < theta)
        .map(|c| c.id.clone())
        .collect();
    for id in &doomed {
        graph.remove_concept(id).expect("unprotected and present");
    }
    (theta, doomed)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::{make_concept_id, Concept, ConceptType, Embedding, TaggerWeights, ValueVector};
    use crate::valuation::Tagger;

    fn id(l: &str) -> ConceptId {
        make_concept_id(l, ConceptType::Abstract).unwrap()
    }

    fn graph(nodes: &[(&str, f64)]) -> MemoryGraph {
        let mut g = MemoryGraph::new();
        let t = Tagger::new(TaggerWeights::default());
        for (l, imp) in nodes {
            g.upsert_concept(
                Concept {
                    id: id(l),
                    label: l.to_string(),
                    ctype: ConceptType::Abstract,
                    description: String::new(),
                    embedding: Embedding::null(4),
                    value: ValueVector::uniform(*imp),
                    importance: *imp,
                    created_at: Timestamp(0),
                    last_access: Timestamp(0),
                    access_count: 0,
                    protected: false,
                },
                Timestamp(0),
                &t,
            );
        }
        g
    }

    #[test]
    fn trigger_order_and_thresholds() {
        let cfg = EngineConfig::default();
        assert_eq!(should_sleep(1.0, 0.0, 0.0, &cfg).unwrap().reason, SleepReason::Entropy);
        assert_eq!(should_sleep(0.5, 0.31, 0.0, &cfg).unwrap().reason, SleepReason::Conflict);
        assert_eq!(should_sleep(0.5, 0.1, 1.5, &cfg).unwrap().reason, SleepReason::Time);
        assert!(should_sleep(0.2, 0.1, 10.0 / 60.0, &cfg).is_none());
        assert!(should_sleep(0.9, 0.3, 1.0, &cfg).is_none());
    }

    #[test]
    fn hebbian_pair_delta() {
        let mut g = graph(&[("a", 1.0), ("b", 1.0), ("c", 0.5)]);
        let ep = |ids: Vec<ConceptId>| Episode {
            eid: "e".into(),
            timestamp: Timestamp(0),
            concept_ids: ids,
            text: String::new(),
            value: ValueVector::default(),
            importance: 0.0,
            last_access: Timestamp(0),
            access_count: 0,
        };
        assert_eq!(hebbian(&mut g, &[ep(vec![id("a")])], 0.1, Timestamp(0)), 0);
        assert_eq!(hebbian(&mut g, &[ep(vec![id("a"), id("b")])], 0.1, Timestamp(0)), 1);
        let s = g.relation(&id("a"), &id("b"), Predicate::RelatedTo).unwrap().strength;
        assert!((s - 0.1).abs() < 1e-15);
        assert_eq!(hebbian(&mut g, &[ep(vec![id("a"), id("b"), id("c"), id("a")])], 0.1, Timestamp(0)), 3);
        g.add_or_strengthen(&id("c"), &id("a"), Predicate::Causes, 1.0, Timestamp(0)).unwrap();
        g.downscale(0.8);
        let s = g.relation(&id("c"), &id("a"), Predicate::Causes).unwrap().strength;
        assert!((s - 0.8).abs() < 1e-15);
    }

    #[test]
    fn transition_law_normalizes_out_strengths() {
        let mut g = graph(&[("h", 1.0), ("x", 0.5), ("y", 0.5), ("z", 0.5), ("w", 0.5)]);
        for (d, s) in [("x", 2.0), ("y", 1.0), ("z", 1.0)] {
            g.add_or_strengthen(&id("h"), &id(d), Predicate::RelatedTo, s, Timestamp(0)).unwrap();
        }
        g.add_or_strengthen(&id("h"), &id("w"), Predicate::Contradicts, 5.0, Timestamp(0)).unwrap();
        let mut probs = transition_probabilities(&g, &id("h"));
        probs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let p: Vec<f64> = probs.iter().map(|x| x.1).collect();
        assert_eq!(p, vec![0.5, 0.25, 0.25]);
        assert_eq!(probs[0].0, id("x"));
    }

    #[test]
    fn dead_end_seed_is_not_integrated() {
        let mut g = graph(&[("lonely", 0.9)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = dream(&mut g, &[id("lonely")], &EngineConfig::default(), &mut rng, Timestamp(0));
        assert_eq!(out.attempted, 1);
        assert_eq!(out.integrated, 0);
        assert_eq!(out.paths, vec![vec![id("lonely")]]);
    }

    #[test]
    fn chain_walk_creates_shortcut() {
        let mut g = graph(&[("healthcare", 0.9), ("exercise", 0.6), ("hiking", 0.7)]);
        g.add_or_strengthen(&id("healthcare"), &id("exercise"), Predicate::RelatedTo, 0.3, Timestamp(0)).unwrap();
        g.add_or_strengthen(&id("exercise"), &id("hiking"), Predicate::RelatedTo, 0.2, Timestamp(0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let out = dream(&mut g, &[id("healthcare")], &EngineConfig::default(), &mut rng, Timestamp(0));
        assert_eq!(out.integrated, 1);
        let e = g.relation(&id("healthcare"), &id("hiking"), Predicate::RelatedTo).unwrap();
        assert!((e.strength - 0.1).abs() < 1e-15);
    }

    #[test]
    fn contradiction_on_path_blocks_integration() {
        let mut g = graph(&[("a", 0.9), ("b", 0.5), ("c", 0.5)]);
        g.add_or_strengthen(&id("a"), &id("b"), Predicate::RelatedTo, 1.0, Timestamp(0)).unwrap();
        g.add_or_strengthen(&id("b"), &id("c"), Predicate::RelatedTo, 1.0, Timestamp(0)).unwrap();
        g.add_or_strengthen(&id("c"), &id("b"), Predicate::Contradicts, 1.0, Timestamp(0)).unwrap();
        assert!(!integrable(&g, &[id("a"), id("b"), id("c")]));
        assert!(integrable(&g, &[id("a"), id("b")]) == false);
    }

    #[test]
    fn retention_and_threshold_examples() {
        let cfg = EngineConfig::default();
        assert!((retention_score(0.9, 0.0, &cfg) - 0.92).abs() < 1e-12);
        assert!(((-0.01f64).exp() - 0.990).abs() < 1e-3);
        // mean 0.3, population sd 0.2, 300 concepts, target 100 → floor
        let mut imps = vec![0.1; 150];
        imps.extend(vec![0.5; 150]);
        assert_eq!(forgetting_threshold(&imps, &cfg), 0.05);
        assert_eq!(forgetting_threshold(&[], &cfg), 0.05);
    }

    #[test]
    fn forget_spares_protected_and_high_scores() {
        let mut g = graph(&[("keep", 0.9), ("drop", 0.01)]);
        let cfg = EngineConfig::default();
        let now = Timestamp(0) + crate::model::Duration::from_hours(24.0 * 14.0);
        let (_, gone) = forget(&mut g, now, &cfg);
        assert_eq!(gone, vec![id("drop")]);
        assert!(g.contains(&id("keep")));
        let (_, gone) = forget(&mut g, Timestamp(0), &cfg);
        assert!(gone.is_empty());
    }
}
