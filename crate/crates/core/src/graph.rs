//! Long-term memory: a directed, typed, weighted concept graph.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::encoding::ConceptLookup;
use crate::error::{Result, ScmError};
use crate::model::{
    normalize_label, Concept, ConceptId, Embedding, FusionWeights, Predicate, Relation, Timestamp,
};
use crate::valuation::Tagger;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    pub src: ConceptId,
    pub dst: ConceptId,
    pub predicate: Predicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub concept_id: ConceptId,
    pub label: String,
    pub fused_score: f64,
    pub semantic: f64,
    pub importance: f64,
    pub graph_proximity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraphStats {
    pub concepts: usize,
    pub edges: usize,
    pub contradicts: usize,
}

#[derive(Debug, Clone, Default)]
pub struct MemoryGraph {
    concepts: BTreeMap<ConceptId, Concept>,
    edges: BTreeMap<EdgeKey, Relation>,
    out_adj: BTreeMap<ConceptId, BTreeSet<(ConceptId, Predicate)>>,
    in_adj: BTreeMap<ConceptId, BTreeSet<(ConceptId, Predicate)>>,
    labels: BTreeMap<String, BTreeSet<ConceptId>>,
    contradicts: usize,
}

/// Ranking order for equal cosines: more accessed, then newer, then id.
fn tie_break(a: &Concept, b: &Concept) -> Ordering {
    b.access_count
        .cmp(&a.access_count)
        .then(b.created_at.cmp(&a.created_at))
        .then(a.id.cmp(&b.id))
}

fn rank_order(a: (&Concept, f64), b: (&Concept, f64)) -> Ordering {
    b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| tie_break(a.0, b.0))
}

impl MemoryGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats { concepts: self.concepts.len(), edges: self.edges.len(), contradicts: self.contradicts }
    }

    pub fn get(&self, id: &ConceptId) -> Option<&Concept> {
        self.concepts.get(id)
    }

    pub fn contains(&self, id: &ConceptId) -> bool {
        self.concepts.contains_key(id)
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.edges.values()
    }

    pub fn relation(&self, src: &ConceptId, dst: &ConceptId, predicate: Predicate) -> Option<&Relation> {
        self.edges.get(&EdgeKey { src: src.clone(), dst: dst.clone(), predicate })
    }

    /// Ids carrying this label under any concept type.
    pub fn ids_for_label(&self, label: &str) -> impl Iterator<Item = &ConceptId> {
        self.labels.get(&normalize_label(label)).into_iter().flatten()
    }

    pub fn max_access_count(&self) -> u64 {
        self.concepts.values().map(|c| c.access_count).max().unwrap_or(0)
    }

    /// Sum of incident edge strengths.
    pub fn strength_sum(&self, id: &ConceptId) -> f64 {
        let out = self.out_adj.get(id).into_iter().flatten().map(|(d, p)| {
            self.edges[&EdgeKey { src: id.clone(), dst: d.clone(), predicate: *p }].strength
        });
        let inc = self.in_adj.get(id).into_iter().flatten().map(|(s, p)| {
            self.edges[&EdgeKey { src: s.clone(), dst: id.clone(), predicate: *p }].strength
        });
        out.chain(inc).sum()
    }

    fn insert_raw(&mut self, c: Concept) {
        self.labels.entry(normalize_label(&c.label)).or_default().insert(c.id.clone());
        self.concepts.insert(c.id.clone(), c);
    }

    /// Inserts a new concept or merges into the existing one with the same id:
    /// earliest creation, summed access counts, per-dimension max-magnitude
    /// values, refreshed importance and last access.
    pub fn upsert_concept(&mut self, c: Concept, now: Timestamp, tagger: &Tagger) -> ConceptId {
        let id = c.id.clone();
        let Some(existing) = self.concepts.get_mut(&id) else {
            self.insert_raw(c);
            return id;
        };
        existing.created_at = existing.created_at.min(c.created_at);
        existing.access_count += c.access_count;
        existing.last_access = existing.last_access.max(now).max(c.last_access);
        if !existing.protected {
            let merged = existing.value.merge_max(&c.value);
            let (value, importance) = tagger.tag(merged);
            existing.value = value;
            existing.importance = importance;
        }
        id
    }

    /// Inserts a concept verbatim, replacing any concept with the same id.
    /// Used by snapshot loading and benchmark injection.
    pub fn insert_concept(&mut self, c: Concept) {
        if let Some(old) = self.concepts.get(&c.id) {
            let old_label = normalize_label(&old.label);
            if let Some(set) = self.labels.get_mut(&old_label) {
                set.remove(&c.id);
                if set.is_empty() {
                    self.labels.remove(&old_label);
                }
            }
        }
        self.insert_raw(c);
    }

    /// Updates access statistics for `id` and refreshes its importance.
    pub fn touch(&mut self, id: &ConceptId, now: Timestamp, tagger: &Tagger) -> Result<()> {
        let max = self.max_access_count();
        let c = self
            .concepts
            .get_mut(id)
            .ok_or_else(|| ScmError::NotFound(format!("concept {id}")))?;
        c.access_count += 1;
        c.last_access = c.last_access.max(now);
        tagger.refresh(c, max);
        Ok(())
    }

    /// Sets last_access without counting an access.
    pub fn refresh_last_access(&mut self, id: &ConceptId, now: Timestamp) {
        if let Some(c) = self.concepts.get_mut(id) {
            c.last_access = c.last_access.max(now);
        }
    }

    /// Creates the edge with strength `delta`, or adds `delta` to it.
    pub fn add_or_strengthen(
        &mut self,
        src: &ConceptId,
        dst: &ConceptId,
        predicate: Predicate,
        delta: f64,
        now: Timestamp,
    ) -> Result<f64> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(ScmError::InvalidArgument(format!("strength delta must be >= 0, got {delta}")));
        }
        for end in [src, dst] {
            if !self.concepts.contains_key(end) {
                return Err(ScmError::NotFound(format!("concept {end}")));
            }
        }
        let key = EdgeKey { src: src.clone(), dst: dst.clone(), predicate };
        if let Some(rel) = self.edges.get_mut(&key) {
            rel.strength += delta;
            return Ok(rel.strength);
        }
        self.insert_relation(Relation {
            src: src.clone(),
            dst: dst.clone(),
            predicate,
            strength: delta,
            created_at: now,
        })?;
        Ok(delta)
    }

    /// Inserts or replaces an edge verbatim. Endpoints must exist.
    pub fn insert_relation(&mut self, rel: Relation) -> Result<()> {
        for end in [&rel.src, &rel.dst] {
            if !self.concepts.contains_key(end) {
                return Err(ScmError::NotFound(format!("concept {end}")));
            }
        }
        if !(rel.strength >= 0.0) {
            return Err(ScmError::InvalidArgument(format!("negative strength {}", rel.strength)));
        }
        let key = EdgeKey { src: rel.src.clone(), dst: rel.dst.clone(), predicate: rel.predicate };
        if self.edges.insert(key, rel.clone()).is_none() {
            self.out_adj.entry(rel.src.clone()).or_default().insert((rel.dst.clone(), rel.predicate));
            self.in_adj.entry(rel.dst.clone()).or_default().insert((rel.src.clone(), rel.predicate));
            if rel.predicate == Predicate::Contradicts {
                self.contradicts += 1;
            }
        }
        Ok(())
    }

    /// Multiplies every edge strength by `alpha`. Returns the edge count.
    pub fn downscale(&mut self, alpha: f64) -> usize {
        for rel in self.edges.values_mut() {
            rel.strength *= alpha;
        }
        self.edges.len()
    }

    /// Outgoing edges of `id` in deterministic (dst, predicate) order.
    pub fn out_edges<'a>(&'a self, id: &ConceptId) -> impl Iterator<Item = &'a Relation> + 'a {
        let src = id.clone();
        self.out_adj.get(id).into_iter().flatten().map(move |(d, p)| {
            &self.edges[&EdgeKey { src: src.clone(), dst: d.clone(), predicate: *p }]
        })
    }

    /// True when any edge links `a` and `b` in either direction.
    pub fn linked(&self, a: &ConceptId, b: &ConceptId) -> bool {
        let has = |x: &ConceptId, y: &ConceptId| {
            self.out_adj.get(x).is_some_and(|s| s.iter().any(|(d, _)| d == y))
        };
        has(a, b) || has(b, a)
    }

    pub fn has_contradiction(&self, a: &ConceptId, b: &ConceptId) -> bool {
        let key = |s: &ConceptId, d: &ConceptId| EdgeKey {
            src: s.clone(),
            dst: d.clone(),
            predicate: Predicate::Contradicts,
        };
        self.edges.contains_key(&key(a, b)) || self.edges.contains_key(&key(b, a))
    }

    /// Exhaustive top-k by cosine.
    pub fn semantic_search(&self, query: &Embedding, k: usize) -> Vec<(ConceptId, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let mut scored: Vec<(&Concept, f64)> =
            self.concepts.values().map(|c| (c, query.cosine(&c.embedding))).collect();
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, |a, b| rank_order(*a, *b));
            scored.truncate(k);
        }
        scored.sort_by(|a, b| rank_order(*a, *b));
        scored.into_iter().map(|(c, s)| (c.id.clone(), s)).collect()
    }

    /// Breadth-first over in- and out-edges, skipping contradictions. The seed
    /// itself is not reported.
    pub fn neighbors(&self, seed: &ConceptId, max_hops: usize) -> Result<Vec<(ConceptId, usize)>> {
        if !self.concepts.contains_key(seed) {
            return Err(ScmError::NotFound(format!("concept {seed}")));
        }
        let mut seen: BTreeMap<ConceptId, usize> = BTreeMap::new();
        seen.insert(seed.clone(), 0);
        let mut queue = VecDeque::from([(seed.clone(), 0usize)]);
        while let Some((node, hops)) = queue.pop_front() {
            if hops == max_hops {
                continue;
            }
            let outs = self.out_adj.get(&node).into_iter().flatten();
            let ins = self.in_adj.get(&node).into_iter().flatten();
            for (next, pred) in outs.chain(ins) {
                if *pred == Predicate::Contradicts || seen.contains_key(next) {
                    continue;
                }
                seen.insert(next.clone(), hops + 1);
                queue.push_back((next.clone(), hops + 1));
            }
        }
        seen.remove(seed);
        let mut out: Vec<_> = seen.into_iter().collect();
        out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        Ok(out)
    }

    /// Fused ranking without side effects.
    pub fn rank(&self, query: &Embedding, k: usize, w: &FusionWeights) -> Vec<RetrievalHit> {
        if k == 0 || self.concepts.is_empty() {
            return Vec::new();
        }
        let semantic = self.semantic_search(query, 2 * k);
        let mut proximity: BTreeMap<ConceptId, f64> = BTreeMap::new();
        let seeds = semantic.iter().filter(|(_, s)| *s > 0.0).take(3);
        for (seed, _) in seeds {
            proximity.insert(seed.clone(), 1.0);
            for (n, hops) in self.neighbors(seed, 1).unwrap_or_default() {
                let p = 1.0 / (1.0 + hops as f64);
                let slot = proximity.entry(n).or_insert(0.0);
                *slot = slot.max(p);
            }
        }
        let mut pool: BTreeSet<ConceptId> = semantic.into_iter().map(|(id, _)| id).collect();
        pool.extend(proximity.keys().cloned());

        let mut hits: Vec<(&Concept, RetrievalHit)> = pool
            .iter()
            .map(|id| {
                let c = &self.concepts[id];
                let sem = query.cosine(&c.embedding);
                let prox = proximity.get(id).copied().unwrap_or(0.0);
                let fused = w.semantic * sem + w.importance * c.importance + w.graph * prox;
                let hit = RetrievalHit {
                    concept_id: id.clone(),
                    label: c.label.clone(),
                    fused_score: fused,
                    semantic: sem,
                    importance: c.importance,
                    graph_proximity: prox,
                };
                (c, hit)
            })
            .collect();
        hits.sort_by(|a, b| rank_order((a.0, a.1.fused_score), (b.0, b.1.fused_score)));
        hits.truncate(k);
        hits.into_iter().map(|(_, h)| h).collect()
    }

    /// Ranks and marks every returned concept as accessed.
    pub fn retrieve(
        &mut self,
        query: &Embedding,
        k: usize,
        w: &FusionWeights,
        now: Timestamp,
        tagger: &Tagger,
    ) -> Vec<RetrievalHit> {
        let hits = self.rank(query, k, w);
        for h in &hits {
            let _ = self.touch(&h.concept_id, now, tagger);
        }
        hits
    }

    pub fn conflict_density(&self) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        self.contradicts as f64 / self.edges.len() as f64
    }

    /// Removes an unprotected concept and every incident edge.
    pub fn remove_concept(&mut self, id: &ConceptId) -> Result<usize> {
        let c = self.concepts.get(id).ok_or_else(|| ScmError::NotFound(format!("concept {id}")))?;
        if c.protected {
            return Err(ScmError::PermissionDenied(format!("concept {id} is protected")));
        }
        let label = normalize_label(&c.label);
        let mut doomed: Vec<EdgeKey> = Vec::new();
        for (d, p) in self.out_adj.get(id).into_iter().flatten() {
            doomed.push(EdgeKey { src: id.clone(), dst: d.clone(), predicate: *p });
        }
        for (s, p) in self.in_adj.get(id).into_iter().flatten() {
            if s != id {
                doomed.push(EdgeKey { src: s.clone(), dst: id.clone(), predicate: *p });
            }
        }
        for key in &doomed {
            self.remove_edge(key);
        }
        self.out_adj.remove(id);
        self.in_adj.remove(id);
        self.concepts.remove(id);
        if let Some(set) = self.labels.get_mut(&label) {
            set.remove(id);
            if set.is_empty() {
                self.labels.remove(&label);
            }
        }
        Ok(doomed.len())
    }

    fn remove_edge(&mut self, key: &EdgeKey) {
        if self.edges.remove(key).is_none() {
            return;
        }
        if let Some(s) = self.out_adj.get_mut(&key.src) {
            s.remove(&(key.dst.clone(), key.predicate));
        }
        if let Some(s) = self.in_adj.get_mut(&key.dst) {
            s.remove(&(key.src.clone(), key.predicate));
        }
        if key.predicate == Predicate::Contradicts {
            self.contradicts -= 1;
        }
    }

    /// Full-scan consistency check of edges, adjacency and cached counts.
    pub fn check_integrity(&self) -> std::result::Result<(), String> {
        for (key, rel) in &self.edges {
            if key.src != rel.src || key.dst != rel.dst || key.predicate != rel.predicate {
                return Err(format!("edge key mismatch for {} -> {}", rel.src, rel.dst));
            }
            for end in [&rel.src, &rel.dst] {
                if !self.concepts.contains_key(end) {
                    return Err(format!("edge references missing concept {end}"));
                }
            }
            if !(rel.strength >= 0.0) || !rel.strength.is_finite() {
                return Err(format!("edge {} -> {} has strength {}", rel.src, rel.dst, rel.strength));
            }
        }
        let adj_out: usize = self.out_adj.values().map(|s| s.len()).sum();
        let adj_in: usize = self.in_adj.values().map(|s| s.len()).sum();
        if adj_out != self.edges.len() || adj_in != self.edges.len() {
            return Err("adjacency out of sync with edge table".into());
        }
        let contradicts = self.edges.keys().filter(|k| k.predicate == Predicate::Contradicts).count();
        if contradicts != self.contradicts {
            return Err(format!("cached contradicts count {} != {}", self.contradicts, contradicts));
        }
        for (id, c) in &self.concepts {
            if id != &c.id {
                return Err(format!("concept stored under wrong id {id}"));
            }
            if c.last_access < c.created_at {
                return Err(format!("concept {id} accessed before creation"));
            }
        }
        let labelled: usize = self.labels.values().map(|s| s.len()).sum();
        if labelled != self.concepts.len() {
            return Err("label index out of sync".into());
        }
        Ok(())
    }
}

impl ConceptLookup for MemoryGraph {
    fn contains_id(&self, id: &ConceptId) -> bool {
        self.contains(id)
    }

    fn contains_label(&self, label: &str) -> bool {
        self.labels.contains_key(&normalize_label(label))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_concept_id, ConceptType, TaggerWeights, ValueVector};

    fn tagger() -> Tagger {
        Tagger::new(TaggerWeights::default())
    }

    fn concept(label: &str, emb: &[f32], importance: f64) -> Concept {
        Concept {
            id: make_concept_id(label, ConceptType::Fact).unwrap(),
            label: label.into(),
            ctype: ConceptType::Fact,
            description: label.into(),
            embedding: Embedding::normalized(emb.to_vec()),
            value: ValueVector::uniform(importance),
            importance,
            created_at: Timestamp(0),
            last_access: Timestamp(0),
            access_count: 1,
            protected: false,
        }
    }

    fn id(label: &str) -> ConceptId {
        make_concept_id(label, ConceptType::Fact).unwrap()
    }

    #[test]
    fn upsert_inserts_then_merges() {
        let mut g = MemoryGraph::new();
        let t = tagger();
        let mut a = concept("a", &[1.0, 0.0], 0.4);
        a.value.novelty = 0.4;
        g.upsert_concept(a.clone(), Timestamp(5), &t);
        assert_eq!(g.len(), 1);
        let mut b = a.clone();
        b.value.novelty = 0.7;
        b.created_at = Timestamp(3);
        g.upsert_concept(b, Timestamp(9), &t);
        assert_eq!(g.len(), 1);
        let c = g.get(&a.id).unwrap();
        assert_eq!(c.access_count, 2);
        assert_eq!(c.value.novelty, 0.7);
        assert_eq!(c.created_at, Timestamp(0));
        assert_eq!(c.last_access, Timestamp(9));
    }

    #[test]
    fn strengthen_examples() {
        let mut g = MemoryGraph::new();
        let t = tagger();
        for l in ["a", "b"] {
            g.upsert_concept(concept(l, &[1.0], 0.5), Timestamp(0), &t);
        }
        let delta = 0.1 * 0.8 * 0.5;
        let s = g.add_or_strengthen(&id("a"), &id("b"), Predicate::RelatedTo, delta, Timestamp(0)).unwrap();
        assert!((s - 0.04).abs() < 1e-12);
        let s = g.add_or_strengthen(&id("a"), &id("b"), Predicate::RelatedTo, 0.1, Timestamp(0)).unwrap();
        assert!((s - 0.14).abs() < 1e-12);
        g.add_or_strengthen(&id("b"), &id("a"), Predicate::Causes, 0.0, Timestamp(0)).unwrap();
        assert_eq!(g.relation(&id("b"), &id("a"), Predicate::Causes).unwrap().strength, 0.0);
        assert!(matches!(
            g.add_or_strengthen(&id("a"), &id("zzz"), Predicate::RelatedTo, 0.1, Timestamp(0)),
            Err(ScmError::NotFound(_))
        ));
        g.check_integrity().unwrap();
    }

    #[test]
    fn search_ranks_exact_match_first_and_truncates() {
        let mut g = MemoryGraph::new();
        let t = tagger();
        g.upsert_concept(concept("a", &[1.0, 0.0, 0.0], 0.5), Timestamp(0), &t);
        g.upsert_concept(concept("b", &[0.0, 1.0, 0.0], 0.5), Timestamp(0), &t);
        let q = Embedding::normalized(vec![0.0, 1.0, 0.0]);
        let hits = g.semantic_search(&q, 10);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].0, id("b"));
        assert!((hits[0].1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn neighbor_examples() {
        let mut g = MemoryGraph::new();
        let t = tagger();
        for l in ["a", "b", "c", "x", "y", "z"] {
            g.upsert_concept(concept(l, &[1.0], 0.5), Timestamp(0), &t);
        }
        for (s, d) in [("a", "b"), ("b", "c")] {
            g.add_or_strengthen(&id(s), &id(d), Predicate::RelatedTo, 0.1, Timestamp(0)).unwrap();
        }
        assert_eq!(g.neighbors(&id("a"), 2).unwrap(), vec![(id("b"), 1), (id("c"), 2)]);
        assert!(g.neighbors(&id("a"), 0).unwrap().is_empty());
        for n in ["x", "y", "z"] {
            g.add_or_strengthen(&id("c"), &id(n), Predicate::PartOf, 0.1, Timestamp(0)).unwrap();
        }
        g.add_or_strengthen(&id("x"), &id("a"), Predicate::Contradicts, 0.1, Timestamp(0)).unwrap();
        let mut got: Vec<_> = g.neighbors(&id("x"), 1).unwrap();
        got.sort();
        assert_eq!(got, vec![(id("c"), 1)]);
        assert!(matches!(g.neighbors(&id("nope"), 1), Err(ScmError::NotFound(_))));
    }

    #[test]
    fn fused_score_example() {
        let mut g = MemoryGraph::new();
        let t = tagger();
        g.upsert_concept(concept("a", &[1.0, 0.0], 0.5), Timestamp(0), &t);
        let hits = g.rank(&Embedding::normalized(vec![1.0, 0.0]), 1, &FusionWeights::default());
        assert!((hits[0].fused_score - 0.85).abs() < 1e-9);
        assert!(MemoryGraph::new().rank(&Embedding::null(2), 3, &FusionWeights::default()).is_empty());
    }

    #[test]
    fn conflict_density_and_removal() {
        let mut g = MemoryGraph::new();
        let t = tagger();
        assert_eq!(g.conflict_density(), 0.0);
        let labels: Vec<String> = (0..11).map(|i| format!("n{i}")).collect();
        for l in &labels {
            g.upsert_concept(concept(l, &[1.0], 0.5), Timestamp(0), &t);
        }
        for i in 1..11 {
            let p = if i <= 3 { Predicate::Contradicts } else { Predicate::RelatedTo };
            g.add_or_strengthen(&id("n0"), &id(&labels[i]), p, 0.1, Timestamp(0)).unwrap();
        }
        assert!((g.conflict_density() - 0.3).abs() < 1e-12);
        assert_eq!(g.remove_concept(&id("n0")).unwrap(), 10);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.stats().contradicts, 0);
        assert!(matches!(g.remove_concept(&id("n0")), Err(ScmError::NotFound(_))));
        let mut p = concept("self", &[1.0], 0.95);
        p.protected = true;
        g.upsert_concept(p.clone(), Timestamp(0), &t);
        assert!(matches!(g.remove_concept(&p.id), Err(ScmError::PermissionDenied(_))));
        g.check_integrity().unwrap();
    }

    #[test]
    fn self_loop_removal_counts_once() {
        let mut g = MemoryGraph::new();
        let t = tagger();
        g.upsert_concept(concept("a", &[1.0], 0.5), Timestamp(0), &t);
        g.add_or_strengthen(&id("a"), &id("a"), Predicate::RelatedTo, 0.1, Timestamp(0)).unwrap();
        assert_eq!(g.remove_concept(&id("a")).unwrap(), 1);
        g.check_integrity().unwrap();
    }
}
