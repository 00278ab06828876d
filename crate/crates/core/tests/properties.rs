use std::collections::BTreeMap;

use proptest::prelude::*;
use scm_core::graph::MemoryGraph;
use scm_core::persistence::{MemorySnapshot, RuntimeState, SNAPSHOT_VERSION};
use scm_core::self_model::Counters;
use scm_core::sleep::hebbian;
use scm_core::working_memory::WorkingMemory;
use scm_core::{
    make_concept_id, Concept, ConceptId, ConceptType, Embedding, EngineConfig, Episode, Predicate,
    Relation, Timestamp, ValueVector,
};

const DIM: usize = 16;

fn concept(i: usize, importance: f64, vec: &[f32], access: u64) -> Concept {
    Concept {
        id: make_concept_id(&format!("c{i}"), ConceptType::Fact).unwrap(),
        label: format!("c{i}"),
        ctype: ConceptType::Fact,
        description: String::new(),
        embedding: Embedding::normalized(vec.to_vec()),
        value: ValueVector::uniform(importance),
        importance,
        created_at: Timestamp(i as i64),
        last_access: Timestamp(i as i64 + 5),
        access_count: access,
        protected: false,
    }
}

fn episode(n: u64, ids: Vec<ConceptId>) -> Episode {
    Episode {
        eid: format!("ep-{n:06}"),
        timestamp: Timestamp(n as i64),
        concept_ids: ids,
        text: String::new(),
        value: ValueVector::uniform(0.5),
        importance: 0.5,
        last_access: Timestamp(n as i64),
        access_count: 0,
    }
}

fn arb_vec() -> impl Strategy<Value = Vec<f32>> {
    prop::collection::vec(-1.0f32..1.0, DIM)
}

fn arb_concepts(max: usize) -> impl Strategy<Value = Vec<Concept>> {
    prop::collection::vec((0.0f64..=1.0, arb_vec(), 0u64..20), 1..max).prop_map(|items| {
        items.into_iter().enumerate().map(|(i, (imp, v, a))| concept(i, imp, &v, a)).collect()
    })
}

fn graph_with_edges(concepts: &[Concept], edges: &[(usize, usize, f64)]) -> MemoryGraph {
    let mut g = MemoryGraph::new();
    for c in concepts {
        g.insert_concept(c.clone());
    }
    for &(a, b, s) in edges {
        let (a, b) = (&concepts[a % concepts.len()].id, &concepts[b % concepts.len()].id);
        g.add_or_strengthen(a, b, Predicate::RelatedTo, s, Timestamp(0)).unwrap();
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snapshot_round_trip(
        concepts in arb_concepts(500),
        edges in prop::collection::vec((0usize..500, 0usize..500, 0.0f64..3.0), 0..200),
    ) {
        let g = graph_with_edges(&concepts, &edges);
        let mut config = EngineConfig::default();
        config.embedding_dim = DIM;
        let ids: Vec<ConceptId> = concepts.iter().map(|c| c.id.clone()).collect();
        let snap = MemorySnapshot {
            version: SNAPSHOT_VERSION,
            saved_at: Timestamp(99),
            config,
            counters: Counters { messages_processed: 3, sleep_cycles_completed: 1, dreams_generated: 2 },
            concepts: g.concepts().cloned().collect(),
            relations: g.relations().cloned().collect(),
            episodes: vec![episode(0, ids[..ids.len().min(3)].to_vec())],
            last_sleep_time: Timestamp(7),
            goal: None,
            runtime: RuntimeState { episode_seq: 1, clock_now: Timestamp(99), goal_pinned: false },
        };
        let bytes = snap.to_canonical_bytes().unwrap();
        let back = MemorySnapshot::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &snap);
        prop_assert_eq!(back.to_canonical_bytes().unwrap(), bytes);
    }

    #[test]
    fn semantic_search_matches_brute_force(concepts in arb_concepts(60), q in arb_vec(), k in 1usize..20) {
        let g = graph_with_edges(&concepts, &[]);
        let q = Embedding::normalized(q);
        let mut oracle: Vec<&Concept> = concepts.iter().collect();
        oracle.sort_by(|a, b| {
            q.cosine(&b.embedding)
                .partial_cmp(&q.cosine(&a.embedding))
                .unwrap()
                .then(b.access_count.cmp(&a.access_count))
                .then(b.created_at.cmp(&a.created_at))
                .then(a.id.cmp(&b.id))
        });
        let want: Vec<ConceptId> = oracle.iter().take(k).map(|c| c.id.clone()).collect();
        let got: Vec<ConceptId> = g.semantic_search(&q, k).into_iter().map(|(id, _)| id).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn wm_keeps_the_newest_seven(ops in prop::collection::vec(1usize..4, 1..40)) {
        let mut wm = WorkingMemory::new(7);
        let id = make_concept_id("x", ConceptType::Fact).unwrap();
        let mut admitted = Vec::new();
        for (n, _) in ops.iter().enumerate() {
            let before: Vec<String> = wm.episodes().map(|e| e.eid.clone()).collect();
            let evicted = wm.admit(episode(n as u64, vec![id.clone()]));
            admitted.push(format!("ep-{n:06}"));
            prop_assert!(wm.len() <= 7);
            match evicted {
                Some(e) => {
                    prop_assert_eq!(before.len(), 7);
                    prop_assert_eq!(&e.eid, &before[0]);
                }
                None => prop_assert!(before.len() < 7),
            }
        }
        let kept: Vec<String> = wm.episodes().map(|e| e.eid.clone()).collect();
        let skip = admitted.len().saturating_sub(7);
        prop_assert_eq!(kept, admitted[skip..].to_vec());
        let e = wm.entropy();
        prop_assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn hebbian_then_downscale_matches_oracle(
        concepts in arb_concepts(20),
        edges in prop::collection::vec((0usize..20, 0usize..20, 0.0f64..2.0), 50),
        groups in prop::collection::vec(prop::collection::vec(0usize..20, 1..6), 1..8),
    ) {
        let mut g = graph_with_edges(&concepts, &edges);
        let imp: BTreeMap<ConceptId, f64> = concepts.iter().map(|c| (c.id.clone(), c.importance)).collect();
        let mut expected: BTreeMap<(ConceptId, ConceptId, Predicate), f64> = g
            .relations()
            .map(|r| ((r.src.clone(), r.dst.clone(), r.predicate), r.strength))
            .collect();
        let episodes: Vec<Episode> = groups
            .iter()
            .enumerate()
            .map(|(n, grp)| episode(n as u64, grp.iter().map(|i| concepts[i % concepts.len()].id.clone()).collect()))
            .collect();
        for ep in &episodes {
            let mut ids: Vec<&ConceptId> = Vec::new();
            for id in &ep.concept_ids {
                if !ids.contains(&id) {
                    ids.push(id);
                }
            }
            for i in 0..ids.len() {
                for j in i + 1..ids.len() {
                    let key = (ids[i].clone(), ids[j].clone(), Predicate::RelatedTo);
                    *expected.entry(key).or_insert(0.0) += 0.1 * imp[ids[i]] * imp[ids[j]];
                }
            }
        }
        hebbian(&mut g, &episodes, 0.1, Timestamp(1));
        g.downscale(0.8);
        prop_assert_eq!(g.edge_count(), expected.len());
        for r in g.relations() {
            let want = expected[&(r.src.clone(), r.dst.clone(), r.predicate)] * 0.8;
            prop_assert!((r.strength - want).abs() <= 1e-12, "{} vs {}", r.strength, want);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn downscale_preserves_order(
        strengths in prop::collection::vec(0.0f64..10.0, 2..40),
        alpha in 0.01f64..1.0,
    ) {
        let concepts: Vec<Concept> = (0..strengths.len() + 1).map(|i| concept(i, 0.5, &[1.0; DIM], 0)).collect();
        let edges: Vec<(usize, usize, f64)> = strengths.iter().enumerate().map(|(i, &s)| (0, i + 1, s)).collect();
        let mut g = graph_with_edges(&concepts, &edges);
        let before: Vec<Relation> = g.relations().cloned().collect();
        g.downscale(alpha);
        let after: Vec<Relation> = g.relations().cloned().collect();
        for i in 0..before.len() {
            for j in 0..before.len() {
                if before[i].strength < before[j].strength {
                    prop_assert!(after[i].strength < after[j].strength);
                }
                if before[i].strength == before[j].strength {
                    prop_assert_eq!(after[i].strength, after[j].strength);
                }
            }
        }
    }
}
