//! Acceptance report: one PASS/FAIL line per primary criterion. Exits
//! non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scm_core::bench::{self, GrowthPlan};
use scm_core::graph::MemoryGraph;
use scm_core::persistence;
use scm_core::sleep::{dream, hebbian, random_walk};
use scm_core::{
    make_concept_id, Concept, ConceptId, ConceptType, Embedding, EngineConfig, Episode, Predicate,
    Timestamp, ValueVector,
};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

type Check = fn() -> Result<Verdict, String>;

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn cfg() -> EngineConfig {
    EngineConfig::default()
}

fn suite_row(id: &str) -> Result<bench::TestOutcome, String> {
    bench::run_test(id, &cfg()).map_err(e)
}

fn capacity() -> Result<Verdict, String> {
    let o = suite_row("capacity")?;
    Ok(verdict(o.passed, o.detail))
}

fn retention() -> Result<Verdict, String> {
    let a = suite_row("retention5")?;
    let b = suite_row("retention10")?;
    Ok(verdict(a.passed && b.passed, format!("{} and {}", a.detail, b.detail)))
}

fn forgetting() -> Result<Verdict, String> {
    let o = suite_row("forgetting")?;
    Ok(verdict(o.passed, o.detail))
}

fn beta2() -> Result<Verdict, String> {
    let runs = bench::beta2_comparison(&cfg(), &[0.4, 0.2]).map_err(e)?;
    let (hi, lo) = (&runs[0].1, &runs[1].1);
    Ok(verdict(
        hi.removed_total() == 0 && lo.noise_removed >= 45,
        format!(
            "beta2=0.4 removed {} (want 0), beta2=0.2 removed {}/{} noise (want >= 45)",
            hi.removed_total(),
            lo.noise_removed,
            lo.noise_total
        ),
    ))
}

fn node(label: &str, importance: f64) -> Concept {
    Concept {
        id: make_concept_id(label, ConceptType::Abstract).unwrap(),
        label: label.into(),
        ctype: ConceptType::Abstract,
        description: String::new(),
        embedding: Embedding::null(4),
        value: ValueVector::uniform(importance),
        importance,
        created_at: Timestamp(0),
        last_access: Timestamp(0),
        access_count: 0,
        protected: false,
    }
}

fn episode(n: usize, ids: Vec<ConceptId>) -> Episode {
    Episode {
        eid: format!("ep-{n}"),
        timestamp: Timestamp(n as i64),
        concept_ids: ids,
        text: String::new(),
        value: ValueVector::uniform(0.5),
        importance: 0.5,
        last_access: Timestamp(n as i64),
        access_count: 0,
    }
}

fn consolidation_math() -> Result<Verdict, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (eta, alpha) = (0.1, 0.8);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let nodes: Vec<Concept> = (0..15).map(|i| node(&format!("n{i}"), rng.random())).collect();
        let mut g = MemoryGraph::new();
        for c in &nodes {
            g.insert_concept(c.clone());
        }
        let mut oracle: BTreeMap<(ConceptId, ConceptId), f64> = BTreeMap::new();
        while g.edge_count() < 50 {
            let (a, b) = (&nodes[rng.random_range(0..15)].id, &nodes[rng.random_range(0..15)].id);
            if a == b {
                continue;
            }
            let s: f64 = rng.random_range(0.0..2.0);
            g.add_or_strengthen(a, b, Predicate::RelatedTo, s, Timestamp(0)).map_err(e)?;
            *oracle.entry((a.clone(), b.clone())).or_insert(0.0) += s;
        }
        let episodes: Vec<Episode> = (0..5)
            .map(|n| {
                let k = rng.random_range(1..5);
                episode(n, (0..k).map(|_| nodes[rng.random_range(0..15)].id.clone()).collect())
            })
            .collect();
        let imp: BTreeMap<&ConceptId, f64> = nodes.iter().map(|c| (&c.id, c.importance)).collect();
        for ep in &episodes {
            let mut ids: Vec<&ConceptId> = Vec::new();
            for id in &ep.concept_ids {
                if !ids.contains(&id) {
                    ids.push(id);
                }
            }
            for i in 0..ids.len() {
                for j in i + 1..ids.len() {
                    *oracle.entry((ids[i].clone(), ids[j].clone())).or_insert(0.0) += eta * imp[ids[i]] * imp[ids[j]];
                }
            }
        }
        hebbian(&mut g, &episodes, eta, Timestamp(1));
        g.downscale(alpha);
        if g.edge_count() != oracle.len() {
            return Ok(verdict(false, format!("edge count {} vs oracle {}", g.edge_count(), oracle.len())));
        }
        for r in g.relations() {
            worst = worst.max((r.strength - oracle[&(r.src.clone(), r.dst.clone())] * alpha).abs());
        }
    }

    let mut order_ok = 0;
    for _ in 0..1000 {
        let hub = node("hub", 0.5);
        let mut g = MemoryGraph::new();
        g.insert_concept(hub.clone());
        let n = rng.random_range(2..30);
        for i in 0..n {
            let c = node(&format!("t{i}"), 0.5);
            g.insert_concept(c.clone());
            g.add_or_strengthen(&hub.id, &c.id, Predicate::RelatedTo, rng.random_range(0.0..5.0), Timestamp(0))
                .map_err(e)?;
        }
        let before: Vec<f64> = g.relations().map(|r| r.strength).collect();
        g.downscale(rng.random_range(0.05..1.0));
        let after: Vec<f64> = g.relations().map(|r| r.strength).collect();
        let preserved = (0..n).all(|i| {
            (0..n).all(|j| before[i].partial_cmp(&before[j]) == after[i].partial_cmp(&after[j]))
        });
        order_ok += preserved as usize;
    }
    Ok(verdict(
        worst <= 1e-12 && order_ok == 1000,
        format!("max deviation {worst:.1e} over 200 graphs of 50 edges, order preserved on {order_ok}/1000"),
    ))
}

fn rem_law() -> Result<Verdict, String> {
    let mut g = MemoryGraph::new();
    let hub = node("hub", 0.5);
    g.insert_concept(hub.clone());
    let mut targets = Vec::new();
    for (label, s) in [("a", 2.0), ("b", 1.0), ("c", 1.0)] {
        let c = node(label, 0.5);
        g.insert_concept(c.clone());
        g.add_or_strengthen(&hub.id, &c.id, Predicate::RelatedTo, s, Timestamp(0)).map_err(e)?;
        targets.push(c.id);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = 100_000;
    let mut counts = [0usize; 3];
    for _ in 0..n {
        let path = random_walk(&g, &hub.id, 1, &mut rng);
        if let Some(i) = targets.iter().position(|t| path.get(1) == Some(t)) {
            counts[i] += 1;
        }
    }
    let freqs: Vec<f64> = counts.iter().map(|c| *c as f64 / n as f64).collect();
    let law_ok = freqs.iter().zip([0.5, 0.25, 0.25]).all(|(f, p)| (f - p).abs() <= 0.01);

    let mut g = MemoryGraph::new();
    let (h, x, k) = (node("healthcare", 0.9), node("exercise", 0.6), node("hiking", 0.7));
    for c in [&h, &x, &k] {
        g.insert_concept(c.clone());
    }
    g.add_or_strengthen(&h.id, &x.id, Predicate::RelatedTo, 0.3, Timestamp(0)).map_err(e)?;
    g.add_or_strengthen(&x.id, &k.id, Predicate::RelatedTo, 0.2, Timestamp(0)).map_err(e)?;
    dream(&mut g, &[h.id.clone()], &cfg(), &mut ChaCha8Rng::seed_from_u64(1), Timestamp(1));
    let linked = g.relation(&h.id, &k.id, Predicate::RelatedTo).is_some();
    Ok(verdict(
        law_ok && linked,
        format!(
            "frequencies {:.4}/{:.4}/{:.4} over {n} steps, healthcare->hiking edge created: {linked}",
            freqs[0], freqs[1], freqs[2]
        ),
    ))
}

fn traversal() -> Result<Verdict, String> {
    let o = suite_row("traversal")?;
    Ok(verdict(o.passed, o.detail))
}

fn latency() -> Result<Verdict, String> {
    let curve = bench::latency_curve(&cfg(), &bench::suite::LATENCY_SIZES, bench::suite::LATENCY_QUERIES).map_err(e)?;
    let first = &curve[0];
    let last = &curve[curve.len() - 1];
    let p99 = curve.iter().map(|p| p.p99_us).fold(0.0, f64::max);
    let ok = first.mean_us < 100.0 && last.mean_us < 1000.0 && p99 < 5000.0 && last.mean_us >= first.mean_us;
    let shown: Vec<String> = curve.iter().map(|p| format!("{}:{:.0}us", p.size, p.mean_us)).collect();
    Ok(verdict(ok, format!("means {} , worst p99 {:.0} us", shown.join(" "), p99)))
}

fn scm(args: &[&str]) -> Result<std::process::Output, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scm"));
    for key in ["EXTRACTOR_KIND", "EXTRACTOR_URL", "EMBEDDER_URL", "EMBEDDING_DIM", "SCM_SIMULATED_CLOCK"] {
        cmd.env_remove(key);
    }
    cmd.args(args).output().map_err(e)
}

fn persistence_across_processes() -> Result<Verdict, String> {
    let dir = tempfile::tempdir().map_err(e)?;
    let path = dir.path().join("memory.json");
    let p = path.to_str().ok_or("non-utf8 temp path")?;
    for fact in ["I live in Mumbai", "I work as a nurse", "I love hiking"] {
        let out = scm(&["ingest", fact, "--snapshot", p])?;
        if !out.status.success() {
            return Ok(verdict(false, format!("ingest failed: {}", String::from_utf8_lossy(&out.stderr))));
        }
    }
    let stored = persistence::load(&path).map_err(e)?;
    let mut recovered = 0;
    for (q, want) in [("where do I live", "Mumbai"), ("what do I work as", "nurse"), ("do I go hiking", "hiking")] {
        let out = scm(&["query", q, "--snapshot", p, "--json"])?;
        let items: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(e)?;
        let original = stored.concepts.iter().find(|c| c.label == want);
        let returned = items
            .as_array()
            .and_then(|a| a.iter().find(|i| i["hit"]["label"] == want))
            .map(|i| i["concept"].clone());
        if let (Some(o), Some(r)) = (original, returned) {
            if serde_json::to_value(o).map_err(e)? == r {
                recovered += 1;
            }
        }
    }
    Ok(verdict(recovered == 3, format!("{recovered}/3 concepts recovered field-equal in a new process")))
}

fn growth() -> Result<Verdict, String> {
    let off = bench::run_growth(&GrowthPlan::new(20, false), &cfg()).map_err(e)?;
    let on = bench::run_growth(&GrowthPlan::new(20, true), &cfg()).map_err(e)?;
    let (a, b) = (bench::growth_check(&off, false), bench::growth_check(&on, true));
    Ok(verdict(a.passed && b.passed, format!("off: {}; on: {}", a.detail, b.detail)))
}

fn baselines() -> Result<Verdict, String> {
    let full = bench::run_baseline("full", &cfg()).map_err(e)?;
    let mut ok = full.recalled == full.probes;
    let mut parts = vec![format!("full {}/{} size {}", full.recalled, full.probes, full.ltm_size)];
    for kind in ["fifo", "vector", "noforget"] {
        let o = bench::run_baseline(kind, &cfg()).map_err(e)?;
        let c = bench::baseline_check(&o, &full);
        ok &= c.passed;
        parts.push(format!("{kind}: {}", c.detail));
    }
    Ok(verdict(ok, parts.join("; ")))
}

fn ablations() -> Result<Verdict, String> {
    let full = bench::run_baseline("full", &cfg()).map_err(e)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for comp in ["forget", "tagger", "wm_limit", "self", "rem"] {
        let o = bench::run_ablation(comp, &cfg()).map_err(e)?;
        let c = bench::ablation_check(comp, &o, &full);
        ok &= c.passed;
        parts.push(format!("{comp}: {} [{}]", c.detail, if c.passed { "ok" } else { "no" }));
    }
    Ok(verdict(ok, parts.join("; ")))
}

fn determinism() -> Result<Verdict, String> {
    let dir = tempfile::tempdir().map_err(e)?;
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        scm(&["bench", "--suite", "all", "--runs", "1", "--csv", path.to_str().unwrap()])?;
        outputs.push(std::fs::read(&path).map_err(e)?);
    }
    let rows = outputs[0].iter().filter(|b| **b == b'\n').count();
    Ok(verdict(
        rows > 1 && outputs[0] == outputs[1],
        format!("{} CSV lines, byte-identical: {}", rows, outputs[0] == outputs[1]),
    ))
}

fn main() {
    let criteria: [(&str, Duration, Check); 13] = [
        ("Working-memory capacity", Duration::from_secs(1), capacity),
        ("Retention", Duration::from_secs(5), retention),
        ("Forgetting effectiveness", Duration::from_secs(5), forgetting),
        ("Retention-weight regression", Duration::from_secs(30), beta2),
        ("Consolidation mathematics", Duration::from_secs(60), consolidation_math),
        ("Dream transition law", Duration::from_secs(60), rem_law),
        ("Graph traversal", Duration::from_secs(5), traversal),
        ("Latency", Duration::from_secs(60), latency),
        ("Persistence", Duration::from_secs(60), persistence_across_processes),
        ("Growth plateau", Duration::from_secs(30), growth),
        ("Baselines", Duration::from_secs(60), baselines),
        ("Ablations", Duration::from_secs(60), ablations),
        ("Determinism", Duration::from_secs(120), determinism),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let t = Instant::now();
        let result = check();
        let took = t.elapsed();
        let (passed, detail) = match result {
            Ok(v) => (v.passed && took <= budget, v.detail),
            Err(err) => (false, format!("error: {err}")),
        };
        if !passed {
            failed += 1;
        }
        println!(
            "{} {name}: {detail} ({:.2} s, budget {} s)",
            if passed { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{}/{} primary criteria passing", 13 - failed, 13);
    if failed > 0 {
        std::process::exit(1);
    }
}
