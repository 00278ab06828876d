//! Baseline comparison, component ablations, the growth simulation and the
//! retention-weight comparison.

use serde::Serialize;

use crate::clock::Clock;
use crate::engine::Engine;
use crate::error::{Result, ScmError};
use crate::model::{Ablation, ConceptType, EngineConfig};

use super::backends::{EngineBackend, FifoBackend, MemoryBackend, VectorBackend};
use super::scenario::{noise_items, NoiseSpec, Scenario};

pub const BACKENDS: [&str; 4] = ["fifo", "vector", "noforget", "full"];
pub const COMPONENTS: [&str; 6] = ["wm_limit", "tagger", "nrem", "rem", "forget", "self"];
pub const PROBE_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalOutcome {
    pub system: String,
    pub recalled: usize,
    pub probes: usize,
    pub ltm_size: usize,
    pub noise_retained: usize,
    pub noise_total: usize,
}

impl EvalOutcome {
    pub fn recall(&self) -> f64 {
        if self.probes == 0 {
            0.0
        } else {
            self.recalled as f64 / self.probes as f64
        }
    }
}

/// Noise first, then aging, then the dialogue, one sleep, then the probes.
pub fn evaluate(backend: &mut dyn MemoryBackend, scenario: &Scenario, seed: u64) -> Result<EvalOutcome> {
    let noise = scenario.noise_items(seed);
    for (label, imp) in &noise {
        backend.inject_noise(label, *imp)?;
    }
    backend.advance_hours(scenario.aging_hours)?;
    for turn in &scenario.turns {
        backend.ingest(turn)?;
    }
    backend.consolidate()?;
    let mut recalled = 0;
    for p in &scenario.probes {
        if backend.recalls(p, PROBE_K)? {
            recalled += 1;
        }
    }
    Ok(EvalOutcome {
        system: backend.name().to_string(),
        recalled,
        probes: scenario.probes.len(),
        ltm_size: backend.ltm_size(),
        noise_retained: noise.iter().filter(|(l, _)| backend.retains(l)).count(),
        noise_total: noise.len(),
    })
}

pub fn make_backend(kind: &str, config: &EngineConfig) -> Result<Box<dyn MemoryBackend>> {
    Ok(match kind {
        "fifo" => Box::new(FifoBackend::new(config.wm_capacity)),
        "vector" => Box::new(VectorBackend::new(config.embedding_dim)),
        "noforget" => Box::new(EngineBackend::new("noforget", config.clone(), Ablation::parse("forget")?)?),
        "full" => Box::new(EngineBackend::new("full", config.clone(), Ablation::none())?),
        other => return Err(ScmError::InvalidArgument(format!("unknown backend '{other}'"))),
    })
}

pub fn run_baseline(kind: &str, config: &EngineConfig) -> Result<EvalOutcome> {
    let scenario = Scenario::builtin("evaluation")?;
    let mut backend = make_backend(kind, config)?;
    evaluate(backend.as_mut(), &scenario, config.rng_seed)
}

pub fn run_ablation(component: &str, config: &EngineConfig) -> Result<EvalOutcome> {
    let scenario = Scenario::builtin("evaluation")?;
    let ablation = Ablation::parse(component)?;
    let mut backend = EngineBackend::new(format!("no {component}"), config.clone(), ablation)?;
    evaluate(&mut backend, &scenario, config.rng_seed)
}

/// How the important concept of each growth cycle is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ImportantSource {
    /// The same fact, stated again every cycle.
    Repeated,
    /// A different fact every cycle.
    Fresh,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthPlan {
    pub cycles: usize,
    pub forgetting: bool,
    pub important: ImportantSource,
    /// Low-value concepts added per cycle, used round-robin.
    pub noise_schedule: Vec<usize>,
    pub noise_range: (f64, f64),
    pub aging_hours: f64,
}

impl GrowthPlan {
    pub fn new(cycles: usize, forgetting: bool) -> Self {
        GrowthPlan {
            cycles,
            forgetting,
            important: ImportantSource::Repeated,
            noise_schedule: vec![6, 5],
            noise_range: (0.02, 0.10),
            aging_hours: 336.0,
        }
    }
}

const HOBBIES: [&str; 24] = [
    "archery", "baking", "birdwatching", "bouldering", "calligraphy", "canoeing", "ceramics",
    "crochet", "fencing", "gliding", "juggling", "kayaking", "knitting", "origami", "pottery",
    "rowing", "sailing", "sketching", "skiing", "snorkeling", "surfing", "tennis", "weaving",
    "woodworking",
];

/// Unprotected concept count after each cycle.
pub fn run_growth(plan: &GrowthPlan, config: &EngineConfig) -> Result<Vec<usize>> {
    if plan.cycles == 0 {
        return Err(ScmError::InvalidArgument("cycles must be at least 1".into()));
    }
    if plan.noise_schedule.is_empty() {
        return Err(ScmError::InvalidArgument("noise schedule is empty".into()));
    }
    let mut cfg = config.clone();
    cfg.auto_sleep = false;
    cfg.ablation.forget = !plan.forgetting;
    let mut engine = Engine::new(cfg, Clock::simulated())?;
    let mut series = Vec::with_capacity(plan.cycles);
    let mut offset = 0;
    for cycle in 0..plan.cycles {
        let text = match plan.important {
            ImportantSource::Repeated => "My name is Asha".to_string(),
            ImportantSource::Fresh => format!("I enjoy {}", HOBBIES[cycle % HOBBIES.len()]),
        };
        engine.process_message(&text)?;
        let count = plan.noise_schedule[cycle % plan.noise_schedule.len()];
        let spec = NoiseSpec { count, min: plan.noise_range.0, max: plan.noise_range.1 };
        for (label, imp) in noise_items(spec, config.rng_seed ^ cycle as u64, "filler", offset) {
            engine.inject_concept(&label, ConceptType::Fact, imp)?;
        }
        offset += count;
        engine.advance_clock(plan.aging_hours)?;
        engine.sleep()?;
        series.push(engine.ltm_size());
    }
    Ok(series)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForgettingOutcome {
    pub important_retained: usize,
    pub important_total: usize,
    pub noise_removed: usize,
    pub noise_total: usize,
    pub theta_f: f64,
    pub ltm_size: usize,
}

impl ForgettingOutcome {
    pub fn removed_total(&self) -> usize {
        self.noise_removed + (self.important_total - self.important_retained)
    }
}

/// Important concepts are touched after aging, noise is left alone, then one
/// forced sleep.
pub fn run_forgetting(scenario: &Scenario, config: &EngineConfig) -> Result<ForgettingOutcome> {
    let mut cfg = config.clone();
    cfg.auto_sleep = false;
    let mut engine = Engine::new(cfg, Clock::simulated())?;
    let important = scenario.important_items();
    let noise = scenario.noise_items(config.rng_seed);
    let mut important_ids = Vec::new();
    for (label, imp) in &important {
        important_ids.push(engine.inject_concept(label, ConceptType::Fact, *imp)?);
    }
    for (label, imp) in &noise {
        engine.inject_concept(label, ConceptType::Fact, *imp)?;
    }
    engine.advance_clock(scenario.aging_hours)?;
    for id in &important_ids {
        engine.touch_concept(id)?;
    }
    let report = engine.sleep()?;
    let g = engine.graph();
    Ok(ForgettingOutcome {
        important_retained: important_ids.iter().filter(|id| g.contains(id)).count(),
        important_total: important.len(),
        noise_removed: noise.iter().filter(|(l, _)| g.ids_for_label(l).next().is_none()).count(),
        noise_total: noise.len(),
        theta_f: report.theta_f,
        ltm_size: engine.ltm_size(),
    })
}

/// The forgetting scenario under each retention weighting.
pub fn beta2_comparison(config: &EngineConfig, beta2s: &[f64]) -> Result<Vec<(f64, ForgettingOutcome)>> {
    let scenario = Scenario::builtin("forgetting")?;
    beta2s
        .iter()
        .map(|&b| Ok((b, run_forgetting(&scenario, &config.clone().with_beta2(b))?)))
        .collect()
}
