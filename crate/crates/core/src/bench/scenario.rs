//! Scripted dialogues and synthetic populations, stored as JSON under `data/`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScmError};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub query: String,
    pub expected: String,
}

/// Low-value filler with importance drawn uniformly from `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub count: usize,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImportantSpec {
    pub count: usize,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub turns: Vec<String>,
    #[serde(default)]
    pub probes: Vec<Probe>,
    #[serde(default)]
    pub important: Option<ImportantSpec>,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub aging_hours: f64,
}

const BUILTIN: &[(&str, &str)] = &[
    ("retention5", include_str!("../../data/retention5.json")),
    ("retention10", include_str!("../../data/retention10.json")),
    ("evaluation", include_str!("../../data/evaluation.json")),
    ("forgetting", include_str!("../../data/forgetting.json")),
    ("consolidation", include_str!("../../data/consolidation.json")),
];

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)
            .map_err(|e| ScmError::InvalidArgument(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let (_, text) = BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| ScmError::NotFound(format!("scenario '{name}'")))?;
        Self::from_json(text)
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(n, _)| *n)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ScmError::InvalidArgument(format!("scenario {}: {m}", self.name)));
        if self.version != SCENARIO_VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        if self.turns.iter().any(|t| t.trim().is_empty()) {
            return bad("empty turn".into());
        }
        if let Some(n) = self.noise {
            if !(0.0 <= n.min && n.min <= n.max && n.max <= 1.0) {
                return bad(format!("noise range [{}, {}]", n.min, n.max));
            }
        }
        if let Some(i) = self.important {
            if !(0.0..=1.0).contains(&i.importance) {
                return bad(format!("importance {}", i.importance));
            }
        }
        if !(self.aging_hours >= 0.0) || !self.aging_hours.is_finite() {
            return bad(format!("aging_hours {}", self.aging_hours));
        }
        Ok(())
    }

    pub fn noise_items(&self, seed: u64) -> Vec<(String, f64)> {
        self.noise.map(|n| noise_items(n, seed, "noise item", 0)).unwrap_or_default()
    }

    pub fn important_items(&self) -> Vec<(String, f64)> {
        match self.important {
            Some(i) => (0..i.count).map(|k| (format!("key fact {k:02}"), i.importance)).collect(),
            None => Vec::new(),
        }
    }
}

/// Labels `"{prefix} {offset + i}"` with seeded uniform importances.
pub fn noise_items(spec: NoiseSpec, seed: u64, prefix: &str, offset: usize) -> Vec<(String, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..spec.count)
        .map(|i| {
            let imp = if spec.max > spec.min { rng.random_range(spec.min..=spec.max) } else { spec.min };
            (format!("{prefix} {:03}", offset + i), imp)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for name in Scenario::builtin_names() {
            Scenario::builtin(name).unwrap();
        }
        let r5 = Scenario::builtin("retention5").unwrap();
        let r10 = Scenario::builtin("retention10").unwrap();
        assert_eq!((r5.turns.len(), r5.probes.len()), (5, 11));
        assert_eq!((r10.turns.len(), r10.probes.len()), (10, 22));
        assert_eq!(r10.turns[..5], r5.turns[..]);
    }

    #[test]
    fn noise_is_seeded_and_in_range() {
        let s = Scenario::builtin("forgetting").unwrap();
        let a = s.noise_items(7);
        assert_eq!(a, s.noise_items(7));
        assert_ne!(a, s.noise_items(8));
        assert_eq!(a.len(), 50);
        assert!(a.iter().all(|(_, i)| (0.02..=0.10).contains(i)));
    }

    #[test]
    fn rejects_bad_scenarios() {
        assert!(Scenario::from_json(r#"{"version":2,"name":"x"}"#).is_err());
        assert!(Scenario::from_json(r#"{"version":1,"name":"x","noise":{"count":1,"min":0.5,"max":0.1}}"#).is_err());
        assert!(Scenario::from_json(r#"{"version":1,"name":"x","turns":[" "]}"#).is_err());
        assert!(Scenario::builtin("nope").is_err());
    }
}
