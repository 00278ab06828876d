//! Versioned single-file snapshots.
//!
//! The document is canonical JSON: object keys sorted, floats in shortest
//! round-trip form, so equal states serialize to equal bytes. Writes go to a
//! temporary file in the target directory and are renamed into place.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Result, SnapshotError};
use crate::model::{Concept, EngineConfig, Episode, Relation, Timestamp};
use crate::self_model::Counters;
use crate::valuation::SessionGoal;

pub const SNAPSHOT_VERSION: u64 = 1;
pub const DEFAULT_SNAPSHOT_PATH: &str = "./scm_memory.json";

/// Engine bookkeeping that is not part of the memory contents proper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeState {
    pub episode_seq: u64,
    pub clock_now: Timestamp,
    pub goal_pinned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemorySnapshot {
    pub version: u64,
    pub saved_at: Timestamp,
    pub config: EngineConfig,
    pub counters: Counters,
    pub concepts: Vec<Concept>,
    pub relations: Vec<Relation>,
    pub episodes: Vec<Episode>,
    pub last_sleep_time: Timestamp,
    pub goal: Option<SessionGoal>,
    pub runtime: RuntimeState,
}

fn sort_keys(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.sort_keys();
            for child in map.values_mut() {
                sort_keys(child);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(sort_keys),
        _ => {}
    }
}

impl MemorySnapshot {
    pub fn to_canonical_bytes(&self) -> std::result::Result<Vec<u8>, SnapshotError> {
        let mut value =
            serde_json::to_value(self).map_err(|e| SnapshotError::Malformed(e.to_string()))?;
        sort_keys(&mut value);
        let mut bytes =
            serde_json::to_vec_pretty(&value).map_err(|e| SnapshotError::Malformed(e.to_string()))?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, SnapshotError> {
        let value: Value = serde_json::from_slice(bytes).map_err(|e| {
            if e.is_eof() {
                SnapshotError::Integrity(format!("truncated document: {e}"))
            } else {
                SnapshotError::Malformed(e.to_string())
            }
        })?;
        let version = value
            .get("version")
            .and_then(Value::as_u64)
            .ok_or_else(|| SnapshotError::Malformed("missing numeric 'version'".into()))?;
        if version != SNAPSHOT_VERSION {
            return Err(SnapshotError::UnsupportedVersion { found: version, supported: SNAPSHOT_VERSION });
        }
        let snap: MemorySnapshot =
            serde_json::from_value(value).map_err(|e| SnapshotError::Malformed(e.to_string()))?;
        snap.validate()?;
        Ok(snap)
    }

    /// Checks every invariant a loaded state must satisfy.
    pub fn validate(&self) -> std::result::Result<(), SnapshotError> {
        let bad = |m: String| Err(SnapshotError::Integrity(m));
        self.config.validate().map_err(|e| SnapshotError::Integrity(e.to_string()))?;
        let dim = self.config.embedding_dim;

        let mut ids = BTreeSet::new();
        for c in &self.concepts {
            if !ids.insert(&c.id) {
                return bad(format!("duplicate concept id {}", c.id));
            }
            if c.embedding.dim() != dim {
                return bad(format!("concept {} has embedding dimension {}", c.id, c.embedding.dim()));
            }
            if !c.embedding.is_well_formed() {
                return bad(format!("concept {} has a non-normalized embedding", c.id));
            }
            if !c.value.is_valid() || !(0.0..=1.0).contains(&c.importance) {
                return bad(format!("concept {} has out-of-range values", c.id));
            }
            if c.last_access < c.created_at {
                return bad(format!("concept {} accessed before creation", c.id));
            }
        }

        let mut triples = BTreeSet::new();
        for r in &self.relations {
            if !ids.contains(&r.src) || !ids.contains(&r.dst) {
                return bad(format!("relation {} -> {} references a missing concept", r.src, r.dst));
            }
            if !(r.strength >= 0.0) || !r.strength.is_finite() {
                return bad(format!("relation {} -> {} has strength {}", r.src, r.dst, r.strength));
            }
            if !triples.insert((&r.src, &r.dst, r.predicate)) {
                return bad(format!("duplicate relation {} -> {} ({})", r.src, r.dst, r.predicate));
            }
        }

        let mut eids = BTreeSet::new();
        for ep in &self.episodes {
            if !eids.insert(&ep.eid) {
                return bad(format!("duplicate episode id {}", ep.eid));
            }
            if ep.concept_ids.is_empty() {
                return bad(format!("episode {} has no concepts", ep.eid));
            }
            if let Some(missing) = ep.concept_ids.iter().find(|id| !ids.contains(id)) {
                return bad(format!("episode {} references missing concept {missing}", ep.eid));
            }
        }
        if !self.config.ablation.wm_limit && self.episodes.len() > self.config.wm_capacity {
            return bad(format!(
                "{} episodes exceed working-memory capacity {}",
                self.episodes.len(),
                self.config.wm_capacity
            ));
        }
        if let Some(goal) = &self.goal {
            if goal.embedding.dim() != dim || !goal.embedding.is_well_formed() {
                return bad("goal embedding is malformed".into());
            }
        }
        Ok(())
    }
}

/// Writes `bytes` to `path` atomically. `write` fills the temporary file.
fn write_atomic<F>(path: &Path, write: F) -> std::result::Result<(), SnapshotError>
where
    F: FnOnce(&mut fs::File) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write(tmp.as_file_mut())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| SnapshotError::Io(e.error))?;
    Ok(())
}

/// Saves and returns the number of bytes written.
pub fn save(path: impl AsRef<Path>, snapshot: &MemorySnapshot) -> Result<usize> {
    let bytes = snapshot.to_canonical_bytes()?;
    write_atomic(path.as_ref(), |f| f.write_all(&bytes))?;
    Ok(bytes.len())
}

pub fn load(path: impl AsRef<Path>) -> Result<MemorySnapshot> {
    let path = path.as_ref();
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(SnapshotError::Missing(path.to_path_buf()).into())
        }
        Err(e) => return Err(SnapshotError::Io(e).into()),
    };
    Ok(MemorySnapshot::from_bytes(&bytes)?)
}
