//! Value dimensions and composite importance.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScmError};
use crate::model::{Concept, Embedding, TaggerWeights, ValueVector};

/// The conversational goal that task relevance is measured against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionGoal {
    pub text: String,
    pub embedding: Embedding,
}

/// 1 − max cosine against `memory`, clamped to [0, 1]. Empty memory is fully
/// novel.
pub fn novelty<'a>(e: &Embedding, memory: impl IntoIterator<Item = &'a Embedding>) -> Result<f64> {
    if e.is_null() {
        return Err(ScmError::InvalidArgument("novelty of the null embedding is undefined".into()));
    }
    let best = memory.into_iter().map(|m| e.cosine(m)).fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Ok(1.0);
    }
    Ok((1.0 - best).clamp(0.0, 1.0))
}

pub fn task_relevance(e: &Embedding, goal: Option<&SessionGoal>) -> f64 {
    match goal {
        Some(g) => e.cosine(&g.embedding),
        None => 0.0,
    }
}

pub fn repetition(access_count: u64, max_access_count: u64) -> Result<f64> {
    if access_count > max_access_count {
        return Err(ScmError::InvalidArgument(format!(
            "access count {access_count} exceeds maximum {max_access_count}"
        )));
    }
    Ok(access_count as f64 / (max_access_count as f64 + 1.0))
}

/// Weighted sum with |emotional| and rectified task, clamped to [0, 1].
pub fn composite_importance(v: &ValueVector, w: &TaggerWeights) -> f64 {
    let raw = w.novelty * v.novelty
        + w.emotional * v.emotional.abs()
        + w.task * v.task.max(0.0)
        + w.repetition * v.repetition;
    raw.clamp(0.0, 1.0)
}

/// Turns value vectors into importance scores. In uniform mode every score is
/// 0.5 regardless of content.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tagger {
    pub weights: TaggerWeights,
    pub uniform: bool,
}

pub const UNIFORM_IMPORTANCE: f64 = 0.5;

impl Tagger {
    pub fn new(weights: TaggerWeights) -> Self {
        Tagger { weights, uniform: false }
    }

    pub fn uniform(weights: TaggerWeights) -> Self {
        Tagger { weights, uniform: true }
    }

    /// The value vector actually stored. Uniform mode flattens it so the
    /// importance invariant still holds.
    pub fn tag(&self, v: ValueVector) -> (ValueVector, f64) {
        if self.uniform {
            let flat = ValueVector::uniform(UNIFORM_IMPORTANCE);
            return (flat, UNIFORM_IMPORTANCE);
        }
        (v, composite_importance(&v, &self.weights))
    }

    pub fn importance(&self, v: &ValueVector) -> f64 {
        self.tag(*v).1
    }

    /// Refreshes the repetition dimension and importance after an access-count
    /// change. Protected concepts keep their pinned score.
    pub fn refresh(&self, c: &mut Concept, max_access_count: u64) {
        if c.protected || self.uniform {
            return;
        }
        let max = max_access_count.max(c.access_count);
        c.value.repetition = c.access_count as f64 / (max as f64 + 1.0);
        c.importance = composite_importance(&c.value, &self.weights);
    }
}
