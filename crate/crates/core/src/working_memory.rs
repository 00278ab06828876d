//! Capacity-limited FIFO buffer of recent episodes.

use std::collections::VecDeque;

use crate::error::{Result, ScmError};
use crate::model::{Episode, Timestamp};
use crate::valuation::Tagger;

#[derive(Debug, Clone, PartialEq)]
pub struct WorkingMemory {
    episodes: VecDeque<Episode>,
    capacity: Option<usize>,
}

impl WorkingMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "working memory capacity must be positive");
        WorkingMemory { episodes: VecDeque::with_capacity(capacity + 1), capacity: Some(capacity) }
    }

    /// No capacity limit; used for ablation runs.
    pub fn unbounded() -> Self {
        WorkingMemory { episodes: VecDeque::new(), capacity: None }
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    /// Oldest first.
    pub fn episodes(&self) -> impl Iterator<Item = &Episode> {
        self.episodes.iter()
    }

    pub fn get(&self, eid: &str) -> Option<&Episode> {
        self.episodes.iter().find(|e| e.eid == eid)
    }

    /// Appends `ep`, returning the displaced oldest episode when over capacity.
    pub fn admit(&mut self, ep: Episode) -> Option<Episode> {
        self.episodes.push_back(ep);
        match self.capacity {
            Some(cap) if self.episodes.len() > cap => self.episodes.pop_front(),
            _ => None,
        }
    }

    pub fn touch(&mut self, eid: &str, now: Timestamp, tagger: &Tagger) -> Result<Episode> {
        let idx = self
            .episodes
            .iter()
            .position(|e| e.eid == eid)
            .ok_or_else(|| ScmError::NotFound(format!("episode {eid}")))?;
        {
            let ep = &mut self.episodes[idx];
            ep.last_access = ep.last_access.max(now);
            ep.access_count += 1;
        }
        let max = self.episodes.iter().map(|e| e.access_count).max().unwrap_or(0);
        let ep = &mut self.episodes[idx];
        ep.value.repetition = ep.access_count as f64 / (max as f64 + 1.0);
        let (value, importance) = tagger.tag(ep.value);
        ep.value = value;
        ep.importance = importance;
        Ok(ep.clone())
    }

    /// Shannon entropy of the importance distribution, normalized by ln(size).
    pub fn entropy(&self) -> f64 {
        normalized_entropy(self.episodes.iter().map(|e| e.importance))
    }

    /// Empties the buffer, returning its contents oldest first.
    pub fn drain(&mut self) -> Vec<Episode> {
        self.episodes.drain(..).collect()
    }

    /// Rebuilds a buffer from stored episodes (oldest first).
    pub fn restore(capacity: Option<usize>, episodes: Vec<Episode>) -> Result<Self> {
        if let Some(cap) = capacity {
            if episodes.len() > cap {
                return Err(ScmError::InvalidArgument(format!(
                    "{} episodes exceed capacity {cap}",
                    episodes.len()
                )));
            }
        }
        Ok(WorkingMemory { episodes: episodes.into(), capacity })
    }
}

pub fn normalized_entropy(weights: impl IntoIterator<Item = f64>) -> f64 {
    let w: Vec<f64> = weights.into_iter().map(|x| x.max(0.0)).collect();
    let total: f64 = w.iter().sum();
    if w.len() <= 1 || total <= 0.0 {
        return 0.0;
    }
    let h: f64 = w
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| {
            let p = x / total;
            -p * p.ln()
        })
        .sum();
    (h / (w.len() as f64).ln()).clamp(0.0, 1.0)
}
