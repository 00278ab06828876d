//! Runtime settings read from environment variables.

use std::path::PathBuf;
use std::time::Duration;

use crate::clock::Clock;
use crate::encoding::{Embedder, Encoder, Extractor, ExtractorKind, RemoteEmbedder, RemoteExtractor};
use crate::error::{Result, ScmError};
use crate::persistence::DEFAULT_SNAPSHOT_PATH;

pub const DEFAULT_PORT: u16 = 8750;
pub const DEFAULT_EMBEDDING_DIM: usize = 384;

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub extractor_kind: ExtractorKind,
    pub extractor_url: Option<String>,
    pub embedder_url: Option<String>,
    pub embedding_dim: usize,
    pub request_timeout: Duration,
    pub snapshot_path: PathBuf,
    pub port: u16,
    pub simulated_clock: bool,
    pub audit_log_path: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            extractor_kind: ExtractorKind::RuleBased,
            extractor_url: None,
            embedder_url: None,
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            request_timeout: crate::encoding::DEFAULT_TIMEOUT,
            snapshot_path: PathBuf::from(DEFAULT_SNAPSHOT_PATH),
            port: DEFAULT_PORT,
            simulated_clock: false,
            audit_log_path: None,
        }
    }
}

fn parse_bool(key: &str, raw: &str) -> Result<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" | "" => Ok(false),
        _ => Err(ScmError::Config(format!("{key}: expected true/false, got '{raw}'"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| ScmError::Config(format!("{key}: cannot parse '{raw}'")))
}

impl Settings {
    pub fn from_env() -> Result<Self> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Reads settings through `get`; unset or empty keys keep their defaults.
    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let get = |k: &str| get(k).filter(|v| !v.trim().is_empty());
        let mut s = Settings::default();
        if let Some(v) = get("EXTRACTOR_KIND") {
            s.extractor_kind = ExtractorKind::parse(&v)?;
        }
        s.extractor_url = get("EXTRACTOR_URL");
        s.embedder_url = get("EMBEDDER_URL");
        if let Some(v) = get("EMBEDDING_DIM") {
            s.embedding_dim = parse_num("EMBEDDING_DIM", &v)?;
            if s.embedding_dim == 0 {
                return Err(ScmError::Config("EMBEDDING_DIM must be positive".into()));
            }
        }
        if let Some(v) = get("REQUEST_TIMEOUT_SECS") {
            let secs: f64 = parse_num("REQUEST_TIMEOUT_SECS", &v)?;
            if !(secs > 0.0) || !secs.is_finite() {
                return Err(ScmError::Config("REQUEST_TIMEOUT_SECS must be positive".into()));
            }
            s.request_timeout = Duration::from_secs_f64(secs);
        }
        if let Some(v) = get("SCM_SNAPSHOT_PATH") {
            s.snapshot_path = PathBuf::from(v);
        }
        if let Some(v) = get("SCM_PORT") {
            s.port = parse_num("SCM_PORT", &v)?;
        }
        if let Some(v) = get("SCM_SIMULATED_CLOCK") {
            s.simulated_clock = parse_bool("SCM_SIMULATED_CLOCK", &v)?;
        }
        s.audit_log_path = get("SCM_AUDIT_LOG_PATH").map(PathBuf::from);
        if s.extractor_kind == ExtractorKind::RemoteLlm && s.extractor_url.is_none() {
            return Err(ScmError::Config("EXTRACTOR_KIND=remote_llm requires EXTRACTOR_URL".into()));
        }
        Ok(s)
    }

    pub fn encoder(&self) -> Encoder {
        let extractor = match (&self.extractor_kind, &self.extractor_url) {
            (ExtractorKind::RemoteLlm, Some(url)) => {
                Extractor::remote(RemoteExtractor::new(url.clone(), self.request_timeout))
            }
            _ => Extractor::rule_based(),
        };
        let embedder = match &self.embedder_url {
            Some(url) => Embedder::with_remote(
                self.embedding_dim,
                RemoteEmbedder::new(url.clone(), self.embedding_dim, self.request_timeout),
            ),
            None => Embedder::hashing(self.embedding_dim),
        };
        Encoder { extractor, embedder }
    }

    pub fn clock(&self) -> Clock {
        if self.simulated_clock {
            Clock::simulated()
        } else {
            Clock::system()
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;

    fn lookup(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let map: HashMap<String, String> =
            pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |k| map.get(k).cloned()
    }

    #[test]
    fn defaults_when_unset() {
        let s = Settings::from_lookup(|_| None).unwrap();
        assert_eq!(s, Settings::default());
        assert_eq!(s.port, 8750);
        assert_eq!(s.snapshot_path, PathBuf::from("./scm_memory.json"));
    }

    #[test]
    fn parses_all_keys() {
        let s = Settings::from_lookup(lookup(&[
            ("EXTRACTOR_KIND", "remote_llm"),
            ("EXTRACTOR_URL", "http://x/extract"),
            ("EMBEDDER_URL", "http://x/embed"),
            ("EMBEDDING_DIM", "64"),
            ("REQUEST_TIMEOUT_SECS", "2.5"),
            ("SCM_SNAPSHOT_PATH", "/tmp/m.json"),
            ("SCM_PORT", "9000"),
            ("SCM_SIMULATED_CLOCK", "true"),
            ("SCM_AUDIT_LOG_PATH", "/tmp/audit.jsonl"),
        ]))
        .unwrap();
        assert_eq!(s.extractor_kind, ExtractorKind::RemoteLlm);
        assert_eq!(s.embedding_dim, 64);
        assert_eq!(s.request_timeout, Duration::from_millis(2500));
        assert_eq!(s.port, 9000);
        assert!(s.simulated_clock);
        assert_eq!(s.encoder().dim(), 64);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Settings::from_lookup(lookup(&[("SCM_PORT", "abc")])).is_err());
        assert!(Settings::from_lookup(lookup(&[("EMBEDDING_DIM", "0")])).is_err());
        assert!(Settings::from_lookup(lookup(&[("SCM_SIMULATED_CLOCK", "maybe")])).is_err());
        assert!(Settings::from_lookup(lookup(&[("EXTRACTOR_KIND", "remote_llm")])).is_err());
        assert!(Settings::from_lookup(lookup(&[("EXTRACTOR_KIND", "magic")])).is_err());
    }
}
