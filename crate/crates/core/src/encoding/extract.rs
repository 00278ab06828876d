//! Concept and relation extraction from raw utterances.
//!
//! The rule-based extractor is the default and the benchmark reference. Its
//! pattern table, tried per clause in this order (case-insensitive, first
//! match wins):
//!
//! | pattern              | concepts                                   | relations                         |
//! |----------------------|--------------------------------------------|-----------------------------------|
//! | `my name is X`       | (X, person, "user's name")                 |                                   |
//! | `i live in X`        | (X, location)                              | (user, related_to, X)             |
//! | `i work as/at X`     | (X, fact)                                  |                                   |
//! | `i like/love/enjoy X`| (X, preference, +hint)                     | (user, prefers, X)                |
//! | `i hate/dislike X`   | (not X, preference, -hint)                 | (user, prefers, not X)            |
//! | `X is Y`             | (X, fact), (Y, abstract)                   | (X, has_property, Y)              |
//!
//! Clauses are split on sentence punctuation and the word "and". A stance
//! flip on the same object adds `(new, contradicts, old)`. When no clause
//! matches, the whole utterance becomes a single `event` concept.

use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::sentiment::lexicon_score;
use crate::error::{Result, ScmError};
use crate::model::{make_concept_id, normalize_label, ConceptId, ConceptType, Predicate};

pub const USER_LABEL: &str = "user";
const FALLBACK_LABEL_CHARS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractorKind {
    #[default]
    RuleBased,
    RemoteLlm,
}

impl ExtractorKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rule_based" | "rules" | "rule" => Ok(ExtractorKind::RuleBased),
            "remote_llm" | "remote" | "llm" => Ok(ExtractorKind::RemoteLlm),
            other => Err(ScmError::Config(format!("unknown extractor kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedConcept {
    pub label: String,
    pub ctype: ConceptType,
    pub description: String,
    pub sentiment_hint: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedRelation {
    pub src_label: String,
    pub predicate: Predicate,
    pub dst_label: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub concepts: Vec<ExtractedConcept>,
    pub relations: Vec<ExtractedRelation>,
    /// Set when a remote extractor was configured but could not be used.
    #[serde(default)]
    pub degraded: bool,
}

impl ExtractionResult {
    fn push_concept(
        &mut self,
        label: &str,
        ctype: ConceptType,
        description: impl Into<String>,
        hint: Option<f64>,
    ) {
        let norm = normalize_label(label);
        if norm.is_empty() {
            return;
        }
        let dup = self
            .concepts
            .iter()
            .any(|c| c.ctype == ctype && normalize_label(&c.label) == norm);
        if !dup {
            self.concepts.push(ExtractedConcept {
                label: label.trim().to_string(),
                ctype,
                description: description.into(),
                sentiment_hint: hint,
            });
        }
    }

    fn push_relation(&mut self, src: &str, predicate: Predicate, dst: &str) {
        let rel = ExtractedRelation {
            src_label: src.trim().to_string(),
            predicate,
            dst_label: dst.trim().to_string(),
        };
        if !self.relations.contains(&rel) {
            self.relations.push(rel);
        }
    }

    fn has_concept(&self, label: &str, ctype: ConceptType) -> bool {
        let norm = normalize_label(label);
        self.concepts
            .iter()
            .any(|c| c.ctype == ctype && normalize_label(&c.label) == norm)
    }

    fn has_label(&self, label: &str) -> bool {
        let norm = normalize_label(label);
        self.concepts.iter().any(|c| normalize_label(&c.label) == norm)
    }
}

/// Read access to what long-term memory already holds, so extraction can
/// link to existing concepts.
pub trait ConceptLookup {
    fn contains_id(&self, id: &ConceptId) -> bool;
    fn contains_label(&self, label: &str) -> bool;
}

/// Lookup over an empty memory.
pub struct EmptyMemory;

impl ConceptLookup for EmptyMemory {
    fn contains_id(&self, _id: &ConceptId) -> bool {
        false
    }

    fn contains_label(&self, _label: &str) -> bool {
        false
    }
}

struct Patterns {
    clause_split: Regex,
    name: Regex,
    live: Regex,
    work: Regex,
    like: Regex,
    dislike: Regex,
    is: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        clause_split: Regex::new(r"(?i)[.!?;]+|\band\b").unwrap(),
        name: Regex::new(r"(?i)\bmy name is\s+(.+)$").unwrap(),
        live: Regex::new(r"(?i)\bi live in\s+(.+)$").unwrap(),
        work: Regex::new(r"(?i)\bi work (as|at)\s+(.+)$").unwrap(),
        like: Regex::new(r"(?i)\bi (like|love|enjoy)\s+(.+)$").unwrap(),
        dislike: Regex::new(r"(?i)\bi (hate|dislike)\s+(.+)$").unwrap(),
        is: Regex::new(r"(?i)^(.+?)\s+is\s+(.+)$").unwrap(),
    })
}

const PRONOUN_SUBJECTS: &[&str] = &[
    "it", "this", "that", "there", "he", "she", "they", "what", "who", "where", "when", "how",
    "which", "why", "here",
];

fn strip_prefixes<'a>(mut s: &'a str, prefixes: &[&str]) -> &'a str {
    loop {
        let lower = s.to_ascii_lowercase();
        match prefixes.iter().find(|p| lower.starts_with(*p)) {
            Some(p) => s = s[p.len()..].trim_start(),
            None => return s,
        }
    }
}

fn clean_object(raw: &str) -> String {
    let s = raw.trim().trim_end_matches(|c: char| !c.is_alphanumeric()).trim();
    strip_prefixes(s, &["a ", "an ", "the "]).trim().to_string()
}

fn clean_subject(raw: &str) -> String {
    let s = raw.trim().trim_start_matches(|c: char| !c.is_alphanumeric());
    strip_prefixes(s, &["my ", "the ", "a ", "an "]).trim().to_string()
}

pub fn negated_preference_label(object: &str) -> String {
    format!("not {object}")
}

/// Splits an utterance into clauses on sentence punctuation and "and".
pub fn split_clauses(text: &str) -> Vec<String> {
    patterns()
        .clause_split
        .split(text)
        .map(|c| c.trim().trim_matches(',').trim().to_string())
        .filter(|c| !c.is_empty())
        .collect()
}

fn preference_exists(label: &str, result: &ExtractionResult, memory: &dyn ConceptLookup) -> bool {
    if result.has_concept(label, ConceptType::Preference) {
        return true;
    }
    make_concept_id(label, ConceptType::Preference)
        .map(|id| memory.contains_id(&id))
        .unwrap_or(false)
}

fn extract_clause(clause: &str, out: &mut ExtractionResult, memory: &dyn ConceptLookup) -> bool {
    let p = patterns();

    if let Some(c) = p.name.captures(clause) {
        let name = clean_object(&c[1]);
        if name.is_empty() {
            return false;
        }
        out.push_concept(&name, ConceptType::Person, "user's name", None);
        return true;
    }

    if let Some(c) = p.live.captures(clause) {
        let place = clean_object(&c[1]);
        if place.is_empty() {
            return false;
        }
        out.push_concept(&place, ConceptType::Location, format!("i live in {place}"), None);
        out.push_concept(USER_LABEL, ConceptType::Person, "the user", None);
        out.push_relation(USER_LABEL, Predicate::RelatedTo, &place);
        return true;
    }

    if let Some(c) = p.work.captures(clause) {
        let what = clean_object(&c[2]);
        if what.is_empty() {
            return false;
        }
        let prep = c[1].to_ascii_lowercase();
        out.push_concept(&what, ConceptType::Fact, format!("i work {prep} {what}"), None);
        return true;
    }

    if let Some(c) = p.like.captures(clause) {
        let verb = c[1].to_ascii_lowercase();
        let object = clean_object(&c[2]);
        if object.is_empty() {
            return false;
        }
        let hint = lexicon_score(&verb);
        let opposite = negated_preference_label(&object);
        let flip = preference_exists(&opposite, out, memory);
        out.push_concept(&object, ConceptType::Preference, format!("i {verb} {object}"), hint);
        out.push_concept(USER_LABEL, ConceptType::Person, "the user", None);
        out.push_relation(USER_LABEL, Predicate::Prefers, &object);
        if flip {
            out.push_relation(&object, Predicate::Contradicts, &opposite);
        }
        return true;
    }

    if let Some(c) = p.dislike.captures(clause) {
        let verb = c[1].to_ascii_lowercase();
        let object = clean_object(&c[2]);
        if object.is_empty() {
            return false;
        }
        let hint = lexicon_score(&verb);
        let label = negated_preference_label(&object);
        let flip = preference_exists(&object, out, memory);
        out.push_concept(&label, ConceptType::Preference, format!("i {verb} {object}"), hint);
        out.push_concept(USER_LABEL, ConceptType::Person, "the user", None);
        out.push_relation(USER_LABEL, Predicate::Prefers, &label);
        if flip {
            out.push_relation(&label, Predicate::Contradicts, &object);
        }
        return true;
    }

    if let Some(c) = p.is.captures(clause) {
        let subject = clean_subject(&c[1]);
        let property = clean_object(&c[2]);
        let lower = subject.to_ascii_lowercase();
        if subject.is_empty() || property.is_empty() || PRONOUN_SUBJECTS.contains(&lower.as_str()) {
            return false;
        }
        out.push_concept(&subject, ConceptType::Fact, format!("{subject} is {property}"), None);
        out.push_concept(&property, ConceptType::Abstract, format!("property of {subject}"), None);
        out.push_relation(&subject, Predicate::HasProperty, &property);
        return true;
    }

    false
}

fn fallback_label(text: &str) -> String {
    normalize_label(text).chars().take(FALLBACK_LABEL_CHARS).collect::<String>().trim().to_string()
}

/// Pattern-table extraction. Pure and deterministic given `memory`.
pub fn extract_rule_based(text: &str, memory: &dyn ConceptLookup) -> Result<ExtractionResult> {
    if text.trim().is_empty() {
        return Err(ScmError::InvalidArgument("cannot extract from empty text".into()));
    }
    let mut out = ExtractionResult::default();
    for clause in split_clauses(text) {
        extract_clause(&clause, &mut out, memory);
    }
    if out.concepts.is_empty() {
        let label = fallback_label(text);
        if !label.is_empty() {
            out.push_concept(&label, ConceptType::Event, text.trim(), None);
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct TextRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct LooseConcept {
    label: String,
    #[serde(default, alias = "type")]
    ctype: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    sentiment_hint: Option<f64>,
}

#[derive(Deserialize)]
struct LooseRelation {
    src_label: String,
    #[serde(default)]
    predicate: String,
    dst_label: String,
}

#[derive(Deserialize)]
struct LooseExtraction {
    #[serde(default)]
    concepts: Vec<LooseConcept>,
    #[serde(default)]
    relations: Vec<LooseRelation>,
}

/// Client for an extraction endpoint that accepts `{"text": ...}` and returns
/// extraction JSON. Output is coerced into the closed taxonomies.
#[derive(Debug, Clone)]
pub struct RemoteExtractor {
    url: String,
    agent: ureq::Agent,
}

impl RemoteExtractor {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        RemoteExtractor { url: url.into(), agent: super::http_agent(timeout) }
    }

    pub fn extract(
        &self,
        text: &str,
        memory: &dyn ConceptLookup,
    ) -> std::result::Result<ExtractionResult, String> {
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(TextRequest { text })
            .map_err(|e| e.to_string())?;
        let loose: LooseExtraction = resp.body_mut().read_json().map_err(|e| e.to_string())?;
        Ok(coerce(loose, memory))
    }
}

fn coerce(loose: LooseExtraction, memory: &dyn ConceptLookup) -> ExtractionResult {
    let mut out = ExtractionResult::default();
    for c in loose.concepts {
        let hint = c.sentiment_hint.filter(|h| h.is_finite()).map(|h| h.clamp(-1.0, 1.0));
        let description = if c.description.trim().is_empty() { c.label.clone() } else { c.description };
        out.push_concept(&c.label, ConceptType::coerce(&c.ctype), description, hint);
    }
    for r in loose.relations {
        let known = |l: &str| out.has_label(l) || memory.contains_label(l);
        if normalize_label(&r.src_label).is_empty() || normalize_label(&r.dst_label).is_empty() {
            continue;
        }
        if known(&r.src_label) && known(&r.dst_label) {
            out.push_relation(&r.src_label, Predicate::coerce(&r.predicate), &r.dst_label);
        }
    }
    out
}

/// Extraction front-end: rule-based by default, remote when configured, with
/// fallback to rules when the endpoint is unreachable.
#[derive(Debug, Clone, Default)]
pub struct Extractor {
    remote: Option<RemoteExtractor>,
}

impl Extractor {
    pub fn rule_based() -> Self {
        Extractor { remote: None }
    }

    pub fn remote(remote: RemoteExtractor) -> Self {
        Extractor { remote: Some(remote) }
    }

    pub fn kind(&self) -> ExtractorKind {
        if self.remote.is_some() {
            ExtractorKind::RemoteLlm
        } else {
            ExtractorKind::RuleBased
        }
    }

    pub fn extract(&self, text: &str, memory: &dyn ConceptLookup) -> Result<ExtractionResult> {
        if text.trim().is_empty() {
            return Err(ScmError::InvalidArgument("cannot extract from empty text".into()));
        }
        if let Some(remote) = &self.remote {
            match remote.extract(text, memory) {
                Ok(mut res) => {
                    if res.concepts.is_empty() {
                        let label = fallback_label(text);
                        res.push_concept(&label, ConceptType::Event, text.trim(), None);
                    }
                    return Ok(res);
                }
                Err(why) => {
                    tracing::warn!(%why, "extraction endpoint unavailable, using rule-based extractor");
                    let mut res = extract_rule_based(text, memory)?;
                    res.degraded = true;
                    return Ok(res);
                }
            }
        }
        extract_rule_based(text, memory)
    }
}
