//! Domain types shared by every other module: events, patterns, dictionaries,
//! sentences, records, datasets and model parameters.
//!
//! Events are dense integer ids; human-readable labels live in the dataset's
//! alphabet side table and are only touched at ingestion and reporting time.
//! All core values are immutable after construction and safe to share across
//! threads.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One event type, an index into the dataset alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventType(pub u16);

impl EventType {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An ordered l-gram of event types. A 1-gram is a single event.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pattern(pub Vec<EventType>);

impl Pattern {
    pub fn new(events: Vec<EventType>) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::InvalidParams("pattern must be non-empty".into()));
        }
        Ok(Pattern(events))
    }

    /// Convenience constructor from raw ids.
    pub fn from_ids(ids: &[u16]) -> Self {
        Pattern(ids.iter().copied().map(EventType).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn events(&self) -> &[EventType] {
        &self.0
    }

    /// True when all events are pairwise distinct. Required of every pattern
    /// of length >= 2 for the dictionary to be well-behaved.
    pub fn has_distinct_events(&self) -> bool {
        let mut seen = Vec::with_capacity(self.0.len());
        for e in &self.0 {
            if seen.contains(e) {
                return false;
            }
            seen.push(*e);
        }
        true
    }

    /// Renders with dataset labels, e.g. `[9 8 10]`.
    pub fn render(&self, alphabet: &[String]) -> String {
        let parts: Vec<&str> = self
            .0
            .iter()
            .map(|e| alphabet.get(e.index()).map(String::as_str).unwrap_or("?"))
            .collect();
        format!("[{}]", parts.join(" "))
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// A finite ordered set of distinct patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Pattern>", into = "Vec<Pattern>")]
pub struct Dictionary {
    patterns: Vec<Pattern>,
    index: HashMap<Pattern, usize>,
}

impl Dictionary {
    pub fn new(patterns: Vec<Pattern>) -> Result<Self> {
        let mut index = HashMap::with_capacity(patterns.len());
        for (i, p) in patterns.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::InvalidParams("empty pattern in dictionary".into()));
            }
            if index.insert(p.clone(), i).is_some() {
                return Err(Error::InvalidParams(format!("duplicate pattern {p}")));
            }
        }
        Ok(Dictionary { patterns, index })
    }

    /// Dictionary size v_D.
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn get(&self, i: usize) -> &Pattern {
        &self.patterns[i]
    }

    pub fn contains(&self, p: &Pattern) -> bool {
        self.index.contains_key(p)
    }

    pub fn index_of(&self, p: &Pattern) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// Maximum pattern length L.
    pub fn max_len(&self) -> usize {
        self.patterns.iter().map(Pattern::len).max().unwrap_or(0)
    }

    /// Count of patterns per length, indexed by l (entry 0 unused).
    pub fn length_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.max_len() + 1];
        for p in &self.patterns {
            counts[p.len()] += 1;
        }
        counts
    }

    /// Number of 1-grams, M_1.
    pub fn unigram_count(&self) -> usize {
        self.patterns.iter().filter(|p| p.len() == 1).count()
    }

    /// Indices of all 1-gram patterns, by event id.
    pub fn unigram_index(&self) -> HashMap<EventType, usize> {
        self.patterns
            .iter()
            .enumerate()
            .filter(|(_, p)| p.len() == 1)
            .map(|(i, p)| (p.events()[0], i))
            .collect()
    }
}

impl TryFrom<Vec<Pattern>> for Dictionary {
    type Error = Error;
    fn try_from(v: Vec<Pattern>) -> Result<Self> {
        Dictionary::new(v)
    }
}

impl From<Dictionary> for Vec<Pattern> {
    fn from(d: Dictionary) -> Self {
        d.patterns
    }
}

/// Returns every pattern of length >= 2 containing a repeated event.
/// An empty result means the all-distinct-events restriction holds.
pub fn validate_a2(d: &Dictionary) -> Vec<Pattern> {
    d.patterns()
        .iter()
        .filter(|p| p.len() >= 2 && !p.has_distinct_events())
        .cloned()
        .collect()
}

/// One sentence of a record: events paired with their absolute time stamps
/// (seconds). Empty sentences are legal values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub events: Vec<EventType>,
    pub stamps: Vec<f64>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Gap times for one sentence, all strictly positive (seconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GapSentence(pub Vec<f64>);

/// One individual's sentence-split event/time data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessRecord {
    pub sentences: Vec<Sentence>,
}

impl ProcessRecord {
    /// Number of sentences K.
    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    /// Total event count N.
    pub fn event_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Checks shape and strict stamp monotonicity across the whole record.
    pub fn validate(&self) -> Result<()> {
        let mut prev: Option<f64> = None;
        for (k, s) in self.sentences.iter().enumerate() {
            if s.events.len() != s.stamps.len() {
                return Err(Error::MalformedRecord(format!(
                    "sentence {k}: {} events but {} stamps",
                    s.events.len(),
                    s.stamps.len()
                )));
            }
            for &t in &s.stamps {
                if !t.is_finite() || t < 0.0 {
                    return Err(Error::MalformedRecord(format!(
                        "sentence {k}: non-finite or negative stamp {t}"
                    )));
                }
                if let Some(p) = prev {
                    if t <= p {
                        return Err(Error::MalformedRecord(format!(
                            "stamps not strictly increasing: {t} after {p} (sentence {k})"
                        )));
                    }
                }
                prev = Some(t);
            }
        }
        Ok(())
    }
}

/// Time stamps are compared and differenced on a fixed decimal grid of one
/// nanosecond, so the gap transform round-trips exactly.
const NANOS_PER_SEC: f64 = 1e9;

fn to_nanos(t: f64) -> i64 {
    (t * NANOS_PER_SEC).round() as i64
}

fn from_nanos(n: i64) -> f64 {
    n as f64 / NANOS_PER_SEC
}

/// Gap transform: the first gap of the record equals its first stamp, the
/// first gap of a later sentence is measured from the previous sentence's
/// last stamp, and within a sentence gaps are consecutive differences.
/// Empty sentences yield empty gap sentences.
pub fn gaps_from_stamps(record: &ProcessRecord) -> Result<Vec<GapSentence>> {
    record.validate()?;
    let mut out = Vec::with_capacity(record.sentences.len());
    let mut prev: i64 = 0;
    for s in &record.sentences {
        let mut gaps = Vec::with_capacity(s.stamps.len());
        for &t in &s.stamps {
            let n = to_nanos(t);
            let gap = n - prev;
            if gap <= 0 {
                return Err(Error::MalformedRecord(format!(
                    "non-positive gap at stamp {t}"
                )));
            }
            gaps.push(from_nanos(gap));
            prev = n;
        }
        out.push(GapSentence(gaps));
    }
    Ok(out)
}

/// Inverse of [`gaps_from_stamps`]; exact on the nanosecond grid.
pub fn stamps_from_gaps(gaps: &[GapSentence]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(gaps.len());
    let mut acc: i64 = 0;
    for g in gaps {
        let mut stamps = Vec::with_capacity(g.0.len());
        for &gap in &g.0 {
            acc += to_nanos(gap);
            stamps.push(from_nanos(acc));
        }
        out.push(stamps);
    }
    out
}

/// Canonical dataset: alphabet side table plus one record per individual.
///
/// Serialized form is the interchange format consumed by every command:
/// `{"alphabet": [labels], "records": [{"sentences": [{"events": [...], "stamps": [...]}]}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub alphabet: Vec<String>,
    pub records: Vec<ProcessRecord>,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        let n = self.alphabet.len();
        for (i, r) in self.records.iter().enumerate() {
            r.validate()
                .map_err(|e| Error::MalformedRecord(format!("record {i}: {e}")))?;
            for s in &r.sentences {
                for &e in &s.events {
                    if e.index() >= n {
                        return Err(Error::MalformedRecord(format!(
                            "record {i}: event id {e} outside alphabet of size {n}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Dataset = serde_json::from_str(text)?;
        d.validate()?;
        Ok(d)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Full parameter set of a model instance: mixture weights, per-class pattern
/// probabilities over a dictionary, per-class gap intensities, and the
/// sentence-count rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Mixture weights, one per class; sums to one.
    pub pi: Vec<f64>,
    /// Pattern probabilities, `theta[class][pattern]` in [0,1], columns in
    /// dictionary order.
    pub theta: Vec<Vec<f64>>,
    /// Gap-time rates per class (events per second), strictly positive.
    pub lambda: Vec<f64>,
    /// Mean sentence count per record, strictly positive.
    pub kappa: f64,
}

impl ModelParams {
    pub fn new(pi: Vec<f64>, theta: Vec<Vec<f64>>, lambda: Vec<f64>, kappa: f64) -> Result<Self> {
        let p = ModelParams {
            pi,
            theta,
            lambda,
            kappa,
        };
        p.validate(None)?;
        Ok(p)
    }

    /// Number of classes J.
    pub fn class_count(&self) -> usize {
        self.pi.len()
    }

    pub fn validate(&self, dict: Option<&Dictionary>) -> Result<()> {
        let j = self.pi.len();
        if j == 0 {
            return Err(Error::InvalidParams("no classes".into()));
        }
        let sum: f64 = self.pi.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "mixture weights sum to {sum}, expected 1"
            )));
        }
        if self.pi.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidParams("mixture weight outside [0,1]".into()));
        }
        if self.lambda.len() != j || self.theta.len() != j {
            return Err(Error::InvalidParams(
                "theta/lambda class dimension mismatch".into(),
            ));
        }
        if self.lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidParams("rates must be positive".into()));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidParams("kappa must be positive".into()));
        }
        let width = self.theta.first().map(Vec::len).unwrap_or(0);
        for row in &self.theta {
            if row.len() != width {
                return Err(Error::InvalidParams("ragged theta matrix".into()));
            }
            if row.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
                return Err(Error::InvalidParams(
                    "pattern probability outside [0,1]".into(),
                ));
            }
        }
        if let Some(d) = dict {
            if width != d.len() {
                return Err(Error::InvalidParams(format!(
                    "theta has {width} columns but dictionary has {} patterns",
                    d.len()
                )));
            }
        }
        Ok(())
    }
}
