//! Sentence-level event-annotated corpora.
//!
//! On disk a corpus is JSON Lines, one [`SentenceRecord`] per line. Spans are
//! half-open token ranges.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{Ontology, RoleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    pub fn new(start: usize, end: usize) -> Self {
        TokenSpan { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn is_valid_for(&self, n_tokens: usize) -> bool {
        self.start < self.end && self.end <= n_tokens
    }
}

impl fmt::Display for TokenSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArgumentMention {
    #[serde(flatten)]
    pub span: TokenSpan,
    pub text: String,
    pub role: RoleId,
}

/// A gold event, or a decoded prediction (same shape).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "EventWire", into = "EventWire")]
pub struct EventMention {
    pub event_type: String,
    pub trigger: TokenSpan,
    pub trigger_text: String,
    pub arguments: Vec<ArgumentMention>,
}

pub type EventPrediction = EventMention;

#[derive(Serialize, Deserialize)]
struct EventWire {
    event_type: String,
    trigger: TriggerWire,
    #[serde(default)]
    arguments: Vec<ArgumentMention>,
}

#[derive(Serialize, Deserialize)]
struct TriggerWire {
    start: usize,
    end: usize,
    text: String,
}

impl From<EventWire> for EventMention {
    fn from(w: EventWire) -> Self {
        EventMention {
            event_type: w.event_type,
            trigger: TokenSpan::new(w.trigger.start, w.trigger.end),
            trigger_text: w.trigger.text,
            arguments: w.arguments,
        }
    }
}

impl From<EventMention> for EventWire {
    fn from(e: EventMention) -> Self {
        EventWire {
            event_type: e.event_type,
            trigger: TriggerWire {
                start: e.trigger.start,
                end: e.trigger.end,
                text: e.trigger_text,
            },
            arguments: e.arguments,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub doc_id: String,
    pub sent_id: String,
    pub tokens: Vec<String>,
    #[serde(default)]
    pub events: Vec<EventMention>,
}

impl SentenceRecord {
    pub fn passage(&self) -> String {
        self.tokens.join(" ")
    }

    /// Whitespace join of the tokens under `span`; `None` when out of range.
    pub fn span_text(&self, span: TokenSpan) -> Option<String> {
        span.is_valid_for(self.tokens.len())
            .then(|| self.tokens[span.start..span.end].join(" "))
    }

    pub fn key(&self) -> (String, String) {
        (self.doc_id.clone(), self.sent_id.clone())
    }

    /// Gold events of one type, ordered by trigger start.
    pub fn events_of_type<'a>(&'a self, event_type: &'a str) -> Vec<&'a EventMention> {
        let mut evs: Vec<_> = self
            .events
            .iter()
            .filter(|e| e.event_type == event_type)
            .collect();
        evs.sort_by_key(|e| (e.trigger.start, e.trigger.end));
        evs
    }

    /// Checks every span and text against the tokens and the ontology.
    pub fn validate(&self, ontology: &Ontology) -> std::result::Result<(), String> {
        if self.tokens.is_empty() {
            return Err("sentence has no tokens".into());
        }
        let n = self.tokens.len();
        for (i, ev) in self.events.iter().enumerate() {
            let schema = ontology
                .get(&ev.event_type)
                .ok_or_else(|| format!("event {i}: unknown event type {:?}", ev.event_type))?;
            let Some(text) = self.span_text(ev.trigger) else {
                return Err(format!("event {i}: trigger span {} out of range (n={n})", ev.trigger));
            };
            if text != ev.trigger_text {
                return Err(format!(
                    "event {i}: trigger text {:?} does not match tokens {text:?}",
                    ev.trigger_text
                ));
            }
            for (j, arg) in ev.arguments.iter().enumerate() {
                if !schema.roles.contains(&arg.role) {
                    return Err(format!(
                        "event {i} argument {j}: role {} not allowed for {}",
                        arg.role, ev.event_type
                    ));
                }
                let Some(text) = self.span_text(arg.span) else {
                    return Err(format!(
                        "event {i} argument {j}: span {} out of range (n={n})",
                        arg.span
                    ));
                };
                if text != arg.text {
                    return Err(format!(
                        "event {i} argument {j}: text {:?} does not match tokens {text:?}",
                        arg.text
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<SentenceRecord>,
    pub ontology_id: String,
}

impl Corpus {
    pub fn new(sentences: Vec<SentenceRecord>, ontology_id: impl Into<String>) -> Self {
        Corpus {
            sentences,
            ontology_id: ontology_id.into(),
        }
    }

    /// Reads and validates a JSON Lines corpus.
    pub fn load(path: impl AsRef<Path>, ontology: &Ontology) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file), ontology)
            .map_err(|e| match e {
                Error::Io { source, .. } => Error::io(path, source),
                other => other,
            })
    }

    pub fn from_reader(reader: impl BufRead, ontology: &Ontology) -> Result<Self> {
        let mut sentences = Vec::new();
        let mut keys = HashSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::io("<corpus>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SentenceRecord = serde_json::from_str(&line)
                .map_err(|e| Error::json(format!("corpus line {line_no}"), e))?;
            let fail = |reason: String| Error::Corpus {
                line: line_no,
                doc_id: rec.doc_id.clone(),
                sent_id: rec.sent_id.clone(),
                reason,
            };
            rec.validate(ontology).map_err(&fail)?;
            if !keys.insert(rec.key()) {
                return Err(fail("duplicate (doc_id, sent_id)".into()));
            }
            sentences.push(rec);
        }
        Ok(Corpus::new(sentences, ontology.name.clone()))
    }

    /// Validates an in-memory corpus, reporting the first problem.
    pub fn validate(&self, ontology: &Ontology) -> Result<()> {
        let mut keys = HashSet::new();
        for (i, rec) in self.sentences.iter().enumerate() {
            let fail = |reason: String| Error::Corpus {
                line: i + 1,
                doc_id: rec.doc_id.clone(),
                sent_id: rec.sent_id.clone(),
                reason,
            };
            rec.validate(ontology).map_err(fail)?;
            if !keys.insert(rec.key()) {
                return Err(fail("duplicate (doc_id, sent_id)".into()));
            }
        }
        Ok(())
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for rec in &self.sentences {
            serde_json::to_writer(&mut w, rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_jsonl(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Document ids in order of first appearance.
    pub fn doc_ids(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.sentences
            .iter()
            .filter(|s| seen.insert(s.doc_id.as_str()))
            .map(|s| s.doc_id.as_str())
            .collect()
    }

    pub fn sentence_index(&self) -> HashMap<(&str, &str), &SentenceRecord> {
        self.sentences
            .iter()
            .map(|s| ((s.doc_id.as_str(), s.sent_id.as_str()), s))
            .collect()
    }

    pub fn event_count(&self) -> usize {
        self.sentences.iter().map(|s| s.events.len()).sum()
    }
}

/// Dataset statistics in the usual six columns.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub docs: usize,
    pub sents: usize,
    pub events: usize,
    pub event_types: usize,
    pub args: usize,
    pub arg_types: usize,
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>8} {:>8} {:>8} {:>13} {:>8} {:>11}",
            "#Docs", "#Sents", "#Events", "#Event Types", "#Args", "#Arg Types"
        )?;
        write!(
            f,
            "{:>8} {:>8} {:>8} {:>13} {:>8} {:>11}",
            self.docs, self.sents, self.events, self.event_types, self.args, self.arg_types
        )
    }
}

pub fn corpus_stats(corpus: &Corpus) -> StatsReport {
    let mut docs = BTreeSet::new();
    let mut types = BTreeSet::new();
    let mut roles = BTreeSet::new();
    let mut report = StatsReport::default();
    for s in &corpus.sentences {
        docs.insert(s.doc_id.as_str());
        report.sents += 1;
        for e in &s.events {
            report.events += 1;
            types.insert(e.event_type.as_str());
            for a in &e.arguments {
                report.args += 1;
                roles.insert(a.role.as_str());
            }
        }
    }
    report.docs = docs.len();
    report.event_types = types.len();
    report.arg_types = roles.len();
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseMode {
    Exact,
    Fold,
}

/// Every token-aligned occurrence of the whitespace-tokenized `query`,
/// in increasing start order.
pub fn find_occurrences(tokens: &[String], query: &str, mode: CaseMode) -> Vec<TokenSpan> {
    let needle: Vec<&str> = query.split_whitespace().collect();
    let m = needle.len();
    if m == 0 || m > tokens.len() {
        return Vec::new();
    }
    let folded: Vec<String>;
    let (hay, needle): (Vec<&str>, Vec<String>) = match mode {
        CaseMode::Exact => (
            tokens.iter().map(String::as_str).collect(),
            needle.iter().map(|s| s.to_string()).collect(),
        ),
        CaseMode::Fold => {
            folded = tokens.iter().map(|t| t.to_lowercase()).collect();
            (
                folded.iter().map(String::as_str).collect(),
                needle.iter().map(|s| s.to_lowercase()).collect(),
            )
        }
    };
    hay.windows(m)
        .enumerate()
        .filter(|(_, w)| w.iter().zip(&needle).all(|(a, b)| *a == b.as_str()))
        .map(|(i, _)| TokenSpan::new(i, i + m))
        .collect()
}

/// Exact occurrences, falling back to case-insensitive ones when there are none.
pub fn find_with_fallback(tokens: &[String], query: &str) -> Vec<TokenSpan> {
    let exact = find_occurrences(tokens, query, CaseMode::Exact);
    if exact.is_empty() {
        find_occurrences(tokens, query, CaseMode::Fold)
    } else {
        exact
    }
}

pub mod oneie {
    //! Conversion from OneIE-style preprocessed sentences, where arguments
    //! point at entity mentions by id.
    //!
    //! Field renaming only: tokens are kept as-is. Trigger and argument texts
    //! are re-derived from the tokens, since the preprocessed `text` fields
    //! carry the original spacing.

    use std::collections::HashMap;
    use std::io::BufRead;

    use serde::Deserialize;

    use super::{ArgumentMention, EventMention, SentenceRecord, TokenSpan};
    use crate::error::{Error, Result};
    use crate::ontology::RoleId;

    #[derive(Deserialize)]
    struct Record {
        doc_id: String,
        sent_id: String,
        tokens: Vec<String>,
        #[serde(default)]
        entity_mentions: Vec<Entity>,
        #[serde(default)]
        event_mentions: Vec<Event>,
    }

    #[derive(Deserialize)]
    struct Entity {
        id: String,
        start: usize,
        end: usize,
    }

    #[derive(Deserialize)]
    struct Event {
        event_type: String,
        trigger: Trigger,
        #[serde(default)]
        arguments: Vec<Argument>,
    }

    #[derive(Deserialize)]
    struct Trigger {
        start: usize,
        end: usize,
    }

    #[derive(Deserialize)]
    struct Argument {
        entity_id: String,
        role: String,
    }

    pub fn convert_line(line: &str) -> Result<SentenceRecord> {
        let rec: Record = serde_json::from_str(line).map_err(|e| Error::json("oneie record", e))?;
        let entities: HashMap<&str, TokenSpan> = rec
            .entity_mentions
            .iter()
            .map(|e| (e.id.as_str(), TokenSpan::new(e.start, e.end)))
            .collect();
        let join = |span: TokenSpan| -> Result<String> {
            if !span.is_valid_for(rec.tokens.len()) {
                return Err(Error::Corpus {
                    line: 0,
                    doc_id: rec.doc_id.clone(),
                    sent_id: rec.sent_id.clone(),
                    reason: format!("span {span} out of range"),
                });
            }
            Ok(rec.tokens[span.start..span.end].join(" "))
        };
        let mut events = Vec::with_capacity(rec.event_mentions.len());
        for ev in &rec.event_mentions {
            let trigger = TokenSpan::new(ev.trigger.start, ev.trigger.end);
            let mut arguments = Vec::with_capacity(ev.arguments.len());
            for arg in &ev.arguments {
                let Some(&span) = entities.get(arg.entity_id.as_str()) else {
                    return Err(Error::Corpus {
                        line: 0,
                        doc_id: rec.doc_id.clone(),
                        sent_id: rec.sent_id.clone(),
                        reason: format!("argument refers to unknown entity {:?}", arg.entity_id),
                    });
                };
                arguments.push(ArgumentMention {
                    span,
                    text: join(span)?,
                    role: RoleId::new(arg.role.as_str()),
                });
            }
            events.push(EventMention {
                event_type: ev.event_type.clone(),
                trigger,
                trigger_text: join(trigger)?,
                arguments,
            });
        }
        Ok(SentenceRecord {
            doc_id: rec.doc_id,
            sent_id: rec.sent_id,
            tokens: rec.tokens,
            events,
        })
    }

    pub fn convert(reader: impl BufRead) -> Result<Vec<SentenceRecord>> {
        let mut out = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<oneie>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(convert_line(&line).map_err(|e| match e {
                Error::Corpus {
                    doc_id,
                    sent_id,
                    reason,
                    ..
                } => Error::Corpus {
                    line: i + 1,
                    doc_id,
                    sent_id,
                    reason,
                },
                other => other,
            })?);
        }
        Ok(out)
    }
}
