//! Keyword-matching event detection baselines.
//!
//! Both predict a trigger of type T wherever one of T's keywords occurs in
//! the sentence as a token sequence. [`lemma_ed`] compares lemmas instead
//! of lowercased surface forms.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use crate::corpus::{EventPrediction, SentenceRecord, TokenSpan};
use crate::error::{Error, Result};
use crate::ontology::{EventSchema, Ontology};

/// Suffixes tried in order by the fallback rule.
const SUFFIXES: [&str; 4] = ["ing", "es", "ed", "s"];
const MIN_STEM: usize = 3;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmaTable {
    map: HashMap<String, String>,
}

impl LemmaTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, surface: &str, lemma: &str) {
        if !lemma.trim().is_empty() {
            self.map.insert(surface.to_lowercase(), lemma.trim().to_lowercase());
        }
    }

    /// Two tab-separated columns per line: surface form, lemma. Blank lines
    /// and lines starting with `#` are ignored.
    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut t = LemmaTable::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<lemma table>", e))?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            match (cols.next(), cols.next()) {
                (Some(s), Some(l)) if !s.trim().is_empty() && !l.trim().is_empty() => t.insert(s.trim(), l),
                _ => return Err(Error::Config(format!("lemma table line {}: expected `surface<TAB>lemma`", i + 1))),
            }
        }
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(f))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Table entry, else the first suffix strip leaving at least three
    /// characters, else the lowercased word.
    pub fn lemma(&self, word: &str) -> String {
        let w = word.to_lowercase();
        if let Some(l) = self.map.get(&w) {
            return l.clone();
        }
        rule_lemma(&w)
    }
}

fn rule_lemma(w: &str) -> String {
    for suf in SUFFIXES {
        if let Some(stem) = w.strip_suffix(suf) {
            if stem.chars().count() >= MIN_STEM {
                return stem.to_string();
            }
        }
    }
    w.to_string()
}

fn keyword_matches<'a>(
    tokens: &[String],
    schemas: impl IntoIterator<Item = &'a EventSchema>,
    norm: impl Fn(&str) -> String,
) -> Vec<EventPrediction> {
    let hay: Vec<String> = tokens.iter().map(|t| norm(t)).collect();
    let mut out: Vec<EventPrediction> = Vec::new();
    for schema in schemas {
        let mut spans: Vec<TokenSpan> = Vec::new();
        for kw in &schema.keywords {
            let needle: Vec<String> = kw.split_whitespace().map(&norm).collect();
            if needle.is_empty() || needle.len() > hay.len() {
                continue;
            }
            for (i, w) in hay.windows(needle.len()).enumerate() {
                if w == needle.as_slice() {
                    spans.push(TokenSpan::new(i, i + needle.len()));
                }
            }
        }
        spans.sort();
        spans.dedup();
        out.extend(spans.into_iter().map(|span| EventPrediction {
            event_type: schema.event_type.clone(),
            trigger: span,
            trigger_text: tokens[span.start..span.end].join(" "),
            arguments: Vec::new(),
        }));
    }
    out
}

pub fn matching_ed(sent: &SentenceRecord, ontology: &Ontology) -> Vec<EventPrediction> {
    keyword_matches(&sent.tokens, ontology.schemas(), |t| t.to_lowercase())
}

pub fn lemma_ed(sent: &SentenceRecord, ontology: &Ontology, lemmas: &LemmaTable) -> Vec<EventPrediction> {
    keyword_matches(&sent.tokens, ontology.schemas(), |t| lemmas.lemma(t))
}
