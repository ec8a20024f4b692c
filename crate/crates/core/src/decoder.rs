//! Turns generated sentences back into trigger and argument spans.
//!
//! Decoding runs in two steps. [`parse_output`] aligns each output chunk
//! against the template's fixed segments and extracts raw slot fills.
//! [`resolve_spans`] maps fills onto token spans of the passage.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{find_with_fallback, ArgumentMention, EventPrediction, SentenceRecord, TokenSpan};
use crate::error::{Error, Result};
use crate::ontology::{EventSchema, SlotTarget, TemplateKind, TemplateSlot, TemplateSpec};
use crate::promptgen::PromptConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DiagnosticCode {
    /// A chunk could not be aligned with the template.
    UnanchoredSegment,
    /// A trigger string has no occurrence in the passage.
    UnmatchedString,
    /// An argument string has no occurrence in the passage.
    HallucinatedArgument,
    /// Arguments were generated but no trigger resolved.
    OrphanArguments,
    /// Argument extraction was asked to decode without a trigger.
    MissingAnchor,
    /// The generator reported a failure for this instance.
    GeneratorError,
    /// Prediction refers to a sentence not in the gold corpus.
    UnknownSentence,
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub detail: String,
}

impl Diagnostic {
    pub fn new(code: DiagnosticCode, detail: impl Into<String>) -> Self {
        Diagnostic {
            code,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotFill {
    pub slot: TemplateSlot,
    /// Trimmed text captured for the slot; empty when unfilled.
    pub raw: String,
    /// `raw` split on the and-joiner. Whether the split is used is decided
    /// against the passage.
    pub values: Vec<String>,
}

impl SlotFill {
    fn empty(slot: &TemplateSlot) -> Self {
        SlotFill {
            slot: slot.clone(),
            raw: String::new(),
            values: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkFills {
    pub anchored: bool,
    pub fills: Vec<SlotFill>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedOutput {
    pub chunks: Vec<ChunkFills>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DecodeResult {
    pub events: Vec<EventPrediction>,
    pub diagnostics: Vec<Diagnostic>,
}

impl DecodeResult {
    /// True when every chunk aligned with the template.
    pub fn is_decodable(&self) -> bool {
        !self
            .diagnostics
            .iter()
            .any(|d| matches!(d.code, DiagnosticCode::UnanchoredSegment | DiagnosticCode::GeneratorError))
    }
}

fn split_chunks<'a>(output: &'a str, sep: &str) -> Vec<&'a str> {
    let key = if sep.trim().is_empty() { sep } else { sep.trim() };
    if key.is_empty() {
        return vec![output.trim()];
    }
    output.split(key).map(str::trim).collect()
}

/// Byte offsets of the text captured by each slot, or None if the chunk
/// does not align. Segments are located leftmost-first; the final segment
/// must end the chunk.
pub fn anchor_chunk(chunk: &str, spec: &TemplateSpec) -> Option<Vec<(usize, usize)>> {
    let segs = spec.segments();
    let n = segs.len() - 1;
    if n == 0 {
        return (chunk.trim() == segs[0].trim()).then(Vec::new);
    }
    let last = segs[n].trim_end();
    if !chunk.ends_with(last) {
        return None;
    }
    let limit = chunk.len() - last.len();
    let first = segs[0].trim_start();
    let mut pos = chunk[..limit].find(first)? + first.len();
    let mut spans = Vec::with_capacity(n);
    for seg in &segs[1..n] {
        let at = pos + chunk[pos..limit].find(seg.as_str())?;
        spans.push((pos, at));
        pos = at + seg.len();
    }
    spans.push((pos, limit));
    Some(spans)
}

fn make_fill(slot: &TemplateSlot, raw: &str, and_joiner: &str) -> SlotFill {
    if slot.is_unfilled(raw) {
        return SlotFill::empty(slot);
    }
    let raw = raw.trim().to_string();
    let key = and_joiner.trim();
    let values: Vec<String> = if key.is_empty() {
        vec![raw.clone()]
    } else {
        split_words(&raw, key)
            .into_iter()
            .filter(|v| !slot.is_unfilled(v))
            .collect()
    };
    SlotFill {
        slot: slot.clone(),
        raw,
        values,
    }
}

/// Splits on `joiner` as a whole word.
fn split_words(text: &str, joiner: &str) -> Vec<String> {
    let mut pieces = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    for w in text.split_whitespace() {
        if w == joiner {
            pieces.push(cur.join(" "));
            cur.clear();
        } else {
            cur.push(w);
        }
    }
    pieces.push(cur.join(" "));
    pieces
}

pub fn parse_output(output: &str, spec: &TemplateSpec, cfg: &PromptConfig) -> ParsedOutput {
    let mut parsed = ParsedOutput::default();
    for (i, chunk) in split_chunks(output, &cfg.multi_event_separator).into_iter().enumerate() {
        match anchor_chunk(chunk, spec) {
            Some(spans) => parsed.chunks.push(ChunkFills {
                anchored: true,
                fills: spec
                    .slots()
                    .iter()
                    .zip(spans)
                    .map(|(slot, (a, b))| make_fill(slot, &chunk[a..b], &cfg.and_joiner))
                    .collect(),
            }),
            None => {
                parsed.diagnostics.push(Diagnostic::new(
                    DiagnosticCode::UnanchoredSegment,
                    format!("chunk {i} does not follow the template: {chunk:?}"),
                ));
                parsed.chunks.push(ChunkFills {
                    anchored: false,
                    fills: spec.slots().iter().map(SlotFill::empty).collect(),
                });
            }
        }
    }
    parsed
}

/// Occurrence sets for a fill: the whole raw text if it occurs in the
/// passage, otherwise each and-separated piece.
fn fill_occurrences(fill: &SlotFill, tokens: &[String]) -> Vec<(String, Vec<TokenSpan>)> {
    if fill.values.is_empty() {
        return Vec::new();
    }
    let whole = find_with_fallback(tokens, &fill.raw);
    if !whole.is_empty() || fill.values.len() == 1 && fill.values[0] == fill.raw {
        return vec![(fill.raw.clone(), whole)];
    }
    fill.values
        .iter()
        .map(|v| (v.clone(), find_with_fallback(tokens, v)))
        .collect()
}

/// The occurrence with the smallest start distance to `anchor`; ties go
/// to the earlier one.
pub fn closest_occurrence(occurrences: &[TokenSpan], anchor: TokenSpan) -> Option<TokenSpan> {
    occurrences
        .iter()
        .copied()
        .min_by_key(|o| (o.start.abs_diff(anchor.start), o.start))
}

fn resolve_arguments(
    fills: &[SlotFill],
    sent: &SentenceRecord,
    anchor: TokenSpan,
    diags: &mut Vec<Diagnostic>,
) -> Vec<ArgumentMention> {
    let mut args: Vec<ArgumentMention> = Vec::new();
    for fill in fills {
        let SlotTarget::Role(role) = &fill.slot.target else {
            continue;
        };
        for (text, occ) in fill_occurrences(fill, &sent.tokens) {
            match closest_occurrence(&occ, anchor) {
                Some(span) => {
                    let arg = ArgumentMention {
                        span,
                        text: sent.span_text(span).unwrap_or_default(),
                        role: role.clone(),
                    };
                    if !args.contains(&arg) {
                        args.push(arg);
                    }
                }
                None => diags.push(Diagnostic::new(
                    DiagnosticCode::HallucinatedArgument,
                    format!("{role} {text:?} not found in passage"),
                )),
            }
        }
    }
    args
}

/// Resolves one chunk's fills to predictions. With `anchor` (argument
/// extraction) the result is a single event on that trigger; otherwise
/// every occurrence of the trigger fill is an event and the earliest one
/// anchors the arguments.
pub fn resolve_spans(
    fills: &[SlotFill],
    sent: &SentenceRecord,
    event_type: &str,
    anchor: Option<TokenSpan>,
) -> DecodeResult {
    let mut diags = Vec::new();
    if let Some(anchor) = anchor {
        let arguments = resolve_arguments(fills, sent, anchor, &mut diags);
        let event = EventPrediction {
            event_type: event_type.to_string(),
            trigger: anchor,
            trigger_text: sent.span_text(anchor).unwrap_or_default(),
            arguments,
        };
        return DecodeResult {
            events: vec![event],
            diagnostics: diags,
        };
    }

    let mut triggers: Vec<TokenSpan> = Vec::new();
    for fill in fills.iter().filter(|f| f.slot.target == SlotTarget::Trigger) {
        for (text, occ) in fill_occurrences(fill, &sent.tokens) {
            if occ.is_empty() {
                diags.push(Diagnostic::new(
                    DiagnosticCode::UnmatchedString,
                    format!("trigger {text:?} not found in passage"),
                ));
            }
            triggers.extend(occ);
        }
    }
    triggers.sort();
    triggers.dedup();
    let Some(&first) = triggers.first() else {
        if fills.iter().any(|f| f.slot.target != SlotTarget::Trigger && !f.is_empty()) {
            diags.push(Diagnostic::new(
                DiagnosticCode::OrphanArguments,
                "arguments generated without a resolvable trigger",
            ));
        }
        return DecodeResult {
            events: Vec::new(),
            diagnostics: diags,
        };
    };
    let arguments = resolve_arguments(fills, sent, first, &mut diags);
    let events = triggers
        .into_iter()
        .map(|t| EventPrediction {
            event_type: event_type.to_string(),
            trigger: t,
            trigger_text: sent.span_text(t).unwrap_or_default(),
            arguments: arguments.clone(),
        })
        .collect();
    DecodeResult {
        events,
        diagnostics: diags,
    }
}

/// Decodes one generated output for (`sent`, `schema`) under `cfg.task`.
///
/// Argument extraction needs `anchor`; it yields one event on the anchor
/// holding the arguments of every aligned chunk, or nothing if no chunk
/// aligned.
pub fn decode(
    output: &str,
    sent: &SentenceRecord,
    schema: &EventSchema,
    cfg: &PromptConfig,
    anchor: Option<TokenSpan>,
) -> DecodeResult {
    let spec = schema.template(cfg.task, cfg.template_variant);
    let parsed = parse_output(output, &spec, cfg);
    let mut result = DecodeResult {
        events: Vec::new(),
        diagnostics: parsed.diagnostics,
    };

    if cfg.task == TemplateKind::Eae {
        let Some(anchor) = anchor.filter(|a| a.is_valid_for(sent.tokens.len())) else {
            result.diagnostics.push(Diagnostic::new(
                DiagnosticCode::MissingAnchor,
                format!("no valid trigger for {}", schema.event_type),
            ));
            return result;
        };
        let mut event: Option<EventPrediction> = None;
        for chunk in parsed.chunks.iter().filter(|c| c.anchored) {
            let r = resolve_spans(&chunk.fills, sent, &schema.event_type, Some(anchor));
            result.diagnostics.extend(r.diagnostics);
            let ev = r.events.into_iter().next().expect("anchored resolve yields one event");
            match &mut event {
                None => event = Some(ev),
                Some(e) => {
                    for a in ev.arguments {
                        if !e.arguments.contains(&a) {
                            e.arguments.push(a);
                        }
                    }
                }
            }
        }
        result.events.extend(event);
        return result;
    }

    for chunk in parsed.chunks.iter().filter(|c| c.anchored) {
        let r = resolve_spans(&chunk.fills, sent, &schema.event_type, None);
        result.events.extend(r.events);
        result.diagnostics.extend(r.diagnostics);
    }
    result
}

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub doc_id: String,
    pub sent_id: String,
    pub events: Vec<EventPrediction>,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
}

impl PredictionRecord {
    pub fn key(&self) -> (String, String) {
        (self.doc_id.clone(), self.sent_id.clone())
    }
}

pub fn write_predictions(records: &[PredictionRecord], mut w: impl Write) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_predictions(reader: impl BufRead) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<predictions>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::json(format!("prediction line {}", i + 1), e))?,
        );
    }
    Ok(out)
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_predictions(std::io::BufReader::new(f))
}

pub fn save_predictions(records: &[PredictionRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_predictions(records, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
