//! Prompt and target construction for the ED, EAE and E2E tasks.
//!
//! A prompt is the passage followed by the enabled components, joined by
//! the segment separator:
//!
//! ```text
//! <passage> \n <definition> \n Similar triggers such as k1, k2, k3. \n <template>
//! ```
//!
//! Argument extraction replaces the keyword sentence with the query
//! trigger sentence "The event trigger word is T."

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EventMention, SentenceRecord, TokenSpan};
use crate::error::{Error, Result};
use crate::ontology::{EventSchema, Ontology, SlotTarget, TemplateKind, TemplateSpec, TemplateVariant};
use crate::seed::derive_seed;

pub type Task = TemplateKind;

pub const DEFAULT_SEGMENT_SEPARATOR: &str = " \n ";
pub const DEFAULT_MULTI_EVENT_SEPARATOR: &str = " <sep> ";
pub const DEFAULT_AND_JOINER: &str = " and ";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptConfig {
    pub task: Task,
    pub include_definition: bool,
    /// Ignored for argument extraction, whose prompt has no keywords.
    pub include_keywords: bool,
    /// Argument extraction only.
    pub include_query_trigger: bool,
    pub include_template: bool,
    pub template_variant: TemplateVariant,
    pub segment_separator: String,
    pub multi_event_separator: String,
    pub and_joiner: String,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig {
            task: Task::E2e,
            include_definition: true,
            include_keywords: true,
            include_query_trigger: true,
            include_template: true,
            template_variant: TemplateVariant::Natural,
            segment_separator: DEFAULT_SEGMENT_SEPARATOR.to_string(),
            multi_event_separator: DEFAULT_MULTI_EVENT_SEPARATOR.to_string(),
            and_joiner: DEFAULT_AND_JOINER.to_string(),
        }
    }
}

impl PromptConfig {
    pub fn for_task(task: Task) -> Self {
        PromptConfig {
            task,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    /// Negative event types sampled per sentence.
    pub m: usize,
    pub seed: u64,
    pub resample_each_epoch: bool,
    pub epoch: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            m: 13,
            seed: 0,
            resample_each_epoch: true,
            epoch: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub task: Task,
    pub event_type: String,
    pub input: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub doc_id: String,
    pub sent_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<TokenSpan>,
}

pub fn build_prompt(
    sent: &SentenceRecord,
    schema: &EventSchema,
    cfg: &PromptConfig,
    query_trigger: Option<TokenSpan>,
) -> Result<String> {
    let mut parts = vec![sent.passage()];
    if cfg.include_definition {
        parts.push(schema.definition.clone());
    }
    match cfg.task {
        Task::Ed | Task::E2e => {
            if cfg.include_keywords {
                parts.push(format!("Similar triggers such as {}.", schema.keywords.join(", ")));
            }
        }
        Task::Eae => {
            let text = query_trigger_text(sent, query_trigger)?;
            if cfg.include_query_trigger {
                parts.push(format!("The event trigger word is {text}."));
            }
        }
    }
    if cfg.include_template {
        parts.push(schema.template(cfg.task, cfg.template_variant).text());
    }
    Ok(parts.join(&cfg.segment_separator))
}

fn query_trigger_text(sent: &SentenceRecord, span: Option<TokenSpan>) -> Result<String> {
    let Some(span) = span else {
        return Err(Error::Config("argument extraction needs a query trigger".into()));
    };
    sent.span_text(span).ok_or(Error::InvalidTrigger {
        start: span.start,
        end: span.end,
        len: sent.tokens.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Target {
    pub text: String,
    /// Gold arguments left out because the template has no slot for them.
    pub skipped: Vec<String>,
}

/// Gold slot values before rendering: one entry per event, each holding
/// the values of every template slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetFills {
    pub template: TemplateSpec,
    pub chunks: Vec<Vec<Vec<String>>>,
    pub skipped: Vec<String>,
}

impl TargetFills {
    pub fn render(&self, cfg: &PromptConfig) -> String {
        if self.chunks.is_empty() {
            return self.template.text();
        }
        self.chunks
            .iter()
            .map(|values| self.template.fill(values, &cfg.and_joiner))
            .collect::<Vec<_>>()
            .join(&cfg.multi_event_separator)
    }
}

pub fn target_fills(
    sent: &SentenceRecord,
    schema: &EventSchema,
    cfg: &PromptConfig,
    query_trigger: Option<TokenSpan>,
) -> Result<TargetFills> {
    let template = schema.template(cfg.task, cfg.template_variant);
    let events: Vec<&EventMention> = match cfg.task {
        Task::Eae => {
            let span = query_trigger
                .ok_or_else(|| Error::Config("argument extraction needs a query trigger".into()))?;
            query_trigger_text(sent, Some(span))?;
            sent.events_of_type(&schema.event_type)
                .into_iter()
                .filter(|e| e.trigger == span)
                .collect()
        }
        Task::Ed | Task::E2e => sent.events_of_type(&schema.event_type),
    };

    let mut skipped = Vec::new();
    let mut chunks = Vec::with_capacity(events.len());
    for ev in events {
        let mut values = vec![Vec::new(); template.slots().len()];
        for slot in template.slots() {
            if slot.target == SlotTarget::Trigger {
                values[slot.position].push(ev.trigger_text.clone());
            }
        }
        if cfg.task != Task::Ed {
            let mut args: Vec<_> = ev.arguments.iter().collect();
            args.sort_by_key(|a| (a.span.start, a.span.end));
            for arg in args {
                match template.slot_for_role(&arg.role) {
                    Some(slot) => values[slot.position].push(arg.text.clone()),
                    None => skipped.push(format!(
                        "{}/{}: {} argument {:?} has no slot in the {} template",
                        sent.doc_id, sent.sent_id, arg.role, arg.text, schema.event_type
                    )),
                }
            }
        }
        chunks.push(values);
    }
    Ok(TargetFills {
        template,
        chunks,
        skipped,
    })
}

/// The gold-filled output for `schema` on `sent`; the bare template when
/// there are no gold events of that type.
pub fn build_target(
    sent: &SentenceRecord,
    schema: &EventSchema,
    cfg: &PromptConfig,
    query_trigger: Option<TokenSpan>,
) -> Result<Target> {
    let fills = target_fills(sent, schema, cfg, query_trigger)?;
    Ok(Target {
        text: fills.render(cfg),
        skipped: fills.skipped,
    })
}

/// Triggers per sentence, keyed by (doc_id, sent_id): the anchors for
/// argument extraction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TriggerTable(pub HashMap<(String, String), Vec<(String, TokenSpan)>>);

impl TriggerTable {
    pub fn from_gold(corpus: &Corpus) -> Self {
        let mut table = HashMap::new();
        for s in &corpus.sentences {
            let mut trig: Vec<(String, TokenSpan)> = s
                .events
                .iter()
                .map(|e| (e.event_type.clone(), e.trigger))
                .collect();
            trig.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
            trig.dedup();
            table.insert(s.key(), trig);
        }
        TriggerTable(table)
    }

    pub fn get(&self, doc_id: &str, sent_id: &str) -> &[(String, TokenSpan)] {
        self.0
            .get(&(doc_id.to_string(), sent_id.to_string()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn total(&self) -> usize {
        self.0.values().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InstanceSet {
    pub instances: Vec<PromptInstance>,
    pub warnings: Vec<String>,
}

/// Training instances: one positive per event type present in a sentence
/// plus `m` sampled negative types (ED/E2E), or one per gold trigger (EAE).
pub fn build_training_set(
    corpus: &Corpus,
    ontology: &Ontology,
    pcfg: &PromptConfig,
    tcfg: &TrainingConfig,
) -> Result<InstanceSet> {
    let per_sentence: Vec<Result<InstanceSet>> = corpus
        .sentences
        .par_iter()
        .map(|sent| training_instances(sent, ontology, pcfg, tcfg))
        .collect();
    let mut out = InstanceSet::default();
    for r in per_sentence {
        let r = r?;
        out.instances.extend(r.instances);
        out.warnings.extend(r.warnings);
    }
    Ok(out)
}

fn training_instances(
    sent: &SentenceRecord,
    ontology: &Ontology,
    pcfg: &PromptConfig,
    tcfg: &TrainingConfig,
) -> Result<InstanceSet> {
    let mut out = InstanceSet::default();
    let push = |schema: &EventSchema, trigger: Option<TokenSpan>, out: &mut InstanceSet| -> Result<()> {
        let target = build_target(sent, schema, pcfg, trigger)?;
        out.warnings.extend(target.skipped);
        out.instances.push(PromptInstance {
            task: pcfg.task,
            event_type: schema.event_type.clone(),
            input: build_prompt(sent, schema, pcfg, trigger)?,
            target: Some(target.text),
            doc_id: sent.doc_id.clone(),
            sent_id: sent.sent_id.clone(),
            trigger,
        });
        Ok(())
    };

    if pcfg.task == Task::Eae {
        let mut anchors: Vec<(TokenSpan, &str)> = sent
            .events
            .iter()
            .map(|e| (e.trigger, e.event_type.as_str()))
            .collect();
        anchors.sort();
        anchors.dedup();
        for (span, ty) in anchors {
            push(ontology.schema(ty)?, Some(span), &mut out)?;
        }
        return Ok(out);
    }

    let positives: BTreeSet<&str> = sent.events.iter().map(|e| e.event_type.as_str()).collect();
    for ty in &positives {
        push(ontology.schema(ty)?, None, &mut out)?;
    }
    let candidates: Vec<&str> = ontology
        .event_types()
        .filter(|t| !positives.contains(t))
        .collect();
    let m = if tcfg.m > candidates.len() {
        out.warnings.push(format!(
            "{}/{}: m={} exceeds the {} available negative types; clamped",
            sent.doc_id,
            sent.sent_id,
            tcfg.m,
            candidates.len()
        ));
        candidates.len()
    } else {
        tcfg.m
    };
    if m > 0 {
        let epoch = if tcfg.resample_each_epoch { tcfg.epoch } else { 0 };
        let epoch = epoch.to_string();
        let seed = derive_seed(tcfg.seed, &[&sent.doc_id, &sent.sent_id, &epoch]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, candidates.len(), m).into_vec();
        picked.sort_unstable();
        for i in picked {
            push(ontology.schema(candidates[i])?, None, &mut out)?;
        }
    }
    Ok(out)
}

/// Inference instances: every (sentence, event type) for ED/E2E, every
/// (sentence, trigger) from `triggers` for EAE. No targets.
pub fn build_inference_set(
    corpus: &Corpus,
    ontology: &Ontology,
    pcfg: &PromptConfig,
    triggers: Option<&TriggerTable>,
) -> Result<Vec<PromptInstance>> {
    let triggers = match (pcfg.task, triggers) {
        (Task::Eae, None) => {
            return Err(Error::Config(
                "argument extraction inference needs a trigger table".into(),
            ))
        }
        (_, t) => t,
    };
    let per_sentence: Vec<Result<Vec<PromptInstance>>> = corpus
        .sentences
        .par_iter()
        .map(|sent| {
            let mut out = Vec::new();
            let mut push = |schema: &EventSchema, trigger: Option<TokenSpan>| -> Result<()> {
                out.push(PromptInstance {
                    task: pcfg.task,
                    event_type: schema.event_type.clone(),
                    input: build_prompt(sent, schema, pcfg, trigger)?,
                    target: None,
                    doc_id: sent.doc_id.clone(),
                    sent_id: sent.sent_id.clone(),
                    trigger,
                });
                Ok(())
            };
            match (pcfg.task, triggers) {
                (Task::Eae, Some(table)) => {
                    for (ty, span) in table.get(&sent.doc_id, &sent.sent_id) {
                        push(ontology.schema(ty)?, Some(*span))?;
                    }
                }
                _ => {
                    for schema in ontology.schemas() {
                        push(schema, None)?;
                    }
                }
            }
            Ok(out)
        })
        .collect();
    let mut out = Vec::new();
    for r in per_sentence {
        out.extend(r?);
    }
    Ok(out)
}

pub fn write_instances(instances: &[PromptInstance], mut w: impl Write) -> std::io::Result<()> {
    for inst in instances {
        serde_json::to_writer(&mut w, inst)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_instances(reader: impl BufRead) -> Result<Vec<PromptInstance>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<instances>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::json(format!("instance line {}", i + 1), e))?,
        );
    }
    Ok(out)
}

pub fn load_instances(path: impl AsRef<Path>) -> Result<Vec<PromptInstance>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_instances(std::io::BufReader::new(f))
}

/// Instances per event type, for quick summaries.
pub fn count_by_type(instances: &[PromptInstance]) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for i in instances {
        *m.entry(i.event_type.as_str()).or_default() += 1;
    }
    m
}
