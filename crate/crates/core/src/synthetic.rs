//! Synthetic annotated corpora for testing and demos.
//!
//! Triggers are ontology keywords and every other token is a random
//! pseudo-word, so within a sentence each trigger and argument text occurs
//! exactly once and no filler looks like a keyword.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ArgumentMention, Corpus, EventMention, SentenceRecord, TokenSpan};
use crate::ontology::Ontology;

const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "tr"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
const CODAS: &[&str] = &["", "", "n", "k", "l", "m", "x"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub docs: usize,
    pub min_sents: usize,
    pub max_sents: usize,
    /// Events per sentence are drawn uniformly from 0..=max_events.
    pub max_events: usize,
    /// Probability that a slotted role gets an argument.
    pub arg_prob: f64,
    /// Probability that a filled role gets a second value.
    pub second_value_prob: f64,
    pub min_filler: usize,
    pub max_filler: usize,
    /// Capitalize some argument words.
    pub mixed_case: bool,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            docs: 50,
            min_sents: 1,
            max_sents: 6,
            max_events: 3,
            arg_prob: 0.6,
            second_value_prob: 0.2,
            min_filler: 3,
            max_filler: 12,
            mixed_case: true,
            seed: 0,
        }
    }
}

pub fn pseudo_word(rng: &mut impl Rng) -> String {
    let n = rng.random_range(2..=3);
    let mut w = String::new();
    for _ in 0..n {
        w.push_str(ONSETS.choose(rng).expect("non-empty"));
        w.push_str(VOWELS.choose(rng).expect("non-empty"));
    }
    w.push_str(CODAS.choose(rng).expect("non-empty"));
    w
}

struct WordSource {
    reserved: HashSet<String>,
}

impl WordSource {
    fn fresh(&self, rng: &mut impl Rng, used: &mut HashSet<String>) -> String {
        loop {
            let w = pseudo_word(rng);
            if !self.reserved.contains(&w) && used.insert(w.clone()) {
                return w;
            }
        }
    }
}

pub fn synthetic_corpus(ontology: &Ontology, cfg: &SyntheticConfig) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut reserved: HashSet<String> = ontology
        .schemas()
        .flat_map(|s| s.keywords.iter().map(|k| k.to_lowercase()))
        .collect();
    reserved.insert("and".into());
    let words = WordSource { reserved };
    let schemas: Vec<_> = ontology.schemas().collect();
    let max_sents = cfg.max_sents.max(cfg.min_sents);
    let max_filler = cfg.max_filler.max(cfg.min_filler);

    let mut sentences = Vec::new();
    for d in 0..cfg.docs {
        let doc_id = format!("doc{d:04}");
        for s in 0..rng.random_range(cfg.min_sents..=max_sents) {
            let mut used: HashSet<String> = HashSet::new();
            // token groups tagged with what they annotate, shuffled into place below
            let mut units: Vec<(Vec<String>, Unit)> = Vec::new();
            let mut events: Vec<(String, Vec<String>)> = Vec::new();
            for _ in 0..rng.random_range(0..=cfg.max_events) {
                let Some(schema) = schemas.choose(&mut rng) else { break };
                let free: Vec<&String> = schema
                    .keywords
                    .iter()
                    .filter(|k| !k.contains(char::is_whitespace) && !used.contains(*k))
                    .collect();
                let Some(kw) = free.choose(&mut rng) else { continue };
                used.insert((*kw).clone());
                units.push((vec![(*kw).clone()], Unit::Trigger(events.len())));
                let template = schema.eae_template.clone();
                let mut roles = Vec::new();
                for slot in template.slots() {
                    let Some(role) = slot.target.role() else { continue };
                    if !rng.random_bool(cfg.arg_prob) {
                        continue;
                    }
                    let n = if rng.random_bool(cfg.second_value_prob) { 2 } else { 1 };
                    for _ in 0..n {
                        let len = rng.random_range(1..=2);
                        let mut phrase: Vec<String> = (0..len).map(|_| words.fresh(&mut rng, &mut used)).collect();
                        if cfg.mixed_case && rng.random_bool(0.3) {
                            phrase[0] = capitalize(&phrase[0]);
                        }
                        units.push((phrase, Unit::Arg(events.len(), roles.len())));
                        roles.push(role.as_str().to_string());
                    }
                }
                events.push((schema.event_type.clone(), roles));
            }
            for _ in 0..rng.random_range(cfg.min_filler..=max_filler) {
                units.push((vec![words.fresh(&mut rng, &mut used)], Unit::Filler));
            }
            units.shuffle(&mut rng);

            let mut tokens = Vec::new();
            let mut mentions: Vec<EventMention> = events
                .iter()
                .map(|(ty, _)| EventMention {
                    event_type: ty.clone(),
                    trigger: TokenSpan::new(0, 0),
                    trigger_text: String::new(),
                    arguments: Vec::new(),
                })
                .collect();
            let mut args: Vec<Vec<Option<ArgumentMention>>> =
                events.iter().map(|(_, roles)| vec![None; roles.len()]).collect();
            for (words, unit) in units {
                let span = TokenSpan::new(tokens.len(), tokens.len() + words.len());
                let text = words.join(" ");
                tokens.extend(words);
                match unit {
                    Unit::Trigger(e) => {
                        mentions[e].trigger = span;
                        mentions[e].trigger_text = text;
                    }
                    Unit::Arg(e, i) => {
                        args[e][i] = Some(ArgumentMention {
                            span,
                            text,
                            role: events[e].1[i].as_str().into(),
                        })
                    }
                    Unit::Filler => {}
                }
            }
            for (m, a) in mentions.iter_mut().zip(args) {
                m.arguments = a.into_iter().flatten().collect();
                m.arguments.sort_by_key(|a| a.span);
            }
            mentions.sort_by(|a, b| a.trigger.cmp(&b.trigger));
            sentences.push(SentenceRecord {
                doc_id: doc_id.clone(),
                sent_id: format!("{doc_id}-{s:02}"),
                tokens,
                events: mentions,
            });
        }
    }
    Corpus::new(sentences, ontology.name.clone())
}

enum Unit {
    Trigger(usize),
    Arg(usize, usize),
    Filler,
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}
