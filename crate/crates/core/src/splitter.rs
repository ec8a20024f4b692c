//! Low-resource training splits.
//!
//! Splits are drawn by document. With coverage-greedy selection, documents
//! are picked one at a time by how many not-yet-covered event types they
//! add; once nothing new can be covered the rest is filled by event count.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::ontology::Ontology;
use crate::seed::derive_seed;

/// Proportions used for the low-resource grid.
pub const STANDARD_PROPORTIONS: [f64; 8] = [0.01, 0.02, 0.03, 0.05, 0.10, 0.20, 0.30, 0.50];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub proportion: f64,
    pub seed: u64,
    pub coverage_greedy: bool,
}

impl SplitConfig {
    pub fn new(proportion: f64) -> Self {
        SplitConfig {
            proportion,
            seed: 0,
            coverage_greedy: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub corpus: Corpus,
    /// Selected documents, in selection order.
    pub doc_ids: Vec<String>,
    /// Number of distinct event types covered after each pick.
    pub coverage_trace: Vec<usize>,
}

impl Split {
    pub fn covered_types(&self) -> usize {
        self.coverage_trace.last().copied().unwrap_or(0)
    }
}

/// Number of documents drawn for proportion `p` of `n_docs`.
pub fn split_size(p: f64, n_docs: usize) -> usize {
    if n_docs == 0 {
        return 0;
    }
    ((p * n_docs as f64).round() as usize).clamp(1, n_docs)
}

#[derive(Debug, Clone)]
pub(crate) struct DocProfile<'a> {
    pub doc_id: &'a str,
    pub types: BTreeSet<&'a str>,
    pub events: usize,
}

pub(crate) fn doc_profiles(corpus: &Corpus) -> Vec<DocProfile<'_>> {
    let mut order = Vec::new();
    let mut by_doc: BTreeMap<&str, DocProfile<'_>> = BTreeMap::new();
    for s in &corpus.sentences {
        let p = by_doc.entry(s.doc_id.as_str()).or_insert_with(|| {
            order.push(s.doc_id.as_str());
            DocProfile {
                doc_id: s.doc_id.as_str(),
                types: BTreeSet::new(),
                events: 0,
            }
        });
        p.events += s.events.len();
        p.types.extend(s.events.iter().map(|e| e.event_type.as_str()));
    }
    order
        .into_iter()
        .map(|d| by_doc.remove(d).expect("profile exists"))
        .collect()
}

/// Greedy maximum-coverage selection of `n` documents. Returns indices into
/// `docs` in selection order.
pub(crate) fn greedy_select(docs: &[DocProfile<'_>], n: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(n);
    let mut taken = vec![false; docs.len()];
    let mut covered: BTreeSet<&str> = BTreeSet::new();
    while chosen.len() < n {
        let best = (0..docs.len()).filter(|&i| !taken[i]).max_by_key(|&i| {
            let gain = docs[i].types.difference(&covered).count();
            (gain, docs[i].events, Reverse(docs[i].doc_id))
        });
        let Some(i) = best else { break };
        if docs[i].types.difference(&covered).next().is_none() {
            break;
        }
        taken[i] = true;
        covered.extend(docs[i].types.iter().copied());
        chosen.push(i);
    }
    let mut rest: Vec<usize> = (0..docs.len()).filter(|&i| !taken[i]).collect();
    rest.sort_by_key(|&i| (Reverse(docs[i].events), docs[i].doc_id));
    chosen.extend(rest.into_iter().take(n - chosen.len()));
    chosen
}

pub fn make_split(corpus: &Corpus, cfg: &SplitConfig) -> Result<Split> {
    if !(cfg.proportion > 0.0 && cfg.proportion <= 1.0) {
        return Err(Error::Config(format!(
            "split proportion must be in (0, 1], got {}",
            cfg.proportion
        )));
    }
    let docs = doc_profiles(corpus);
    if docs.is_empty() {
        return Err(Error::Config("cannot split a corpus with no documents".into()));
    }
    let n = split_size(cfg.proportion, docs.len());
    let picked: Vec<usize> = if cfg.coverage_greedy {
        greedy_select(&docs, n)
    } else {
        let mut idx: Vec<usize> = (0..docs.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
        idx.truncate(n);
        idx
    };

    let mut covered = BTreeSet::new();
    let coverage_trace = picked
        .iter()
        .map(|&i| {
            covered.extend(docs[i].types.iter().copied());
            covered.len()
        })
        .collect();
    let doc_ids: Vec<String> = picked.iter().map(|&i| docs[i].doc_id.to_string()).collect();
    let keep: HashSet<&str> = doc_ids.iter().map(String::as_str).collect();
    let sentences = corpus
        .sentences
        .iter()
        .filter(|s| keep.contains(s.doc_id.as_str()))
        .cloned()
        .collect();
    Ok(Split {
        corpus: Corpus::new(sentences, corpus.ontology_id.clone()),
        doc_ids,
        coverage_trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotConfig {
    /// The `n_common` most frequent types are "seen".
    pub n_common: usize,
    /// Mentions kept per unseen type; zero means zero-shot.
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FewShotSplit {
    pub train: Corpus,
    pub seen: BTreeSet<String>,
    pub unseen: BTreeSet<String>,
}

/// Event types ranked by frequency in `corpus` (ties by name), including
/// ontology types that never occur.
pub fn types_by_frequency(corpus: &Corpus, ontology: &Ontology) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = ontology.event_types().map(|t| (t, 0)).collect();
    for s in &corpus.sentences {
        for e in &s.events {
            *counts.entry(e.event_type.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> =
        counts.into_iter().map(|(t, c)| (t.to_string(), c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

pub fn few_shot_filter(corpus: &Corpus, ontology: &Ontology, cfg: &FewShotConfig) -> FewShotSplit {
    let ranked = types_by_frequency(corpus, ontology);
    let seen: BTreeSet<String> = ranked.iter().take(cfg.n_common).map(|(t, _)| t.clone()).collect();
    let unseen: BTreeSet<String> = ranked
        .iter()
        .map(|(t, _)| t.clone())
        .filter(|t| !seen.contains(t))
        .collect();

    // (sentence, event) positions per unseen type, in corpus order
    let mut positions: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
    for (si, s) in corpus.sentences.iter().enumerate() {
        for (ei, e) in s.events.iter().enumerate() {
            if unseen.contains(&e.event_type) {
                positions.entry(e.event_type.as_str()).or_default().push((si, ei));
            }
        }
    }
    let mut keep: HashSet<(usize, usize)> = HashSet::new();
    for (ty, pos) in &positions {
        let amount = cfg.k.min(pos.len());
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[ty]));
        for i in rand::seq::index::sample(&mut rng, pos.len(), amount) {
            keep.insert(pos[i]);
        }
    }

    let sentences = corpus
        .sentences
        .iter()
        .enumerate()
        .map(|(si, s)| {
            let mut s = s.clone();
            s.events = s
                .events
                .into_iter()
                .enumerate()
                .filter(|(ei, e)| seen.contains(&e.event_type) || keep.contains(&(si, *ei)))
                .map(|(_, e)| e)
                .collect();
            s
        })
        .collect();
    FewShotSplit {
        train: Corpus::new(sentences, corpus.ontology_id.clone()),
        seen,
        unseen,
    }
}

/// Keeps only gold events of the given types (for unseen-only scoring).
pub fn eval_filter(corpus: &Corpus, unseen_types: &BTreeSet<String>) -> Corpus {
    let sentences = corpus
        .sentences
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.events.retain(|e| unseen_types.contains(&e.event_type));
            s
        })
        .collect();
    Corpus::new(sentences, corpus.ontology_id.clone())
}
