//! Trigger and argument precision/recall/F1.
//!
//! | metric | a prediction counts when it matches gold on |
//! |--------|---------------------------------------------|
//! | Tri-I  | trigger span                                |
//! | Tri-C  | trigger span, event type                    |
//! | Arg-I  | argument span, event type                   |
//! | Arg-C  | argument span, event type, role             |
//!
//! Matching is one-to-one within a sentence; counts are summed over the
//! corpus (micro average).

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::corpus::{Corpus, EventMention};
use crate::decoder::PredictionRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Metric {
    #[serde(rename = "Tri-I")]
    TriI,
    #[serde(rename = "Tri-C")]
    TriC,
    #[serde(rename = "Arg-I")]
    ArgI,
    #[serde(rename = "Arg-C")]
    ArgC,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::TriI, Metric::TriC, Metric::ArgI, Metric::ArgC];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TriI => "Tri-I",
            Metric::TriC => "Tri-C",
            Metric::ArgI => "Arg-I",
            Metric::ArgC => "Arg-C",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp, self.fn_)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_, self.fp)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

/// num/den, with 0/0 read as 1 only when the other side has no errors either.
fn ratio(num: usize, den: usize, other_errors: usize) -> f64 {
    if den == 0 {
        if other_errors == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ScoreReport {
    pub tri_i: Counts,
    pub tri_c: Counts,
    pub arg_i: Counts,
    pub arg_c: Counts,
    pub sentences: usize,
    /// Prediction keys absent from the gold corpus.
    pub structural_errors: Vec<String>,
}

impl ScoreReport {
    pub fn counts(&self, m: Metric) -> Counts {
        match m {
            Metric::TriI => self.tri_i,
            Metric::TriC => self.tri_c,
            Metric::ArgI => self.arg_i,
            Metric::ArgC => self.arg_c,
        }
    }

    fn counts_mut(&mut self, m: Metric) -> &mut Counts {
        match m {
            Metric::TriI => &mut self.tri_i,
            Metric::TriC => &mut self.tri_c,
            Metric::ArgI => &mut self.arg_i,
            Metric::ArgC => &mut self.arg_c,
        }
    }

    pub fn f1(&self, m: Metric) -> f64 {
        self.counts(m).f1()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut metrics = serde_json::Map::new();
        for m in Metric::ALL {
            let c = self.counts(m);
            metrics.insert(
                m.name().to_string(),
                serde_json::json!({
                    "tp": c.tp, "fp": c.fp, "fn": c.fn_,
                    "precision": c.precision(), "recall": c.recall(), "f1": c.f1(),
                }),
            );
        }
        serde_json::json!({
            "metrics": metrics,
            "sentences": self.sentences,
            "structural_errors": self.structural_errors,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,tp,fp,fn,precision,recall,f1\n");
        for m in Metric::ALL {
            let c = self.counts(m);
            out.push_str(&format!(
                "{},{},{},{},{:.6},{:.6},{:.6}\n",
                m,
                c.tp,
                c.fp,
                c.fn_,
                c.precision(),
                c.recall(),
                c.f1()
            ));
        }
        out
    }
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<6} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}", "", "tp", "fp", "fn", "P", "R", "F1")?;
        for m in Metric::ALL {
            let c = self.counts(m);
            writeln!(
                f,
                "{:<6} {:>7} {:>7} {:>7} {:>7.2} {:>7.2} {:>7.2}",
                m.name(),
                c.tp,
                c.fp,
                c.fn_,
                100.0 * c.precision(),
                100.0 * c.recall(),
                100.0 * c.f1()
            )?;
        }
        for e in &self.structural_errors {
            writeln!(f, "error: {e}")?;
        }
        Ok(())
    }
}

type Key = (usize, usize, String, String);

fn keys(events: &[&EventMention], m: Metric) -> Vec<Key> {
    let mut out = Vec::new();
    for e in events {
        let (s, t) = (e.trigger.start, e.trigger.end);
        match m {
            Metric::TriI => out.push((s, t, String::new(), String::new())),
            Metric::TriC => out.push((s, t, e.event_type.clone(), String::new())),
            Metric::ArgI | Metric::ArgC => {
                for a in &e.arguments {
                    let role = if m == Metric::ArgC {
                        a.role.to_string()
                    } else {
                        String::new()
                    };
                    out.push((a.span.start, a.span.end, e.event_type.clone(), role));
                }
            }
        }
    }
    out
}

/// One-to-one equality matching of two multisets of keys.
pub fn match_counts<K: std::hash::Hash + Eq>(pred: impl IntoIterator<Item = K>, gold: impl IntoIterator<Item = K>) -> Counts {
    let mut bag: HashMap<K, (usize, usize)> = HashMap::new();
    for k in pred {
        bag.entry(k).or_default().0 += 1;
    }
    for k in gold {
        bag.entry(k).or_default().1 += 1;
    }
    let mut c = Counts::default();
    for (p, g) in bag.into_values() {
        let tp = p.min(g);
        c.tp += tp;
        c.fp += p - tp;
        c.fn_ += g - tp;
    }
    c
}

/// Scores `preds` against `gold`, optionally only over `restrict_types`.
pub fn score(preds: &[PredictionRecord], gold: &Corpus, restrict_types: Option<&BTreeSet<String>>) -> ScoreReport {
    let keep = |e: &&EventMention| restrict_types.is_none_or(|r| r.contains(&e.event_type));
    let mut by_key: HashMap<(&str, &str), Vec<&EventMention>> = HashMap::new();
    for r in preds {
        by_key
            .entry((r.doc_id.as_str(), r.sent_id.as_str()))
            .or_default()
            .extend(r.events.iter().filter(keep));
    }

    let mut report = ScoreReport {
        sentences: gold.len(),
        ..Default::default()
    };
    for s in &gold.sentences {
        let g: Vec<&EventMention> = s.events.iter().filter(keep).collect();
        let p = by_key
            .remove(&(s.doc_id.as_str(), s.sent_id.as_str()))
            .unwrap_or_default();
        for m in Metric::ALL {
            report.counts_mut(m).add(match_counts(keys(&p, m), keys(&g, m)));
        }
    }

    let mut unknown: Vec<_> = by_key.into_iter().collect();
    unknown.sort_by_key(|((d, s), _)| (*d, *s));
    for ((doc, sent), events) in unknown {
        report
            .structural_errors
            .push(format!("prediction for unknown sentence {doc}/{sent}"));
        for m in Metric::ALL {
            report.counts_mut(m).fp += keys(&events, m).len();
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub rows: Vec<(String, ScoreReport)>,
}

pub fn score_matrix(
    runs: &[(String, Vec<PredictionRecord>)],
    gold: &Corpus,
    restrict_types: Option<&BTreeSet<String>>,
) -> ScoreMatrix {
    ScoreMatrix {
        rows: runs
            .iter()
            .map(|(label, preds)| (label.clone(), score(preds, gold, restrict_types)))
            .collect(),
    }
}

impl ScoreMatrix {
    /// F1 (in percent) per run and metric.
    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(3);
        let mut out = format!("{:<width$}", "run");
        for m in Metric::ALL {
            out.push_str(&format!(" {:>7}", m.name()));
        }
        out.push('\n');
        for (label, r) in &self.rows {
            out.push_str(&format!("{label:<width$}"));
            for m in Metric::ALL {
                out.push_str(&format!(" {:>7.2}", 100.0 * r.f1(m)));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("run");
        for m in Metric::ALL {
            out.push_str(&format!(",{m}_p,{m}_r,{m}_f1"));
        }
        out.push('\n');
        for (label, r) in &self.rows {
            out.push_str(label);
            for m in Metric::ALL {
                let c = r.counts(m);
                out.push_str(&format!(",{:.6},{:.6},{:.6}", c.precision(), c.recall(), c.f1()));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ArgumentMention, SentenceRecord, TokenSpan};
    use crate::ontology::RoleId;

    fn ev(ty: &str, s: usize, args: &[(usize, &str)]) -> EventMention {
        EventMention {
            event_type: ty.into(),
            trigger: TokenSpan::new(s, s + 1),
            trigger_text: format!("t{s}"),
            arguments: args
                .iter()
                .map(|(a, r)| ArgumentMention {
                    span: TokenSpan::new(*a, a + 1),
                    text: format!("t{a}"),
                    role: RoleId::from(*r),
                })
                .collect(),
        }
    }

    fn gold(events: Vec<EventMention>) -> Corpus {
        Corpus::new(
            vec![SentenceRecord {
                doc_id: "d".into(),
                sent_id: "s".into(),
                tokens: (0..20).map(|i| format!("t{i}")).collect(),
                events,
            }],
            "test",
        )
    }

    fn pred(events: Vec<EventMention>) -> Vec<PredictionRecord> {
        vec![PredictionRecord {
            doc_id: "d".into(),
            sent_id: "s".into(),
            events,
            diagnostics: vec![],
        }]
    }

    #[test]
    fn identical_is_perfect() {
        let e = vec![ev("A", 1, &[(2, "R")]), ev("B", 5, &[])];
        let r = score(&pred(e.clone()), &gold(e), None);
        for m in Metric::ALL {
            assert_eq!(r.f1(m), 1.0);
        }
    }

    #[test]
    fn two_of_three_against_four() {
        let g = gold(vec![ev("A", 1, &[]), ev("A", 2, &[]), ev("A", 3, &[]), ev("A", 4, &[])]);
        let p = pred(vec![ev("A", 1, &[]), ev("A", 2, &[]), ev("B", 9, &[])]);
        let c = score(&p, &g, None).tri_c;
        assert_eq!((c.tp, c.fp, c.fn_), (2, 1, 2));
        assert!((c.precision() - 2.0 / 3.0).abs() < 1e-12);
        assert!((c.recall() - 0.5).abs() < 1e-12);
        assert!((c.f1() - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn zero_conventions() {
        let r = score(&pred(vec![]), &gold(vec![]), None);
        assert_eq!((r.tri_c.precision(), r.tri_c.recall(), r.tri_c.f1()), (1.0, 1.0, 1.0));
        let r = score(&pred(vec![]), &gold(vec![ev("A", 1, &[])]), None);
        assert_eq!((r.tri_c.precision(), r.tri_c.recall(), r.tri_c.f1()), (0.0, 0.0, 0.0));
        let r = score(&pred(vec![ev("A", 1, &[])]), &gold(vec![]), None);
        assert_eq!((r.tri_c.precision(), r.tri_c.recall()), (0.0, 0.0));
    }

    #[test]
    fn type_and_role_sensitivity() {
        let g = gold(vec![ev("A", 1, &[(2, "R")])]);
        let r = score(&pred(vec![ev("B", 1, &[(2, "Q")])]), &g, None);
        assert_eq!(r.tri_i.tp, 1);
        assert_eq!(r.tri_c.tp, 0);
        assert_eq!(r.arg_i.tp, 0);
        let r = score(&pred(vec![ev("A", 7, &[(2, "Q")])]), &g, None);
        assert_eq!(r.arg_i.tp, 1);
        assert_eq!(r.arg_c.tp, 0);
    }

    #[test]
    fn duplicates_match_once() {
        let g = gold(vec![ev("A", 1, &[])]);
        let r = score(&pred(vec![ev("A", 1, &[]), ev("A", 1, &[])]), &g, None);
        assert_eq!((r.tri_c.tp, r.tri_c.fp), (1, 1));
    }

    #[test]
    fn unknown_sentence_is_structural_error() {
        let g = gold(vec![]);
        let mut p = pred(vec![]);
        p.push(PredictionRecord {
            doc_id: "x".into(),
            sent_id: "y".into(),
            events: vec![ev("A", 1, &[(2, "R")])],
            diagnostics: vec![],
        });
        let r = score(&p, &g, None);
        assert_eq!(r.structural_errors.len(), 1);
        assert_eq!(r.tri_i.fp, 1);
        assert_eq!(r.arg_c.fp, 1);
    }

    #[test]
    fn restrict_types() {
        let g = gold(vec![ev("A", 1, &[]), ev("B", 2, &[])]);
        let p = pred(vec![ev("A", 1, &[])]);
        let only_a: BTreeSet<String> = ["A".to_string()].into();
        assert_eq!(score(&p, &g, Some(&only_a)).f1(Metric::TriC), 1.0);
        assert!(score(&p, &g, None).f1(Metric::TriC) < 1.0);
    }

    #[test]
    fn matrix_rows() {
        let g = gold(vec![ev("A", 1, &[])]);
        let runs: Vec<(String, Vec<PredictionRecord>)> = ["1%", "2%", "3%", "5%", "10%", "20%", "30%", "50%"]
            .iter()
            .map(|l| (l.to_string(), pred(vec![ev("A", 1, &[])])))
            .collect();
        let mx = score_matrix(&runs, &g, None);
        assert_eq!(mx.rows.len(), 8);
        let text = mx.to_text();
        assert!(text.lines().nth(1).unwrap().starts_with("1%"));
        assert_eq!(mx.to_csv().lines().count(), 9);
        assert_eq!(mx.rows[3].1, score(&runs[3].1, &g, None));
    }
}
