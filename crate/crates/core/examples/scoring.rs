//! Score two prediction runs against gold and print a comparison table.

use evtgen::corpus::{ArgumentMention, Corpus, EventMention, SentenceRecord, TokenSpan};
use evtgen::decoder::PredictionRecord;
use evtgen::metrics::{score, score_matrix};

fn event(ty: &str, t: usize, args: &[(usize, &str)]) -> EventMention {
    EventMention {
        event_type: ty.into(),
        trigger: TokenSpan::new(t, t + 1),
        trigger_text: format!("w{t}"),
        arguments: args
            .iter()
            .map(|&(s, role)| ArgumentMention {
                span: TokenSpan::new(s, s + 1),
                text: format!("w{s}"),
                role: role.into(),
            })
            .collect(),
    }
}

fn record(sent: &str, events: Vec<EventMention>) -> PredictionRecord {
    PredictionRecord {
        doc_id: "d".into(),
        sent_id: sent.into(),
        events,
        diagnostics: vec![],
    }
}

fn main() {
    let tokens: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
    let gold = Corpus::new(
        vec![
            SentenceRecord {
                doc_id: "d".into(),
                sent_id: "0".into(),
                tokens: tokens.clone(),
                events: vec![event("Conflict:Attack", 2, &[(0, "Attacker"), (4, "Target")])],
            },
            SentenceRecord {
                doc_id: "d".into(),
                sent_id: "1".into(),
                tokens,
                events: vec![event("Life:Die", 5, &[(7, "Victim")])],
            },
        ],
        "ace05",
    );

    let good = vec![
        record("0", vec![event("Conflict:Attack", 2, &[(0, "Attacker"), (4, "Place")])]),
        record("1", vec![event("Life:Die", 5, &[(7, "Victim")])]),
    ];
    // right trigger, wrong type; plus a spurious event
    let weak = vec![
        record("0", vec![event("Life:Injure", 2, &[(0, "Agent")]), event("Conflict:Attack", 9, &[])]),
        record("1", vec![]),
    ];

    let report = score(&good, &gold, None);
    println!("{report}");
    print!("{}", report.to_csv());

    let matrix = score_matrix(&[("good".into(), good), ("weak".into(), weak)], &gold, None);
    println!("\n{}", matrix.to_text());
}
