//! Zero-shot keyword matching and lemmatized matching on text where some
//! triggers are inflected.

use evtgen::baselines::{lemma_ed, matching_ed, LemmaTable};
use evtgen::corpus::SentenceRecord;
use evtgen::ontology::Ontology;

fn main() -> evtgen::Result<()> {
    let ace = Ontology::ace05();
    let mut lemmas = LemmaTable::from_reader("# surface\tlemma\nfought\tfight\nwed\twedding\n".as_bytes())?;
    lemmas.insert("married", "marry");

    for text in [
        "The attack began at dawn",
        "Two attacks were reported and the couple married",
        "Officers arrested the suspect after the bombings",
    ] {
        let sent = SentenceRecord {
            doc_id: "d".into(),
            sent_id: "s".into(),
            tokens: text.split(' ').map(String::from).collect(),
            events: vec![],
        };
        let show = |events: Vec<evtgen::corpus::EventMention>| {
            events
                .iter()
                .map(|e| format!("{}:{:?}", e.event_type, e.trigger_text))
                .collect::<Vec<_>>()
                .join(" ")
        };
        println!("{text}");
        println!("  matching: {}", show(matching_ed(&sent, &ace)));
        println!("  lemma:    {}", show(lemma_ed(&sent, &ace, &lemmas)));
    }
    Ok(())
}
