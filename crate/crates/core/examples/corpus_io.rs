//! Convert OneIE-style annotations, validate them against the ontology and
//! print corpus statistics.

use evtgen::corpus::{corpus_stats, oneie, Corpus};
use evtgen::ontology::Ontology;

const ONEIE: &str = r#"{"doc_id":"n1","sent_id":"n1-0","tokens":["Police","arrested","two","men","in","Lyon","."],"entity_mentions":[{"id":"e1","start":0,"end":1,"text":"Police","entity_type":"ORG"},{"id":"e2","start":2,"end":4,"text":"two men","entity_type":"PER"},{"id":"e3","start":5,"end":6,"text":"Lyon","entity_type":"GPE"}],"event_mentions":[{"event_type":"Justice:Arrest-Jail","trigger":{"start":1,"end":2,"text":"arrested"},"arguments":[{"entity_id":"e1","role":"Agent","text":"Police"},{"entity_id":"e2","role":"Person","text":"two men"},{"entity_id":"e3","role":"Place","text":"Lyon"}]}]}
{"doc_id":"n1","sent_id":"n1-1","tokens":["No","one","was","hurt","."],"entity_mentions":[],"event_mentions":[]}
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ace = Ontology::ace05();
    let sentences = oneie::convert(ONEIE.as_bytes())?;
    let corpus = Corpus::new(sentences, "ace05");
    corpus.validate(&ace)?;

    let mut jsonl = Vec::new();
    corpus.write_jsonl(&mut jsonl)?;
    print!("{}", String::from_utf8_lossy(&jsonl));

    let back = Corpus::from_reader(jsonl.as_slice(), &ace)?;
    assert_eq!(back, corpus);
    println!("\n{}", corpus_stats(&back));
    Ok(())
}
