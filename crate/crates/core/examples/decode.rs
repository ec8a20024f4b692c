//! Decode generated sentences back into span predictions, including
//! ambiguous arguments, multi-event output and outputs that do not parse.

use evtgen::corpus::{SentenceRecord, TokenSpan};
use evtgen::decoder::decode;
use evtgen::ontology::Ontology;
use evtgen::promptgen::{PromptConfig, Task};

fn main() -> evtgen::Result<()> {
    let ace = Ontology::ace05();
    let attack = ace.schema("Conflict:Attack")?;
    let sent = SentenceRecord {
        doc_id: "d".into(),
        sent_id: "s".into(),
        tokens: "Militants fired on troops in Basra ; troops later shelled the Militants camp"
            .split(' ')
            .map(String::from)
            .collect(),
        events: vec![],
    };
    println!("passage: {}", sent.passage());

    let e2e = PromptConfig::for_task(Task::E2e);
    let outputs = [
        "Event trigger is fired. Militants attacked troops by some way in Basra.",
        "Event trigger is fired. Militants attacked troops by some way in Basra. <sep> \
         Event trigger is shelled. troops attacked camp by some way in somewhere.",
        // lowercased fills still resolve through the case-folded fallback
        "Event trigger is FIRED. militants attacked some facility, someone, or some organization by some way in basra.",
        "the model wandered off and produced this",
    ];
    for out in outputs {
        let r = decode(out, &sent, attack, &e2e, None);
        println!("\n> {out}");
        for e in &r.events {
            let args: Vec<String> = e.arguments.iter().map(|a| format!("{}={}@{}", a.role, a.text, a.span)).collect();
            println!("  {} {:?}@{} [{}]", e.event_type, e.trigger_text, e.trigger, args.join(", "));
        }
        for d in &r.diagnostics {
            println!("  diagnostic {}: {}", d.code, d.detail);
        }
    }

    // argument extraction: the trigger is given and "troops" occurs twice,
    // so the copy nearest the trigger wins
    let eae = PromptConfig::for_task(Task::Eae);
    let r = decode("some attacker attacked troops by some way in somewhere.", &sent, attack, &eae, Some(TokenSpan::new(8, 9)));
    println!("\nEAE on \"shelled\": {:?}", r.events[0].arguments);
    Ok(())
}
