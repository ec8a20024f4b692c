//! Build prompts and training targets for one annotated sentence, then a
//! training set with sampled negatives.

use evtgen::corpus::{ArgumentMention, Corpus, EventMention, SentenceRecord, TokenSpan};
use evtgen::ontology::Ontology;
use evtgen::promptgen::{
    build_prompt, build_target, build_training_set, count_by_type, PromptConfig, Task, TrainingConfig,
};

fn sentence() -> SentenceRecord {
    let tokens: Vec<String> = "Rebels attacked the base in Kabul with rockets ."
        .split(' ')
        .map(String::from)
        .collect();
    let arg = |s: usize, role: &str| ArgumentMention {
        span: TokenSpan::new(s, s + 1),
        text: tokens[s].clone(),
        role: role.into(),
    };
    let event = EventMention {
        event_type: "Conflict:Attack".into(),
        trigger: TokenSpan::new(1, 2),
        trigger_text: "attacked".into(),
        arguments: vec![arg(0, "Attacker"), arg(3, "Target"), arg(5, "Place"), arg(7, "Instrument")],
    };
    SentenceRecord {
        doc_id: "news-1".into(),
        sent_id: "news-1-0".into(),
        tokens,
        events: vec![event],
    }
}

fn main() -> evtgen::Result<()> {
    let ace = Ontology::ace05();
    let sent = sentence();
    let attack = ace.schema("Conflict:Attack")?;
    let die = ace.schema("Life:Die")?;

    for task in [Task::E2e, Task::Ed, Task::Eae] {
        let cfg = PromptConfig::for_task(task);
        let trigger = (task == Task::Eae).then_some(sent.events[0].trigger);
        println!("== {task}");
        println!("input:\n{}", build_prompt(&sent, attack, &cfg, trigger)?);
        println!("target:\n{}", build_target(&sent, attack, &cfg, trigger)?.text);
        if task != Task::Eae {
            // a type with no gold event gets the bare template
            println!("negative target ({}):\n{}", die.event_type, build_target(&sent, die, &cfg, None)?.text);
        }
        println!();
    }

    let corpus = Corpus::new(vec![sent], "ace05");
    let tcfg = TrainingConfig { m: 4, seed: 1, ..Default::default() };
    let set = build_training_set(&corpus, &ace, &PromptConfig::default(), &tcfg)?;
    println!("{} training instances:", set.instances.len());
    for (ty, n) in count_by_type(&set.instances) {
        println!("  {ty}: {n}");
    }
    Ok(())
}
