//! Talk to an external generator over the line-delimited JSON protocol.
//!
//! The child process here is a tiny Python "model" that fills the trigger
//! slot with the first keyword found in the passage. Any program reading
//! `{"id", "inputs"}` lines on stdin and answering `{"id", "outputs"}` lines
//! works the same way; an HTTP service is used by passing its base URL.
//!
//!     cargo run --example remote_generator            # needs python3
//!     cargo run --example remote_generator -- http://127.0.0.1:8000

use evtgen::genio::{run_pipeline, ClientConfig, PipelineMode, RemoteClient};
use evtgen::metrics::score;
use evtgen::ontology::Ontology;
use evtgen::promptgen::PromptConfig;
use evtgen::synthetic::{synthetic_corpus, SyntheticConfig};

const KEYWORD_MODEL: &str = r#"
import json, sys

def generate(prompt):
    parts = prompt.split(" \n ")
    words = set(w.lower() for w in parts[0].split())
    template = parts[-1]
    for p in parts:
        if p.startswith("Similar triggers such as "):
            for kw in p[len("Similar triggers such as "):].rstrip(".").split(", "):
                if kw.lower() in words:
                    return template.replace("<Trigger>", kw, 1)
    return template

for line in sys.stdin:
    req = json.loads(line)
    out = {"id": req["id"], "outputs": [generate(p) for p in req["inputs"]]}
    print(json.dumps(out), flush=True)
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let endpoint = match std::env::args().nth(1) {
        Some(url) => url,
        None => {
            let script = dir.path().join("keyword_model.py");
            std::fs::write(&script, KEYWORD_MODEL)?;
            format!("python3 {}", script.display())
        }
    };

    let client = RemoteClient::new(ClientConfig {
        endpoint,
        batch_size: 32,
        max_in_flight: 2,
        ..Default::default()
    })?;
    if let Ok(h) = client.health() {
        println!("service {} reports {}", h.model, h.status);
    }

    let ace = Ontology::ace05();
    let gold = synthetic_corpus(&ace, &SyntheticConfig { docs: 20, seed: 5, ..Default::default() });
    let out = run_pipeline(&gold, &ace, &client, PipelineMode::E2e, &PromptConfig::default())?;
    let failed = out.raw.iter().filter(|r| r.error.is_some()).count();
    println!("{} generations, {failed} failed", out.raw.len());
    if let Some(hit) = out.raw.iter().find(|r| !r.output.contains("<Trigger>")) {
        println!("sample output for {}: {}", hit.instance.event_type, hit.output);
    }
    println!("{}", score(&out.predictions, &gold, None));
    Ok(())
}

