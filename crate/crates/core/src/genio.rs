//! Generators and the end-to-end inference driver.
//!
//! A [`Generator`] maps prompt instances to output strings, one per
//! instance and in the same order. [`OracleGenerator`] emits the gold
//! target (optionally corrupted); [`RemoteClient`] talks to a model
//! service over HTTP or a child process's stdin/stdout using one JSON
//! object per line:
//!
//! ```text
//! -> {"id": "3-0", "inputs": ["...", "..."]}
//! <- {"id": "3-0", "outputs": ["...", "..."]}
//! ```

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::distr::Alphanumeric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EventPrediction, SentenceRecord, TokenSpan};
use crate::decoder::{decode, Diagnostic, DiagnosticCode, PredictionRecord};
use crate::error::{Error, Result};
use crate::ontology::Ontology;
use crate::promptgen::{build_inference_set, target_fills, PromptConfig, PromptInstance, Task, TriggerTable};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Generation {
    pub output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Generation {
    pub fn ok(output: impl Into<String>) -> Self {
        Generation {
            output: output.into(),
            error: None,
        }
    }

    pub fn failed(error: impl Into<String>) -> Self {
        Generation {
            output: String::new(),
            error: Some(error.into()),
        }
    }
}

pub trait Generator: Sync {
    fn name(&self) -> String;

    /// Exactly one generation per instance, in order. Failures are reported
    /// per item, never by shortening the result.
    fn generate(&self, batch: &[PromptInstance]) -> Vec<Generation>;
}

/// Probabilities of damaging the oracle's output, for robustness checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Corruption {
    /// Per filled slot: reset it to its placeholder.
    pub drop_slot: f64,
    /// Per filled value: swap the case of every character.
    pub recase: f64,
    /// Per output: replace it with random alphanumerics.
    pub garble: f64,
    pub seed: u64,
}

impl Corruption {
    pub fn is_off(&self) -> bool {
        self.drop_slot <= 0.0 && self.recase <= 0.0 && self.garble <= 0.0
    }

    fn validate(&self) -> Result<()> {
        for (name, p) in [("drop_slot", self.drop_slot), ("recase", self.recase), ("garble", self.garble)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} probability {p} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

pub struct OracleGenerator {
    sentences: HashMap<(String, String), SentenceRecord>,
    ontology: Ontology,
    prompt: PromptConfig,
    corruption: Corruption,
}

impl OracleGenerator {
    pub fn new(gold: &Corpus, ontology: &Ontology, prompt: &PromptConfig) -> Self {
        OracleGenerator {
            sentences: gold.sentences.iter().map(|s| (s.key(), s.clone())).collect(),
            ontology: ontology.clone(),
            prompt: prompt.clone(),
            corruption: Corruption::default(),
        }
    }

    pub fn with_corruption(mut self, corruption: Corruption) -> Result<Self> {
        corruption.validate()?;
        self.corruption = corruption;
        Ok(self)
    }

    fn generate_one(&self, inst: &PromptInstance) -> Generation {
        let Some(sent) = self
            .sentences
            .get(&(inst.doc_id.clone(), inst.sent_id.clone()))
        else {
            return Generation::failed(format!(
                "instance not traceable to a gold sentence: {}/{}",
                inst.doc_id, inst.sent_id
            ));
        };
        let Some(schema) = self.ontology.get(&inst.event_type) else {
            return Generation::failed(format!("unknown event type {}", inst.event_type));
        };
        let cfg = PromptConfig {
            task: inst.task,
            ..self.prompt.clone()
        };
        let mut fills = match target_fills(sent, schema, &cfg, inst.trigger) {
            Ok(f) => f,
            Err(e) => return Generation::failed(e.to_string()),
        };
        let c = &self.corruption;
        if c.is_off() {
            return Generation::ok(fills.render(&cfg));
        }

        let task = inst.task.to_string();
        let trigger = inst.trigger.map(|t| t.to_string()).unwrap_or_default();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            c.seed,
            &[&inst.doc_id, &inst.sent_id, &inst.event_type, &task, &trigger],
        ));
        if c.garble > 0.0 && rng.random_bool(c.garble) {
            let n = rng.random_range(8..40);
            return Generation::ok((&mut rng).sample_iter(Alphanumeric).take(n).map(char::from).collect::<String>());
        }
        for values in fills.chunks.iter_mut().flatten() {
            if !values.is_empty() && c.drop_slot > 0.0 && rng.random_bool(c.drop_slot) {
                values.clear();
            }
            for v in values.iter_mut() {
                if c.recase > 0.0 && rng.random_bool(c.recase) {
                    *v = swap_case(v);
                }
            }
        }
        Generation::ok(fills.render(&cfg))
    }
}

fn swap_case(s: &str) -> String {
    s.chars()
        .flat_map(|c| {
            if c.is_uppercase() {
                c.to_lowercase().collect::<Vec<_>>()
            } else {
                c.to_uppercase().collect::<Vec<_>>()
            }
        })
        .collect()
}

impl Generator for OracleGenerator {
    fn name(&self) -> String {
        if self.corruption.is_off() {
            "oracle".into()
        } else {
            format!("oracle{:?}", self.corruption)
        }
    }

    fn generate(&self, batch: &[PromptInstance]) -> Vec<Generation> {
        batch.par_iter().map(|i| self.generate_one(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub id: String,
    pub inputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub id: String,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthStatus {
    pub status: String,
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// Base URL; requests go to `<base>/generate` and `<base>/health`.
    Http(String),
    /// Program and arguments of a child process speaking the protocol on
    /// its standard streams.
    Process(Vec<String>),
}

impl Endpoint {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with("http://") || s.starts_with("https://") {
            let base = s.trim_end_matches('/');
            let base = base.strip_suffix("/generate").unwrap_or(base);
            return Ok(Endpoint::Http(base.to_string()));
        }
        let argv: Vec<String> = s.split_whitespace().map(String::from).collect();
        if argv.is_empty() {
            return Err(Error::Config("empty generator endpoint".into()));
        }
        Ok(Endpoint::Process(argv))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientConfig {
    /// `http://host:port` or a command line such as `python3 serve.py`.
    pub endpoint: String,
    pub batch_size: usize,
    pub timeout_secs: f64,
    pub max_in_flight: usize,
    pub retries: u32,
    /// First retry delay; doubled on each further attempt.
    pub backoff_ms: u64,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            endpoint: "http://127.0.0.1:8000".into(),
            batch_size: 16,
            timeout_secs: 60.0,
            max_in_flight: 4,
            retries: 2,
            backoff_ms: 200,
        }
    }
}

impl ClientConfig {
    pub fn validate(&self) -> Result<Endpoint> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.max_in_flight == 0 {
            return Err(Error::Config("max_in_flight must be at least 1".into()));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(Error::Config("timeout_secs must be positive".into()));
        }
        Endpoint::parse(&self.endpoint)
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

trait Transport {
    fn call(&mut self, req: &GenerateRequest) -> std::result::Result<GenerateResponse, String>;

    /// Drops connection state after a failure.
    fn reset(&mut self) {}
}

struct HttpTransport {
    agent: ureq::Agent,
    url: String,
}

impl Transport for HttpTransport {
    fn call(&mut self, req: &GenerateRequest) -> std::result::Result<GenerateResponse, String> {
        let body = serde_json::to_string(req).map_err(|e| e.to_string())?;
        let mut resp = self
            .agent
            .post(&self.url)
            .header("content-type", "application/json")
            .send(body.as_bytes())
            .map_err(|e| format!("request failed: {e}"))?;
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| format!("reading response: {e}"))?;
        serde_json::from_str(&text).map_err(|e| format!("malformed response: {e}"))
    }
}

struct ChildProc {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Drop for ChildProc {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

struct StdioTransport {
    argv: Vec<String>,
    timeout: Duration,
    proc: Option<ChildProc>,
}

impl StdioTransport {
    fn spawn(&self) -> std::result::Result<ChildProc, String> {
        let mut child = Command::new(&self.argv[0])
            .args(&self.argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| format!("spawning {:?}: {e}", self.argv[0]))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ChildProc {
            child,
            stdin,
            lines: rx,
        })
    }
}

impl Transport for StdioTransport {
    fn call(&mut self, req: &GenerateRequest) -> std::result::Result<GenerateResponse, String> {
        if self.proc.is_none() {
            self.proc = Some(self.spawn()?);
        }
        let proc = self.proc.as_mut().expect("spawned above");
        let mut line = serde_json::to_string(req).map_err(|e| e.to_string())?;
        line.push('\n');
        proc.stdin
            .write_all(line.as_bytes())
            .and_then(|_| proc.stdin.flush())
            .map_err(|e| format!("writing to child: {e}"))?;
        let deadline = Instant::now() + self.timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match proc.lines.recv_timeout(left) {
                Ok(Ok(text)) => {
                    if text.trim().is_empty() {
                        continue;
                    }
                    let resp: GenerateResponse =
                        serde_json::from_str(&text).map_err(|e| format!("malformed response: {e}"))?;
                    // answers to abandoned attempts may still arrive
                    if resp.id == req.id {
                        return Ok(resp);
                    }
                }
                Ok(Err(e)) => return Err(format!("reading from child: {e}")),
                Err(RecvTimeoutError::Timeout) => return Err("timed out".into()),
                Err(RecvTimeoutError::Disconnected) => return Err("child process closed its output".into()),
            }
        }
    }

    fn reset(&mut self) {
        self.proc = None;
    }
}

pub struct RemoteClient {
    cfg: ClientConfig,
    endpoint: Endpoint,
    agent: ureq::Agent,
}

impl RemoteClient {
    pub fn new(cfg: ClientConfig) -> Result<Self> {
        let endpoint = cfg.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout()))
            .build()
            .new_agent();
        Ok(RemoteClient { cfg, endpoint, agent })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.cfg
    }

    pub fn health(&self) -> Result<HealthStatus> {
        let Endpoint::Http(base) = &self.endpoint else {
            return Err(Error::Generator("health checks need an HTTP endpoint".into()));
        };
        let mut resp = self
            .agent
            .get(format!("{base}/health"))
            .call()
            .map_err(|e| Error::Generator(format!("health check: {e}")))?;
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Generator(format!("health check: {e}")))?;
        serde_json::from_str(&text).map_err(|e| Error::Generator(format!("malformed health response: {e}")))
    }

    fn transport(&self) -> Box<dyn Transport> {
        match &self.endpoint {
            Endpoint::Http(base) => Box::new(HttpTransport {
                agent: self.agent.clone(),
                url: format!("{base}/generate"),
            }),
            Endpoint::Process(argv) => Box::new(StdioTransport {
                argv: argv.clone(),
                timeout: self.cfg.timeout(),
                proc: None,
            }),
        }
    }

    fn run_batch(&self, t: &mut dyn Transport, idx: usize, inputs: &[String]) -> Vec<Generation> {
        let mut last_err = String::new();
        for attempt in 0..=self.cfg.retries {
            let req = GenerateRequest {
                id: format!("{idx}-{attempt}"),
                inputs: inputs.to_vec(),
            };
            let outcome = t.call(&req).and_then(|resp| {
                if resp.id != req.id {
                    Err(format!("protocol error: response id {:?} for request {:?}", resp.id, req.id))
                } else if resp.outputs.len() != inputs.len() {
                    Err(format!(
                        "protocol error: {} outputs for {} inputs",
                        resp.outputs.len(),
                        inputs.len()
                    ))
                } else {
                    Ok(resp.outputs)
                }
            });
            match outcome {
                Ok(outputs) => return outputs.into_iter().map(Generation::ok).collect(),
                Err(e) => {
                    log::warn!("batch {idx} attempt {attempt}: {e}");
                    last_err = e;
                    t.reset();
                    if attempt < self.cfg.retries {
                        std::thread::sleep(Duration::from_millis(self.cfg.backoff_ms.saturating_mul(1 << attempt.min(16))));
                    }
                }
            }
        }
        let note = format!("batch {idx} failed after {} attempts: {last_err}", self.cfg.retries + 1);
        vec![Generation::failed(note); inputs.len()]
    }

    /// Sends `inputs` in batches, at most `max_in_flight` at a time.
    pub fn generate_strings(&self, inputs: &[String]) -> Vec<Generation> {
        let batches: Vec<&[String]> = inputs.chunks(self.cfg.batch_size).collect();
        let results: Mutex<Vec<Option<Vec<Generation>>>> = Mutex::new(vec![None; batches.len()]);
        let next = AtomicUsize::new(0);
        let workers = self.cfg.max_in_flight.min(batches.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| {
                    let mut t = self.transport();
                    loop {
                        let idx = next.fetch_add(1, Ordering::SeqCst);
                        let Some(batch) = batches.get(idx) else { break };
                        let out = self.run_batch(t.as_mut(), idx, batch);
                        results.lock().expect("result lock")[idx] = Some(out);
                    }
                });
            }
        });
        results
            .into_inner()
            .expect("result lock")
            .into_iter()
            .flat_map(|r| r.expect("every batch is processed"))
            .collect()
    }
}

impl Generator for RemoteClient {
    fn name(&self) -> String {
        format!("remote:{}", self.cfg.endpoint)
    }

    fn generate(&self, batch: &[PromptInstance]) -> Vec<Generation> {
        let inputs: Vec<String> = batch.iter().map(|i| i.input.clone()).collect();
        self.generate_strings(&inputs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineMode {
    /// One pass filling the joint trigger+argument template.
    #[default]
    E2e,
    /// Detection pass, then argument extraction on the detected triggers.
    Pipeline,
    /// Argument extraction on gold triggers.
    GoldTriggerEae,
}

/// A generated output with the instance that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGeneration {
    #[serde(flatten)]
    pub instance: PromptInstance,
    pub output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn generate_all(generator: &dyn Generator, instances: Vec<PromptInstance>) -> Vec<RawGeneration> {
    let mut gens = generator.generate(&instances);
    if gens.len() != instances.len() {
        log::error!(
            "generator {} returned {} outputs for {} instances",
            generator.name(),
            gens.len(),
            instances.len()
        );
        gens = vec![Generation::failed("generator returned the wrong number of outputs"); instances.len()];
    }
    instances
        .into_iter()
        .zip(gens)
        .map(|(instance, g)| RawGeneration {
            instance,
            output: g.output,
            error: g.error,
        })
        .collect()
}

/// Trigger anchors from predictions, for a second argument pass.
pub fn triggers_from_predictions(preds: &[PredictionRecord]) -> TriggerTable {
    let mut table: HashMap<(String, String), Vec<(String, TokenSpan)>> = HashMap::new();
    for r in preds {
        let entry = table.entry(r.key()).or_default();
        entry.extend(r.events.iter().map(|e| (e.event_type.clone(), e.trigger)));
    }
    for v in table.values_mut() {
        v.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        v.dedup();
    }
    TriggerTable(table)
}

/// Runs the generation passes of `mode` and returns every raw output.
pub fn generate_pipeline(
    corpus: &Corpus,
    ontology: &Ontology,
    generator: &dyn Generator,
    mode: PipelineMode,
    prompt: &PromptConfig,
) -> Result<Vec<RawGeneration>> {
    let with_task = |task| PromptConfig {
        task,
        ..prompt.clone()
    };
    match mode {
        PipelineMode::E2e => {
            let inst = build_inference_set(corpus, ontology, &with_task(Task::E2e), None)?;
            Ok(generate_all(generator, inst))
        }
        PipelineMode::Pipeline => {
            let inst = build_inference_set(corpus, ontology, &with_task(Task::Ed), None)?;
            let mut raw = generate_all(generator, inst);
            let detected = decode_generations(&raw, corpus, ontology, prompt);
            let table = triggers_from_predictions(&detected);
            let inst = build_inference_set(corpus, ontology, &with_task(Task::Eae), Some(&table))?;
            raw.extend(generate_all(generator, inst));
            Ok(raw)
        }
        PipelineMode::GoldTriggerEae => {
            let table = TriggerTable::from_gold(corpus);
            let inst = build_inference_set(corpus, ontology, &with_task(Task::Eae), Some(&table))?;
            Ok(generate_all(generator, inst))
        }
    }
}

struct Decoded {
    key: (String, String),
    task: Task,
    events: Vec<EventPrediction>,
    diagnostics: Vec<Diagnostic>,
}

fn decode_one(
    raw: &RawGeneration,
    index: &HashMap<(&str, &str), &SentenceRecord>,
    ontology: &Ontology,
    prompt: &PromptConfig,
) -> Decoded {
    let inst = &raw.instance;
    let mut d = Decoded {
        key: (inst.doc_id.clone(), inst.sent_id.clone()),
        task: inst.task,
        events: Vec::new(),
        diagnostics: Vec::new(),
    };
    let Some(sent) = index.get(&(inst.doc_id.as_str(), inst.sent_id.as_str())) else {
        d.diagnostics.push(Diagnostic::new(
            DiagnosticCode::UnknownSentence,
            format!("{}/{}", inst.doc_id, inst.sent_id),
        ));
        return d;
    };
    let Some(schema) = ontology.get(&inst.event_type) else {
        d.diagnostics.push(Diagnostic::new(
            DiagnosticCode::UnmatchedString,
            format!("unknown event type {}", inst.event_type),
        ));
        return d;
    };
    if let Some(err) = &raw.error {
        d.diagnostics.push(Diagnostic::new(
            DiagnosticCode::GeneratorError,
            format!("{}: {err}", inst.event_type),
        ));
    }
    let cfg = PromptConfig {
        task: inst.task,
        ..prompt.clone()
    };
    let r = decode(&raw.output, sent, schema, &cfg, inst.trigger);
    d.events = r.events;
    d.diagnostics.extend(r.diagnostics.into_iter().map(|x| Diagnostic {
        detail: format!("{}: {}", inst.event_type, x.detail),
        ..x
    }));
    if inst.task == Task::Eae && d.events.is_empty() {
        // the trigger came from an earlier pass or from gold; keep it
        if let Some(t) = inst.trigger.filter(|t| t.is_valid_for(sent.tokens.len())) {
            d.events.push(EventPrediction {
                event_type: inst.event_type.clone(),
                trigger: t,
                trigger_text: sent.span_text(t).unwrap_or_default(),
                arguments: Vec::new(),
            });
        }
    }
    d
}

/// Decodes saved generations into one prediction record per gold
/// sentence. Argument-extraction events replace detection events on the
/// same (type, trigger); exact duplicate events are collapsed.
pub fn decode_generations(
    raw: &[RawGeneration],
    corpus: &Corpus,
    ontology: &Ontology,
    prompt: &PromptConfig,
) -> Vec<PredictionRecord> {
    let index = corpus.sentence_index();
    let decoded: Vec<Decoded> = raw
        .par_iter()
        .map(|r| decode_one(r, &index, ontology, prompt))
        .collect();

    #[derive(Default)]
    struct Acc {
        detected: Vec<EventPrediction>,
        extracted: Vec<EventPrediction>,
        diagnostics: Vec<Diagnostic>,
    }
    let mut acc: HashMap<(String, String), Acc> = HashMap::new();
    for d in decoded {
        let a = acc.entry(d.key).or_default();
        match d.task {
            Task::Eae => a.extracted.extend(d.events),
            Task::Ed | Task::E2e => a.detected.extend(d.events),
        }
        a.diagnostics.extend(d.diagnostics);
    }

    let finish = |doc_id: String, sent_id: String, a: Acc| {
        let covered: BTreeSet<(String, TokenSpan)> = a
            .extracted
            .iter()
            .map(|e| (e.event_type.clone(), e.trigger))
            .collect();
        let mut events = a.extracted;
        events.extend(
            a.detected
                .into_iter()
                .filter(|e| !covered.contains(&(e.event_type.clone(), e.trigger))),
        );
        events.sort_by(|x, y| {
            (x.trigger, &x.event_type)
                .cmp(&(y.trigger, &y.event_type))
                .then_with(|| x.cmp(y))
        });
        events.dedup();
        PredictionRecord {
            doc_id,
            sent_id,
            events,
            diagnostics: a.diagnostics,
        }
    };

    let mut out = Vec::with_capacity(corpus.len());
    for s in &corpus.sentences {
        let a = acc.remove(&s.key()).unwrap_or_default();
        out.push(finish(s.doc_id.clone(), s.sent_id.clone(), a));
    }
    let mut rest: Vec<_> = acc.into_iter().collect();
    rest.sort_by(|a, b| a.0.cmp(&b.0));
    out.extend(rest.into_iter().map(|((d, s), a)| finish(d, s, a)));
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineOutput {
    pub predictions: Vec<PredictionRecord>,
    pub raw: Vec<RawGeneration>,
}

pub fn run_pipeline(
    corpus: &Corpus,
    ontology: &Ontology,
    generator: &dyn Generator,
    mode: PipelineMode,
    prompt: &PromptConfig,
) -> Result<PipelineOutput> {
    let raw = generate_pipeline(corpus, ontology, generator, mode, prompt)?;
    let predictions = decode_generations(&raw, corpus, ontology, prompt);
    Ok(PipelineOutput { predictions, raw })
}

pub fn write_raw(raw: &[RawGeneration], mut w: impl Write) -> std::io::Result<()> {
    for r in raw {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_raw(raw: &[RawGeneration], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_raw(raw, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_raw(path: impl AsRef<Path>) -> Result<Vec<RawGeneration>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::json(format!("{} line {}", path.display(), i + 1), e))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ArgumentMention;
    use crate::metrics::{score, Metric};
    use crate::ontology::RoleId;
    use crate::promptgen::build_target;

    fn corpus() -> Corpus {
        let tokens: Vec<String> = "rebels bombed the base and troops shelled the village"
            .split(' ')
            .map(String::from)
            .collect();
        let ev = |t: usize, a: usize, b: usize| EventPrediction {
            event_type: "Conflict:Attack".into(),
            trigger: TokenSpan::new(t, t + 1),
            trigger_text: tokens[t].clone(),
            arguments: vec![
                ArgumentMention {
                    span: TokenSpan::new(a, a + 1),
                    text: tokens[a].clone(),
                    role: RoleId::from("Attacker"),
                },
                ArgumentMention {
                    span: TokenSpan::new(b, b + 1),
                    text: tokens[b].clone(),
                    role: RoleId::from("Target"),
                },
            ],
        };
        let s = SentenceRecord {
            doc_id: "d".into(),
            sent_id: "0".into(),
            events: vec![ev(1, 0, 3), ev(6, 5, 8)],
            tokens: tokens.clone(),
        };
        let empty = SentenceRecord {
            doc_id: "d".into(),
            sent_id: "1".into(),
            tokens: vec!["nothing".into(), "here".into()],
            events: vec![],
        };
        Corpus::new(vec![s, empty], "ace05")
    }

    #[test]
    fn oracle_output_equals_target() {
        let c = corpus();
        let ace = Ontology::ace05();
        let cfg = PromptConfig::default();
        let inst = build_inference_set(&c, &ace, &cfg, None).unwrap();
        let gens = OracleGenerator::new(&c, &ace, &cfg).generate(&inst);
        assert_eq!(gens.len(), inst.len());
        for (i, g) in inst.iter().zip(&gens) {
            let s = &c.sentences[if i.sent_id == "0" { 0 } else { 1 }];
            let t = build_target(s, ace.get(&i.event_type).unwrap(), &cfg, None).unwrap();
            assert_eq!(g.output, t.text);
        }
    }

    #[test]
    fn untraceable_instance_fails_in_place() {
        let c = corpus();
        let ace = Ontology::ace05();
        let cfg = PromptConfig::default();
        let mut inst = build_inference_set(&c, &ace, &cfg, None).unwrap();
        inst[3].doc_id = "ghost".into();
        let gens = OracleGenerator::new(&c, &ace, &cfg).generate(&inst);
        assert_eq!(gens.len(), inst.len());
        assert!(gens[3].error.is_some());
        assert!(gens[2].error.is_none());
    }

    #[test]
    fn all_modes_perfect_on_oracle() {
        let c = corpus();
        let ace = Ontology::ace05();
        let cfg = PromptConfig::default();
        let oracle = OracleGenerator::new(&c, &ace, &cfg);
        let mut arg_sets = Vec::new();
        for mode in [PipelineMode::E2e, PipelineMode::Pipeline, PipelineMode::GoldTriggerEae] {
            let out = run_pipeline(&c, &ace, &oracle, mode, &cfg).unwrap();
            let r = score(&out.predictions, &c, None);
            for m in Metric::ALL {
                assert_eq!(r.f1(m), 1.0, "{mode:?} {m}");
            }
            arg_sets.push(out.predictions);
        }
        assert_eq!(arg_sets[0], arg_sets[1].iter().map(|r| PredictionRecord { diagnostics: vec![], ..r.clone() }).collect::<Vec<_>>());
    }

    #[test]
    fn gold_trigger_mode_without_triggers() {
        let mut c = corpus();
        for s in &mut c.sentences {
            s.events.clear();
        }
        let ace = Ontology::ace05();
        let cfg = PromptConfig::default();
        let out = run_pipeline(&c, &ace, &OracleGenerator::new(&c, &ace, &cfg), PipelineMode::GoldTriggerEae, &cfg).unwrap();
        assert!(out.raw.is_empty());
        assert!(out.predictions.iter().all(|r| r.events.is_empty()));
    }

    #[test]
    fn garble_gives_nothing_recase_is_harmless() {
        let c = corpus();
        let ace = Ontology::ace05();
        let cfg = PromptConfig::default();
        let garbled = OracleGenerator::new(&c, &ace, &cfg)
            .with_corruption(Corruption { garble: 1.0, ..Default::default() })
            .unwrap();
        let out = run_pipeline(&c, &ace, &garbled, PipelineMode::E2e, &cfg).unwrap();
        assert!(out.predictions.iter().all(|r| r.events.is_empty()));

        let recased = OracleGenerator::new(&c, &ace, &cfg)
            .with_corruption(Corruption { recase: 1.0, seed: 3, ..Default::default() })
            .unwrap();
        let out = run_pipeline(&c, &ace, &recased, PipelineMode::E2e, &cfg).unwrap();
        assert_eq!(score(&out.predictions, &c, None).f1(Metric::ArgC), 1.0);
    }

    #[test]
    fn drop_slot_loses_arguments_only() {
        let c = corpus();
        let ace = Ontology::ace05();
        let cfg = PromptConfig::for_task(Task::Eae);
        let dropper = OracleGenerator::new(&c, &ace, &cfg)
            .with_corruption(Corruption { drop_slot: 1.0, ..Default::default() })
            .unwrap();
        let out = run_pipeline(&c, &ace, &dropper, PipelineMode::GoldTriggerEae, &cfg).unwrap();
        let r = score(&out.predictions, &c, None);
        assert_eq!(r.f1(Metric::TriC), 1.0);
        assert_eq!(r.arg_c.tp, 0);
    }

    #[test]
    fn bad_probability_rejected() {
        let c = corpus();
        let ace = Ontology::ace05();
        let g = OracleGenerator::new(&c, &ace, &PromptConfig::default());
        assert!(g.with_corruption(Corruption { recase: 1.5, ..Default::default() }).is_err());
    }

    #[test]
    fn endpoint_parsing() {
        assert_eq!(Endpoint::parse("http://h:1/generate").unwrap(), Endpoint::Http("http://h:1".into()));
        assert_eq!(
            Endpoint::parse("python3 serve.py --echo").unwrap(),
            Endpoint::Process(vec!["python3".into(), "serve.py".into(), "--echo".into()])
        );
        assert!(Endpoint::parse("  ").is_err());
        let bad = ClientConfig { batch_size: 0, ..Default::default() };
        assert!(RemoteClient::new(bad).is_err());
    }

    #[test]
    fn raw_generation_json() {
        let raw = RawGeneration {
            instance: PromptInstance {
                task: Task::Ed,
                event_type: "Life:Die".into(),
                input: "x".into(),
                target: None,
                doc_id: "d".into(),
                sent_id: "s".into(),
                trigger: None,
            },
            output: "y".into(),
            error: None,
        };
        let mut buf = Vec::new();
        write_raw(std::slice::from_ref(&raw), &mut buf).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert!(line.contains(r#""output":"y""#));
        let back: RawGeneration = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(back, raw);
    }
}
