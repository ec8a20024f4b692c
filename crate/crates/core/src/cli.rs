//! Command-line front end. Each subcommand loads its inputs, calls into the
//! library and writes its outputs plus a `<output>.manifest.json` that
//! records the arguments, effective configuration and input digests.

// Writes to stdout, ignoring a closed pipe (e.g. output piped into `head`).
macro_rules! emit {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout().lock(), $($t)*);
    }};
}

macro_rules! emitln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{lemma_ed, matching_ed, LemmaTable};
use crate::corpus::{corpus_stats, oneie, Corpus, SentenceRecord};
use crate::decoder::{load_predictions, save_predictions, DiagnosticCode, PredictionRecord};
use crate::error::{Error, Result};
use crate::genio::{
    decode_generations, generate_pipeline, load_raw, save_raw, ClientConfig, Corruption, Generator, OracleGenerator,
    PipelineMode, RemoteClient,
};
use crate::metrics::score_matrix;
use crate::ontology::{Ontology, TemplateVariant};
use crate::promptgen::{
    build_inference_set, build_training_set, write_instances, PromptConfig, Task, TrainingConfig, TriggerTable,
};
use crate::splitter::{eval_filter, few_shot_filter, make_split, FewShotConfig, SplitConfig};
use crate::synthetic::{synthetic_corpus, SyntheticConfig};

#[derive(Debug, Parser)]
#[command(name = "evtgen", version, about = "Template-based generative event extraction toolkit")]
pub struct Cli {
    /// TOML file with [prompt], [training], [client], [corruption] and
    /// [synthetic] tables; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// `ace05`, `ere`, or a path to an ontology JSON file.
    #[arg(long, global = true)]
    pub ontology: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an ontology and optionally a corpus against it.
    Validate {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Corpus statistics.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Draw a low-resource document split or a few-shot training set.
    Split(SplitArgs),
    /// Write training or inference prompt instances.
    BuildData(BuildDataArgs),
    /// Generate and decode predictions for a corpus.
    Infer(InferArgs),
    /// Re-decode a saved raw-generation file.
    Decode {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        prompt: PromptFlags,
    },
    /// Score prediction files against a gold corpus.
    Score(ScoreArgs),
    /// Keyword-matching detection baselines.
    Baseline {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "matching")]
        method: BaselineMethod,
        /// Two-column TSV of surface form and lemma.
        #[arg(long)]
        lemmas: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic annotated corpus.
    Synth {
        #[arg(long)]
        docs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Restrict to these event types (comma separated).
        #[arg(long, value_delimiter = ',')]
        types: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert OneIE-style JSON lines into the corpus format.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of documents, e.g. 0.05.
    #[arg(long, conflicts_with = "few_shot")]
    pub proportion: Option<f64>,
    /// Shuffle documents instead of greedy type coverage.
    #[arg(long)]
    pub random: bool,
    /// Few-shot mode: keep the common types and k mentions of the rest.
    #[arg(long)]
    pub few_shot: bool,
    #[arg(long, default_value_t = 10)]
    pub n_common: usize,
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    /// Evaluation corpus to restrict to the unseen types (few-shot mode).
    #[arg(long, requires = "eval_out")]
    pub eval: Option<PathBuf>,
    #[arg(long)]
    pub eval_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildDataArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Negative event types sampled per sentence.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epoch: Option<u64>,
    /// Instances without targets, over every event type.
    #[arg(long)]
    pub inference: bool,
    /// Prediction file whose triggers anchor argument extraction
    /// (inference only; defaults to gold triggers).
    #[arg(long)]
    pub triggers: Option<PathBuf>,
    #[command(flatten)]
    pub prompt: PromptFlags,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Prediction file.
    #[arg(long)]
    pub out: PathBuf,
    /// Raw generations; defaults to `<out>.raw.jsonl`.
    #[arg(long)]
    pub raw_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "e2e")]
    pub mode: ModeArg,
    /// `oracle[:drop=P,recase=P,garble=P,seed=N]`, `http://host:port`, or
    /// `proc:COMMAND`.
    #[arg(long, default_value = "oracle")]
    pub generator: String,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    #[arg(long)]
    pub retries: Option<u32>,
    #[command(flatten)]
    pub prompt: PromptFlags,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub gold: PathBuf,
    /// One or more prediction files; several give one row each.
    #[arg(long, required = true, num_args = 1..)]
    pub pred: Vec<PathBuf>,
    /// Row labels for the prediction files.
    #[arg(long, num_args = 1..)]
    pub label: Vec<String>,
    /// Only score these event types (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub restrict_types: Vec<String>,
    /// File listing event types to score, one per line.
    #[arg(long)]
    pub restrict_file: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Default)]
pub struct PromptFlags {
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long)]
    pub no_definition: bool,
    #[arg(long)]
    pub no_keywords: bool,
    #[arg(long)]
    pub no_query_trigger: bool,
    #[arg(long)]
    pub no_template: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TaskArg {
    Ed,
    Eae,
    E2e,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Natural,
    Special,
    Html,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    E2e,
    Pipeline,
    GoldEae,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BaselineMethod {
    Matching,
    Lemma,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub ontology: Option<String>,
    pub jobs: Option<usize>,
    pub prompt: PromptConfig,
    pub training: TrainingConfig,
    pub client: ClientConfig,
    pub corruption: Corruption,
    pub synthetic: SyntheticConfig,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

impl PromptFlags {
    fn apply(&self, mut cfg: PromptConfig) -> PromptConfig {
        if let Some(t) = self.task {
            cfg.task = match t {
                TaskArg::Ed => Task::Ed,
                TaskArg::Eae => Task::Eae,
                TaskArg::E2e => Task::E2e,
            };
        }
        if let Some(v) = self.variant {
            cfg.template_variant = match v {
                VariantArg::Natural => TemplateVariant::Natural,
                VariantArg::Special => TemplateVariant::SpecialToken,
                VariantArg::Html => TemplateVariant::HtmlLike,
            };
        }
        cfg.include_definition &= !self.no_definition;
        cfg.include_keywords &= !self.no_keywords;
        cfg.include_query_trigger &= !self.no_query_trigger;
        cfg.include_template &= !self.no_template;
        cfg
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    /// Input path to SHA-256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    fn new(subcommand: &str, args: &[String], config: serde_json::Value) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            args: args.to_vec(),
            config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), file_digest(path)?);
        Ok(())
    }

    fn write_next_to(mut self, out: &Path) -> Result<()> {
        self.outputs.push(out.display().to_string());
        let path = manifest_path(out);
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(OsString::from).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

fn resolve_ontology(name: &str) -> Result<Ontology> {
    match name {
        "ace05" | "ace" => Ok(Ontology::ace05()),
        "ere" => Ok(Ontology::ere()),
        path => Ontology::load(path),
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    corpus
        .write_jsonl(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Parses `oracle[:k=v,...]` corruption settings over `base`.
fn parse_oracle_spec(spec: &str, base: Corruption) -> Result<Corruption> {
    let mut c = base;
    let Some(opts) = spec.strip_prefix("oracle:") else {
        return Ok(c);
    };
    for kv in opts.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("bad oracle option {kv:?}")))?;
        let bad = |_| Error::Config(format!("bad value in oracle option {kv:?}"));
        match k.trim() {
            "drop" | "drop_slot" => c.drop_slot = v.trim().parse().map_err(bad)?,
            "recase" => c.recase = v.trim().parse().map_err(bad)?,
            "garble" => c.garble = v.trim().parse().map_err(bad)?,
            "seed" => c.seed = v.trim().parse().map_err(|_| Error::Config(format!("bad seed in {kv:?}")))?,
            other => return Err(Error::Config(format!("unknown oracle option {other:?}"))),
        }
    }
    Ok(c)
}

struct Ctx {
    file: FileConfig,
    ontology: Ontology,
    args: Vec<String>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli, argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(cli: Cli, args: Vec<String>) -> Result<i32> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.jobs.or(file.jobs) {
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let onto_name = cli
        .ontology
        .clone()
        .or_else(|| file.ontology.clone())
        .unwrap_or_else(|| "ace05".into());
    let ontology = resolve_ontology(&onto_name)?;
    let ctx = Ctx { file, ontology, args };

    match cli.command {
        Command::Validate { corpus } => cmd_validate(&ctx, corpus.as_deref()),
        Command::Stats { corpus, json } => {
            let c = Corpus::load(&corpus, &ctx.ontology)?;
            let s = corpus_stats(&c);
            if json {
                emitln!("{}", serde_json::to_string_pretty(&s).expect("stats serialize"));
            } else {
                emitln!("{s}");
            }
            Ok(0)
        }
        Command::Split(a) => cmd_split(&ctx, a),
        Command::BuildData(a) => cmd_build_data(&ctx, a),
        Command::Infer(a) => cmd_infer(&ctx, a),
        Command::Decode { corpus, raw, out, prompt } => {
            let c = Corpus::load(&corpus, &ctx.ontology)?;
            let cfg = prompt.apply(ctx.file.prompt.clone());
            let gens = load_raw(&raw)?;
            let preds = decode_generations(&gens, &c, &ctx.ontology, &cfg);
            save_predictions(&preds, &out)?;
            let mut m = RunManifest::new("decode", &ctx.args, serde_json::json!({ "prompt": cfg }));
            m.input(&corpus)?;
            m.input(&raw)?;
            m.write_next_to(&out)?;
            report_diagnostics(&preds);
            Ok(0)
        }
        Command::Score(a) => cmd_score(&ctx, a),
        Command::Baseline {
            corpus,
            method,
            lemmas,
            out,
        } => {
            let c = Corpus::load(&corpus, &ctx.ontology)?;
            let table = match &lemmas {
                Some(p) => LemmaTable::load(p)?,
                None => LemmaTable::new(),
            };
            let preds: Vec<PredictionRecord> = c
                .sentences
                .iter()
                .map(|s| PredictionRecord {
                    doc_id: s.doc_id.clone(),
                    sent_id: s.sent_id.clone(),
                    events: match method {
                        BaselineMethod::Matching => matching_ed(s, &ctx.ontology),
                        BaselineMethod::Lemma => lemma_ed(s, &ctx.ontology, &table),
                    },
                    diagnostics: Vec::new(),
                })
                .collect();
            save_predictions(&preds, &out)?;
            let mut m = RunManifest::new(
                "baseline",
                &ctx.args,
                serde_json::json!({ "method": format!("{method:?}").to_lowercase() }),
            );
            m.input(&corpus)?;
            if let Some(p) = &lemmas {
                m.input(p)?;
            }
            m.write_next_to(&out)?;
            Ok(0)
        }
        Command::Synth { docs, seed, types, out } => {
            let mut cfg = ctx.file.synthetic.clone();
            if let Some(d) = docs {
                cfg.docs = d;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let onto = if types.is_empty() {
                ctx.ontology.clone()
            } else {
                for t in &types {
                    ctx.ontology.schema(t)?;
                }
                ctx.ontology.restricted_to(types.iter().map(String::as_str))
            };
            let c = synthetic_corpus(&onto, &cfg);
            save_corpus(&c, &out)?;
            RunManifest::new("synth", &ctx.args, serde_json::json!({ "synthetic": cfg, "types": types }))
                .write_next_to(&out)?;
            eprintln!("{} sentences, {} events", c.len(), c.event_count());
            Ok(0)
        }
        Command::Convert { input, out } => {
            let f = fs::File::open(&input).map_err(|e| Error::io(&input, e))?;
            let c = Corpus::new(oneie::convert(BufReader::new(f))?, ctx.ontology.name.clone());
            c.validate(&ctx.ontology)?;
            save_corpus(&c, &out)?;
            let mut m = RunManifest::new("convert", &ctx.args, serde_json::Value::Null);
            m.input(&input)?;
            m.write_next_to(&out)?;
            Ok(0)
        }
    }
}

fn cmd_validate(ctx: &Ctx, corpus: Option<&Path>) -> Result<i32> {
    let warnings = ctx.ontology.lint();
    for w in &warnings {
        emitln!("warning: {w}");
    }
    emitln!(
        "ontology {}: {} event types, {} roles",
        ctx.ontology.name,
        ctx.ontology.len(),
        ctx.ontology.role_universe().len()
    );
    let Some(path) = corpus else { return Ok(0) };
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut errors = 0usize;
    let mut n = 0usize;
    let mut keys = HashSet::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        n += 1;
        let rec: SentenceRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                emitln!("line {}: invalid JSON: {e}", i + 1);
                errors += 1;
                continue;
            }
        };
        if let Err(reason) = rec.validate(&ctx.ontology) {
            emitln!("line {} ({}/{}): {reason}", i + 1, rec.doc_id, rec.sent_id);
            errors += 1;
        }
        if !keys.insert(rec.key()) {
            emitln!("line {} ({}/{}): duplicate (doc_id, sent_id)", i + 1, rec.doc_id, rec.sent_id);
            errors += 1;
        }
    }
    emitln!("{n} sentences, {errors} errors");
    Ok(if errors == 0 { 0 } else { 1 })
}

fn cmd_split(ctx: &Ctx, a: SplitArgs) -> Result<i32> {
    let corpus = Corpus::load(&a.corpus, &ctx.ontology)?;
    let mut m;
    if a.few_shot {
        let cfg = FewShotConfig {
            n_common: a.n_common,
            k: a.k,
            seed: a.seed,
        };
        let fs_split = few_shot_filter(&corpus, &ctx.ontology, &cfg);
        save_corpus(&fs_split.train, &a.out)?;
        m = RunManifest::new(
            "split",
            &ctx.args,
            serde_json::json!({ "few_shot": cfg, "seen": fs_split.seen, "unseen": fs_split.unseen }),
        );
        if let (Some(eval), Some(eval_out)) = (&a.eval, &a.eval_out) {
            let ev = Corpus::load(eval, &ctx.ontology)?;
            save_corpus(&eval_filter(&ev, &fs_split.unseen), eval_out)?;
            m.input(eval)?;
            m.outputs.push(eval_out.display().to_string());
        }
        emitln!(
            "seen {} types, unseen {} types, {} training events",
            fs_split.seen.len(),
            fs_split.unseen.len(),
            fs_split.train.event_count()
        );
    } else {
        let proportion = a
            .proportion
            .ok_or_else(|| Error::Config("split needs --proportion or --few-shot".into()))?;
        let cfg = SplitConfig {
            proportion,
            seed: a.seed,
            coverage_greedy: !a.random,
        };
        let split = make_split(&corpus, &cfg)?;
        save_corpus(&split.corpus, &a.out)?;
        emitln!(
            "{} of {} documents, {} sentences, {} event types covered",
            split.doc_ids.len(),
            corpus.doc_ids().len(),
            split.corpus.len(),
            split.covered_types()
        );
        m = RunManifest::new(
            "split",
            &ctx.args,
            serde_json::json!({ "split": cfg, "doc_ids": split.doc_ids, "coverage_trace": split.coverage_trace }),
        );
    }
    m.input(&a.corpus)?;
    m.write_next_to(&a.out)?;
    Ok(0)
}

fn cmd_build_data(ctx: &Ctx, a: BuildDataArgs) -> Result<i32> {
    let corpus = Corpus::load(&a.corpus, &ctx.ontology)?;
    let pcfg = a.prompt.apply(ctx.file.prompt.clone());
    let mut tcfg = ctx.file.training.clone();
    if let Some(v) = a.m {
        tcfg.m = v;
    }
    if let Some(v) = a.seed {
        tcfg.seed = v;
    }
    if let Some(v) = a.epoch {
        tcfg.epoch = v;
    }
    let mut m;
    let instances = if a.inference {
        let table = match (&a.triggers, pcfg.task) {
            (Some(p), _) => Some(crate::genio::triggers_from_predictions(&load_predictions(p)?)),
            (None, Task::Eae) => Some(TriggerTable::from_gold(&corpus)),
            (None, _) => None,
        };
        let inst = build_inference_set(&corpus, &ctx.ontology, &pcfg, table.as_ref())?;
        m = RunManifest::new("build-data", &ctx.args, serde_json::json!({ "prompt": pcfg, "inference": true }));
        if let Some(p) = &a.triggers {
            m.input(p)?;
        }
        inst
    } else {
        let set = build_training_set(&corpus, &ctx.ontology, &pcfg, &tcfg)?;
        for w in set.warnings.iter().take(20) {
            log::warn!("{w}");
        }
        if set.warnings.len() > 20 {
            log::warn!("{} more warnings", set.warnings.len() - 20);
        }
        m = RunManifest::new(
            "build-data",
            &ctx.args,
            serde_json::json!({ "prompt": pcfg, "training": tcfg, "warnings": set.warnings.len() }),
        );
        set.instances
    };
    let mut w = create(&a.out)?;
    write_instances(&instances, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&a.out, e))?;
    m.input(&a.corpus)?;
    m.write_next_to(&a.out)?;
    eprintln!("{} instances", instances.len());
    Ok(0)
}

fn cmd_infer(ctx: &Ctx, a: InferArgs) -> Result<i32> {
    let corpus = Corpus::load(&a.corpus, &ctx.ontology)?;
    let pcfg = a.prompt.apply(ctx.file.prompt.clone());
    let mode = match a.mode {
        ModeArg::E2e => PipelineMode::E2e,
        ModeArg::Pipeline => PipelineMode::Pipeline,
        ModeArg::GoldEae => PipelineMode::GoldTriggerEae,
    };
    let mut client = ctx.file.client.clone();
    if let Some(v) = a.batch_size {
        client.batch_size = v;
    }
    if let Some(v) = a.timeout {
        client.timeout_secs = v;
    }
    if let Some(v) = a.max_in_flight {
        client.max_in_flight = v;
    }
    if let Some(v) = a.retries {
        client.retries = v;
    }

    let gen_spec = a.generator.trim();
    let mut gen_config = serde_json::json!({ "generator": gen_spec });
    let generator: Box<dyn Generator> = if gen_spec == "oracle" || gen_spec.starts_with("oracle:") {
        let corruption = parse_oracle_spec(gen_spec, ctx.file.corruption)?;
        gen_config["corruption"] = serde_json::to_value(corruption).expect("serializes");
        Box::new(OracleGenerator::new(&corpus, &ctx.ontology, &pcfg).with_corruption(corruption)?)
    } else {
        client.endpoint = if let Some(cmd) = gen_spec.strip_prefix("proc:") {
            cmd.to_string()
        } else if let Some(url) = gen_spec.strip_prefix("http:").filter(|u| !u.starts_with("//")) {
            url.to_string()
        } else if gen_spec.starts_with("http://") || gen_spec.starts_with("https://") {
            gen_spec.to_string()
        } else {
            return Err(Error::Config(format!("unknown generator {gen_spec:?}")));
        };
        gen_config["client"] = serde_json::to_value(&client).expect("serializes");
        Box::new(RemoteClient::new(client)?)
    };

    let raw_path = a.raw_out.clone().unwrap_or_else(|| {
        let mut name = a.out.file_name().map(OsString::from).unwrap_or_default();
        name.push(".raw.jsonl");
        a.out.with_file_name(name)
    });
    let raw = generate_pipeline(&corpus, &ctx.ontology, generator.as_ref(), mode, &pcfg)?;
    save_raw(&raw, &raw_path)?;
    let failures = raw.iter().filter(|r| r.error.is_some()).count();

    let preds = decode_generations(&raw, &corpus, &ctx.ontology, &pcfg);
    save_predictions(&preds, &a.out)?;
    let mut m = RunManifest::new(
        "infer",
        &ctx.args,
        serde_json::json!({ "mode": mode, "prompt": pcfg, "generator": gen_config }),
    );
    m.input(&a.corpus)?;
    m.outputs.push(raw_path.display().to_string());
    m.write_next_to(&a.out)?;
    eprintln!(
        "{} generations ({failures} failed), {} predicted events",
        raw.len(),
        preds.iter().map(|p| p.events.len()).sum::<usize>()
    );
    report_diagnostics(&preds);
    Ok(0)
}

fn report_diagnostics(preds: &[PredictionRecord]) {
    let mut counts: BTreeMap<DiagnosticCode, usize> = BTreeMap::new();
    for d in preds.iter().flat_map(|p| &p.diagnostics) {
        *counts.entry(d.code).or_default() += 1;
    }
    for (code, n) in counts {
        eprintln!("  {code}: {n}");
    }
}

fn cmd_score(ctx: &Ctx, a: ScoreArgs) -> Result<i32> {
    let gold = Corpus::load(&a.gold, &ctx.ontology)?;
    let mut types: BTreeSet<String> = a.restrict_types.iter().map(|t| t.trim().to_string()).collect();
    if let Some(p) = &a.restrict_file {
        let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        types.extend(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from));
    }
    for t in &types {
        ctx.ontology.schema(t)?;
    }
    let restrict = (!types.is_empty()).then_some(&types);

    let mut runs = Vec::new();
    for (i, p) in a.pred.iter().enumerate() {
        let label = a.label.get(i).cloned().unwrap_or_else(|| {
            p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
        });
        runs.push((label, load_predictions(p)?));
    }
    let matrix = score_matrix(&runs, &gold, restrict);
    let structural: usize = matrix.rows.iter().map(|(_, r)| r.structural_errors.len()).sum();

    if a.json {
        let rows: Vec<_> = matrix
            .rows
            .iter()
            .map(|(l, r)| serde_json::json!({ "run": l, "report": r.to_json() }))
            .collect();
        emitln!("{}", serde_json::to_string_pretty(&rows).expect("serializes"));
    } else if matrix.rows.len() == 1 {
        emit!("{}", matrix.rows[0].1);
    } else {
        emit!("{}", matrix.to_text());
        for (l, r) in &matrix.rows {
            for e in &r.structural_errors {
                emitln!("{l}: error: {e}");
            }
        }
    }
    if let Some(csv) = &a.csv {
        let text = if matrix.rows.len() == 1 {
            matrix.rows[0].1.to_csv()
        } else {
            matrix.to_csv()
        };
        fs::write(csv, text).map_err(|e| Error::io(csv, e))?;
    }
    Ok(if structural == 0 { 0 } else { 1 })
}
