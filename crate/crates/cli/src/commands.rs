//! One function per subcommand.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dashgen::evaluation::{
    aggregate_report, collect_samples, corpus_from_jsonl, corpus_to_jsonl, generate_corpus,
    score_samples, BernoulliSampler, CorpusCounts, CorpusTemplates, DatasetEntry, MetricReport,
    ReportOptions, SampleSet,
};
use dashgen::fsutil::write_atomic;
use dashgen::kbase::{build_graph, ingest_corpus, EntityKind, KnowledgeGraph, Taxonomy};
use dashgen::orchestrator::routes::{render_router, MANIFEST_PATH, ROUTER_PATH};
use dashgen::orchestrator::{
    plan_pages, run_pipeline, AppSpec, BracketFixer, GenerationRun, HttpLlmClient, Knowledge,
    LlmClient, PipelineConfig, PipelineInputs, RouteManifest, TaskStatus, TemplateMock, Workspace,
};
use dashgen::promptgen::{ShotStrategy, StackRecommendation, TemplateSet};
use dashgen::repair::{
    repair_loop, ExternalValidator, FileStatus, RepairBounds, RepairContext, RepairOutcome,
};
use dashgen::retrieval::{
    build_entity_index, embed::DEFAULT_HASHING_SEED, HashingEmbedder, IvfadcIndex,
};
use dashgen::wireframe::{build_component_tree, parse_svg, tree_to_outline};
use dashgen::Error;

use crate::config::{Config, LlmMode};

pub const RUN_FORMAT: &str = "dashgen-run";
pub const REPAIR_FORMAT: &str = "dashgen-repair";
pub const RECORD_VERSION: u32 = 1;

pub const GRAPH_FILE: &str = "graph.ndjson";
pub const INDEX_FILE: &str = "index.json";
pub const LAST_RUN_FILE: &str = "last-run.json";
pub const REPAIR_FILE: &str = "repair.json";
pub const REPAIR_LOG_FILE: &str = "repair-log.jsonl";

/// How a command that ran to completion went.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Some task or file failed; exit code 1.
    Failed,
}

#[derive(Serialize, Deserialize)]
pub struct RunRecord {
    pub format: String,
    pub version: u32,
    #[serde(flatten)]
    pub run: GenerationRun,
}

#[derive(Serialize, Deserialize)]
pub struct RepairRecord {
    pub format: String,
    pub version: u32,
    pub bounds: RepairBounds,
    /// Pages routed after their file was fixed.
    #[serde(default)]
    pub reinjected: Vec<String>,
    #[serde(flatten)]
    pub outcome: RepairOutcome,
}

fn state_file(cfg: &Config, name: &str) -> PathBuf {
    cfg.paths.state.join(name)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    write_atomic(path, text.as_bytes()).with_context(|| format!("cannot write {}", path.display()))
}

fn read_text(path: &Path, what: &str) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {what} {}: {e}", path.display())).into())
}

fn templates(cfg: &Config) -> Result<TemplateSet> {
    Ok(match &cfg.paths.templates {
        Some(dir) => TemplateSet::load_dir(dir)?,
        None => TemplateSet::builtin(),
    })
}

fn taxonomy(cfg: &Config) -> Result<Taxonomy> {
    Ok(match &cfg.paths.taxonomy {
        Some(p) => Taxonomy::from_toml(&read_text(p, "taxonomy")?)?,
        None => Taxonomy::default(),
    })
}

fn pipeline_config(cfg: &Config, strategy: ShotStrategy) -> PipelineConfig {
    PipelineConfig {
        strategy,
        architecture: cfg.generation.architecture,
        retrieval: cfg.retrieval_params(),
        token_budget: cfg.generation.token_budget,
        parallelism: cfg.generation.parallelism,
        default_stack: StackRecommendation::default(),
    }
}

fn generator(cfg: &Config) -> Result<Box<dyn LlmClient>> {
    Ok(match cfg.llm.mode {
        LlmMode::Mock => Box::new(TemplateMock::new(cfg.seed)),
        LlmMode::Http => Box::new(HttpLlmClient::new(cfg.llm.client.clone())?),
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Graph and index written by `index`.
pub struct State {
    pub graph: KnowledgeGraph,
    pub index: IvfadcIndex,
}

fn load_state(cfg: &Config) -> Result<State> {
    let graph_path = state_file(cfg, GRAPH_FILE);
    let index_path = state_file(cfg, INDEX_FILE);
    if !graph_path.exists() || !index_path.exists() {
        return Err(Error::Environment(format!(
            "no index under {}; run `dashgen index` first",
            cfg.paths.state.display()
        ))
        .into());
    }
    Ok(State {
        graph: KnowledgeGraph::load(&graph_path)?,
        index: IvfadcIndex::load(&index_path)?,
    })
}

pub fn index(cfg: &Config) -> Result<Status> {
    let corpus = &cfg.paths.corpus;
    if !corpus.is_dir() {
        return Err(Error::Config(format!("corpus directory {} not found", corpus.display())).into());
    }
    let ingest = ingest_corpus(corpus, &taxonomy(cfg)?)?;
    if ingest.files == 0 {
        return Err(Error::Config(format!(
            "empty corpus: no component sources under {}",
            corpus.display()
        ))
        .into());
    }
    for w in &ingest.warnings {
        log::warn!("{w}");
    }
    let graph = build_graph(&ingest.entities)?;
    let provider = HashingEmbedder::new(cfg.retrieval.d, DEFAULT_HASHING_SEED);
    let built = build_entity_index(&graph, &provider, cfg.index_config())?;
    if built.clamped {
        log::info!(
            "index clamped to k_c = {}, k_s = {} for {} entities",
            built.config.k_c,
            built.config.k_s,
            graph.node_count()
        );
    }
    let index_json = built.index.to_json()?;
    write_text(&state_file(cfg, GRAPH_FILE), &graph.to_ndjson())?;
    write_text(&state_file(cfg, INDEX_FILE), &index_json)?;

    println!(
        "indexed {} files: {} entities, {} edges",
        ingest.files,
        graph.node_count(),
        graph.edge_count()
    );
    for kind in [EntityKind::Library, EntityKind::Component, EntityKind::Feature, EntityKind::Snippet] {
        println!("  {:<10} {}", kind.as_str(), graph.count_kind(kind));
    }
    println!("index sha256 {}", sha256_hex(index_json.as_bytes()));
    Ok(Status::Success)
}

pub fn generate(cfg: &Config, app: &Path, wireframe: Option<&Path>) -> Result<Status> {
    let state = load_state(cfg)?;
    let spec = AppSpec::load(app)?;
    let tasks = plan_pages(&spec)?;
    let base = app.parent().unwrap_or(Path::new(""));

    let svg_path = wireframe
        .map(Path::to_path_buf)
        .or_else(|| spec.wireframe.as_ref().map(|w| base.join(w)));
    let tree = match &svg_path {
        Some(p) => {
            let bytes = std::fs::read(p)
                .map_err(|e| Error::Config(format!("cannot read wireframe {}: {e}", p.display())))?;
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Some(build_component_tree(&parse_svg(&name, &bytes)?))
        }
        None => None,
    };
    let schema = match &spec.openapi {
        Some(p) => read_text(&base.join(p), "OpenAPI document")?,
        None => String::new(),
    };

    let provider = HashingEmbedder::new(state.index.config().d, DEFAULT_HASHING_SEED);
    let templates = templates(cfg)?;
    let inputs = PipelineInputs {
        tasks: &tasks,
        wireframe: tree.as_ref(),
        api_schema: &schema,
        knowledge: Some(Knowledge {
            graph: &state.graph,
            index: &state.index,
            provider: &provider,
        }),
        templates: &templates,
    };
    let client = generator(cfg)?;
    let ws = Workspace::open(&cfg.paths.workspace)?;
    let run = run_pipeline(&inputs, client.as_ref(), &ws, &pipeline_config(cfg, cfg.generation.strategy))?;

    let record = RunRecord {
        format: RUN_FORMAT.into(),
        version: RECORD_VERSION,
        run,
    };
    let json = serde_json::to_string_pretty(&record)? + "\n";
    write_text(&state_file(cfg, &format!("runs/{}.json", record.run.run_id)), &json)?;
    write_text(&state_file(cfg, LAST_RUN_FILE), &json)?;

    let run = &record.run;
    println!("run {} ({}, {})", run.run_id, run.model_id, run.strategy);
    for t in &run.tasks {
        println!("  {:<16} {:<18} {}", t.task.page_id, t.status.label(), t.task.target_path);
    }
    for w in &run.warnings {
        log::warn!("{w}");
    }
    Ok(if run.failed() > 0 { Status::Failed } else { Status::Success })
}

fn load_run(path: &Path) -> Result<GenerationRun> {
    let record: RunRecord = serde_json::from_str(&read_text(path, "run record")?)
        .map_err(|e| Error::Format(format!("run record {}: {e}", path.display())))?;
    if record.format != RUN_FORMAT || record.version != RECORD_VERSION {
        return Err(Error::Format(format!(
            "expected {RUN_FORMAT} v{RECORD_VERSION}, found {} v{}",
            record.format, record.version
        ))
        .into());
    }
    Ok(record.run)
}

/// The default stack plus every library the knowledge graph knows about.
fn repair_whitelist(cfg: &Config) -> Result<BTreeSet<String>> {
    let mut out: BTreeSet<String> = StackRecommendation::default().allowed_imports().into_iter().collect();
    let graph_path = state_file(cfg, GRAPH_FILE);
    if graph_path.exists() {
        let graph = KnowledgeGraph::load(&graph_path)?;
        out.extend(
            graph
                .nodes()
                .filter(|e| e.kind == EntityKind::Library)
                .map(|e| e.name.clone()),
        );
    }
    Ok(out)
}

pub fn repair(cfg: &Config) -> Result<Status> {
    let root = &cfg.paths.workspace;
    if !root.is_dir() {
        return Err(Error::Config(format!("workspace {} not found", root.display())).into());
    }
    let ws = Workspace::open(root)?;
    let whitelist = repair_whitelist(cfg)?;
    let templates = templates(cfg)?;
    let external = cfg
        .repair
        .validator
        .as_deref()
        .map(|c| ExternalValidator::new(c, &cfg.repair.patterns))
        .transpose()?;
    let agent: Box<dyn LlmClient> = match cfg.llm.mode {
        LlmMode::Mock => Box::new(BracketFixer),
        LlmMode::Http => Box::new(HttpLlmClient::new(cfg.llm.client.clone())?),
    };
    let bounds = RepairBounds {
        max_attempts: cfg.repair.attempts,
        max_fixes: cfg.repair.fixes,
    };
    let log_path = state_file(cfg, REPAIR_LOG_FILE);
    let ctx = RepairContext {
        workspace: &ws,
        whitelist: &whitelist,
        external: external.as_ref(),
        templates: &templates,
        log: Some(&log_path),
    };
    let outcome = repair_loop(&ctx, agent.as_ref(), bounds)?;
    let reinjected = reinject(cfg, &ws, &outcome)?;

    println!(
        "repair: {} attempt(s), {} fixed, {} still broken",
        outcome.attempts_used,
        outcome.count(FileStatus::Fixed),
        outcome.count(FileStatus::StillBroken)
    );
    for (file, o) in &outcome.per_file {
        println!(
            "  {:<28} {:<12} trials {}",
            file,
            serde_json::to_value(o.final_status)?.as_str().unwrap_or(""),
            o.total_trials
        );
    }
    for page in &reinjected {
        println!("  routed {page}");
    }
    let failed = outcome.count(FileStatus::StillBroken) > 0;
    let record = RepairRecord {
        format: REPAIR_FORMAT.into(),
        version: RECORD_VERSION,
        bounds,
        reinjected,
        outcome,
    };
    write_text(
        &state_file(cfg, REPAIR_FILE),
        &(serde_json::to_string_pretty(&record)? + "\n"),
    )?;
    Ok(if failed { Status::Failed } else { Status::Success })
}

/// Routes pages of the last run that were written but left out of the
/// manifest because they failed validation, once repair has fixed them.
fn reinject(cfg: &Config, ws: &Workspace, outcome: &RepairOutcome) -> Result<Vec<String>> {
    let last = state_file(cfg, LAST_RUN_FILE);
    if !last.exists() {
        return Ok(vec![]);
    }
    let run = load_run(&last)?;
    let mut manifest = if ws.exists(MANIFEST_PATH) {
        RouteManifest::from_json(&ws.read(MANIFEST_PATH)?)?
    } else {
        RouteManifest::new()
    };
    let mut routed = Vec::new();
    for t in &run.tasks {
        let fixed = outcome
            .per_file
            .get(&t.task.target_path)
            .is_some_and(|o| o.final_status == FileStatus::Fixed);
        if matches!(t.status, TaskStatus::Invalid { .. }) && fixed && manifest.get(&t.task.route).is_none() {
            manifest.inject(&t.task)?;
            routed.push(t.task.page_id.clone());
        }
    }
    if !routed.is_empty() {
        ws.write(MANIFEST_PATH, &manifest.to_json())?;
        ws.write(ROUTER_PATH, &render_router(&manifest))?;
    }
    Ok(routed)
}

pub struct EvaluateArgs {
    pub dataset: PathBuf,
    pub samples: Vec<PathBuf>,
    pub strategies: Vec<ShotStrategy>,
    pub n: u64,
    pub out: PathBuf,
    pub options: ReportOptions,
    /// Replace the LLM with a sampler passing with this probability.
    pub mock_pass_rate: Option<f64>,
}

fn load_dataset(path: &Path) -> Result<Vec<DatasetEntry>> {
    Ok(corpus_from_jsonl(&read_text(path, "dataset")?)?)
}

pub fn evaluate(cfg: &Config, args: &EvaluateArgs) -> Result<Status> {
    let dataset = load_dataset(&args.dataset)?;
    let mut sets = Vec::new();
    for p in &args.samples {
        sets.push(SampleSet::from_jsonl(&read_text(p, "samples")?)?);
    }
    if args.samples.is_empty() {
        let templates = templates(cfg)?;
        let state = if state_file(cfg, INDEX_FILE).exists() {
            Some(load_state(cfg)?)
        } else {
            None
        };
        let provider = state
            .as_ref()
            .map(|s| HashingEmbedder::new(s.index.config().d, DEFAULT_HASHING_SEED));
        let knowledge = state.as_ref().zip(provider.as_ref()).map(|(s, p)| Knowledge {
            graph: &s.graph,
            index: &s.index,
            provider: p,
        });
        for &strategy in &args.strategies {
            let set = match args.mock_pass_rate {
                Some(p) => BernoulliSampler::new(p, cfg.seed)?.sample_set(&dataset, args.n, strategy),
                None => collect_samples(
                    &dataset,
                    args.n,
                    generator(cfg)?.as_ref(),
                    knowledge,
                    &templates,
                    &pipeline_config(cfg, strategy),
                )?,
            };
            for w in &set.warnings {
                log::warn!("{w}");
            }
            write_text(
                &args.out.join(format!("samples-{}.jsonl", strategy.family())),
                &set.to_jsonl(),
            )?;
            sets.push(set);
        }
    }
    let mut records = Vec::new();
    for set in &sets {
        records.extend(score_samples(&dataset, set)?);
    }
    let report = aggregate_report(&records, &args.options)?;
    let text = report.render_text();
    write_text(&args.out.join("report.txt"), &text)?;
    write_text(&args.out.join("report.json"), &report.to_json())?;
    print!("{text}");
    Ok(Status::Success)
}

pub fn dataset(cfg: &Config, counts: CorpusCounts, out: &Path) -> Result<Status> {
    let templates = match &cfg.paths.corpus_templates {
        Some(dir) => CorpusTemplates::load_dir(dir)?,
        None => CorpusTemplates::builtin(),
    };
    let entries = generate_corpus(counts, cfg.seed, &templates)?;
    write_text(out, &corpus_to_jsonl(&entries))?;
    println!("wrote {} entries to {}", entries.len(), out.display());
    Ok(Status::Success)
}

/// Human-readable summary of any file the tool writes, or a wireframe.
pub fn inspect(path: &Path) -> Result<Status> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("svg")) {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let doc = parse_svg(&name, &bytes)?;
        println!("wireframe {name}: {} elements", doc.elements.len());
        print!("{}", tree_to_outline(&build_component_tree(&doc)));
        return Ok(Status::Success);
    }
    let text = String::from_utf8(bytes).map_err(|_| Error::Format("file is not UTF-8".into()))?;
    let first = text.lines().next().unwrap_or("");
    let format = serde_json::from_str::<serde_json::Value>(first)
        .or_else(|_| serde_json::from_str::<serde_json::Value>(&text))
        .ok()
        .and_then(|v| {
            v.get("format")
                .or_else(|| v.get("header").and_then(|h| h.get("format")))
                .and_then(|f| f.as_str())
                .map(str::to_string)
        })
        .ok_or_else(|| Error::Format(format!("{} has no dashgen header", path.display())))?;
    print!("{}", describe(&format, &text, path)?);
    Ok(Status::Success)
}

fn describe(format: &str, text: &str, path: &Path) -> Result<String> {
    let mut out = String::new();
    match format {
        "dashgen-graph" => {
            let g = KnowledgeGraph::from_ndjson(text)?;
            writeln!(out, "knowledge graph: {} entities, {} edges", g.node_count(), g.edge_count())?;
            for kind in [EntityKind::Library, EntityKind::Component, EntityKind::Feature, EntityKind::Snippet] {
                writeln!(out, "  {:<10} {}", kind.as_str(), g.count_kind(kind))?;
            }
        }
        "dashgen-ivfadc" => {
            let idx = IvfadcIndex::from_json(text)?;
            let c = idx.config();
            writeln!(
                out,
                "IVFADC index: {} vectors, d={} k_c={} m={} k_s={} seed={}",
                idx.len(),
                c.d,
                c.k_c,
                c.m,
                c.k_s,
                c.seed
            )?;
            let sizes: Vec<String> = idx.inverted_lists().iter().map(|l| l.len().to_string()).collect();
            writeln!(out, "  list sizes: {}", sizes.join(" "))?;
        }
        RUN_FORMAT => {
            let run = load_run(path)?;
            writeln!(out, "run {} ({}, {}): {} tasks, {} failed", run.run_id, run.model_id, run.strategy, run.tasks.len(), run.failed())?;
            for t in &run.tasks {
                writeln!(out, "  {:<16} {:<10} {:<18} {}", t.task.page_id, t.task.route, t.status.label(), t.task.target_path)?;
            }
            writeln!(out, "  files written: {}", run.produced_files.len())?;
        }
        REPAIR_FORMAT => {
            let r: RepairRecord = serde_json::from_str(text)?;
            writeln!(
                out,
                "repair (A={}, F={}): {} attempt(s), {} history entries",
                r.bounds.max_attempts,
                r.bounds.max_fixes,
                r.outcome.attempts_used,
                r.outcome.history.len()
            )?;
            for (file, o) in &r.outcome.per_file {
                writeln!(out, "  {file}: {:?}, {} trial(s)", o.final_status, o.total_trials)?;
            }
        }
        "dashgen-corpus" => {
            let entries = corpus_from_jsonl(text)?;
            let apps: BTreeSet<&str> = entries.iter().map(|e| e.concat_id.as_str()).collect();
            writeln!(out, "dataset: {} entries in {} app instances", entries.len(), apps.len())?;
            for t in dashgen::task::PageType::ALL {
                let n = entries.iter().filter(|e| e.page_type == t).count();
                writeln!(out, "  {:<18} {n}", t.display_name())?;
            }
        }
        "dashgen-samples" => {
            let s = SampleSet::from_jsonl(text)?;
            let total: usize = s.entries.iter().map(|e| e.samples.len()).sum();
            writeln!(out, "samples: strategy {}, model {}, {} entries, {total} completions", s.strategy, s.model_id, s.entries.len())?;
        }
        "dashgen-report" => {
            out.push_str(&MetricReport::from_json(text)?.render_text());
        }
        "dashgen-routes" => {
            let m = RouteManifest::from_json(text)?;
            writeln!(out, "route manifest: {} routes", m.len())?;
            for (route, e) in m.iter() {
                writeln!(out, "  {route:<12} {}", e.target_path)?;
            }
        }
        other => return Err(Error::Format(format!("unknown format {other:?}")).into()),
    }
    Ok(out)
}
