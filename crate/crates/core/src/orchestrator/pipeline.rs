//! The generation pipeline: prompt, generate, mock, validate, route.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::generate::{generate_page, FailureReason, TaskRecord, TaskStatus, Transcript};
use super::llm::LlmClient;
use super::mocks::{fixture_path, mock_apis};
use super::routes::{render_router, RouteManifest, MANIFEST_PATH, ROUTER_PATH};
use super::workspace::{render_file_tree, Workspace};
use crate::error::{Error, Result};
use crate::kbase::KnowledgeGraph;
use crate::promptgen::openapi::{filter_schema, match_path, parse_openapi};
use crate::promptgen::{
    assemble_prompt, exemplar_candidates, recommend_stack, select_snippets, Architecture,
    PromptBundle, PromptInput, ShotStrategy, StackRecommendation, TemplateSet, DEFAULT_TOKEN_BUDGET,
};
use crate::repair::{static_validate, ImportPolicy};
use crate::retrieval::{retrieve, EmbeddingProvider, IvfadcIndex, RetrievalParams};
use crate::task::PageTask;
use crate::wireframe::{tree_to_outline, ComponentTree, LayoutOutline};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub strategy: ShotStrategy,
    pub architecture: Architecture,
    pub retrieval: RetrievalParams,
    pub token_budget: usize,
    /// Page tasks generated at once.
    pub parallelism: usize,
    pub default_stack: StackRecommendation,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            strategy: ShotStrategy::Few(3),
            architecture: Architecture::default(),
            retrieval: RetrievalParams::default(),
            token_budget: DEFAULT_TOKEN_BUDGET,
            parallelism: 4,
            default_stack: StackRecommendation::default(),
        }
    }
}

/// Knowledge graph plus its trained index and the embedder behind it.
#[derive(Clone, Copy)]
pub struct Knowledge<'a> {
    pub graph: &'a KnowledgeGraph,
    pub index: &'a IvfadcIndex,
    pub provider: &'a dyn EmbeddingProvider,
}

pub struct PipelineInputs<'a> {
    pub tasks: &'a [PageTask],
    pub wireframe: Option<&'a ComponentTree>,
    /// OpenAPI text; empty when the app has no API.
    pub api_schema: &'a str,
    pub knowledge: Option<Knowledge<'a>>,
    pub templates: &'a TemplateSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRun {
    pub run_id: String,
    pub model_id: String,
    pub strategy: ShotStrategy,
    pub tasks: Vec<TaskRecord>,
    /// Every file the run wrote, with its final content.
    pub produced_files: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl GenerationRun {
    pub fn failed(&self) -> usize {
        self.tasks
            .iter()
            .filter(|t| t.status != TaskStatus::Ok)
            .count()
    }
}

/// The wireframe part for one page.
#[derive(Debug, Clone, PartialEq)]
pub struct PageView {
    pub outline: LayoutOutline,
    pub endpoints: Vec<String>,
    /// `kind label` per labelled element, in outline order.
    pub elements: Vec<String>,
    pub warnings: Vec<String>,
}

pub fn page_view(task: &PageTask, tree: Option<&ComponentTree>) -> PageView {
    let Some(tree) = tree else {
        return PageView {
            outline: format!(
                "container #__root @(0,0,0,0) {{}}\n  text #{}-title @(0,0,0,0) {{label={}}}\n",
                task.page_id, task.page_id
            ),
            endpoints: vec![],
            elements: vec![],
            warnings: vec![format!("{}: no wireframe; outline holds only the page title", task.page_id)],
        };
    };
    let mut warnings = Vec::new();
    let key = task.wireframe_page.as_deref().unwrap_or(&task.page_id);
    let sub = match tree.page_subtree(key) {
        Some(s) => s,
        None => {
            warnings.push(format!(
                "{}: no wireframe element is annotated `page: {key}`; using the whole wireframe",
                task.page_id
            ));
            tree.clone()
        }
    };
    let outline = tree_to_outline(&sub);
    let elements = outline
        .lines()
        .filter_map(|line| {
            let kind = line.split_whitespace().next()?;
            let label = line.split("label=").nth(1)?;
            let label = label.split(", ").next()?.trim_end_matches('}');
            Some(format!("{kind} {label}"))
        })
        .collect();
    PageView {
        outline,
        endpoints: sub.data_endpoints(),
        elements,
        warnings,
    }
}

/// Text embedded to retrieve exemplars for a page: its type, requirements,
/// and the kinds and labels of its wireframe elements.
pub fn retrieval_query(task: &PageTask, view: &PageView) -> String {
    let mut q = format!(
        "{} page {}. {}",
        task.page_type.display_name(),
        task.page_id,
        task.requirements.trim()
    );
    if !view.elements.is_empty() {
        q.push_str(" Elements: ");
        q.push_str(&view.elements.join(", "));
    }
    q
}

pub struct PreparedPage {
    pub bundle: PromptBundle,
    pub stack: StackRecommendation,
}

/// Everything up to the prompt for one page.
pub fn prepare_page(
    task: &PageTask,
    inputs: &PipelineInputs<'_>,
    config: &PipelineConfig,
    file_structure: &str,
) -> Result<PreparedPage> {
    let view = page_view(task, inputs.wireframe);
    let PageView { outline, endpoints, mut warnings, .. } = view.clone();
    let (stack, snippets) = match inputs.knowledge {
        Some(k) => {
            let query = retrieval_query(task, &view);
            let hits = retrieve(&query, k.graph, k.index, k.provider, &config.retrieval)?;
            let entities: Vec<_> = hits.iter().map(|h| h.entity.clone()).collect();
            let stack = recommend_stack(&entities, k.graph, &config.default_stack);
            let candidates = exemplar_candidates(&hits, k.graph);
            // Shortfalls are reported once, by assemble_prompt.
            let (snippets, _) = select_snippets(&candidates, config.strategy);
            (stack, snippets)
        }
        None => (config.default_stack.clone(), vec![]),
    };
    let api = filter_schema(inputs.api_schema, &endpoints)?;
    let input = PromptInput {
        page: task,
        outline: &outline,
        api_schema: &api,
        file_structure,
        requirements: &task.requirements,
        endpoints: &endpoints,
        snippets: &snippets,
        stack: &stack,
        strategy: config.strategy,
        architecture: config.architecture,
        templates: inputs.templates,
        token_budget: config.token_budget,
    };
    let mut bundle = assemble_prompt(&input)?;
    warnings.extend(bundle.warnings.drain(..).map(|w| format!("{}: {w}", task.page_id)));
    bundle.warnings = warnings;
    Ok(PreparedPage { bundle, stack })
}

fn run_id(model_id: &str, prompts: &[(String, String)]) -> String {
    let mut h = Sha256::new();
    h.update(model_id.as_bytes());
    for (id, p) in prompts {
        h.update([0]);
        h.update(id.as_bytes());
        h.update([0]);
        h.update(p.as_bytes());
    }
    hex::encode(&h.finalize()[..6])
}

/// Runs every task. A failing task never stops its siblings; only setup
/// problems (bad schema, thread pool, workspace I/O) are errors.
pub fn run_pipeline(
    inputs: &PipelineInputs<'_>,
    client: &dyn LlmClient,
    workspace: &Workspace,
    config: &PipelineConfig,
) -> Result<GenerationRun> {
    let schema_doc = parse_openapi(inputs.api_schema)?;
    if config.parallelism == 0 {
        return Err(Error::Parameter("parallelism must be at least 1".into()));
    }

    // Files the workspace will hold after this run, so that a rerun into the
    // same workspace sees the same listing.
    let mut planned: Vec<String> = workspace.files();
    planned.extend(inputs.tasks.iter().map(|t| t.target_path.clone()));
    planned.push(MANIFEST_PATH.into());
    planned.push(ROUTER_PATH.into());
    if let Some(doc) = &schema_doc {
        for t in inputs.tasks {
            planned.extend(
                page_view(t, inputs.wireframe)
                    .endpoints
                    .iter()
                    .filter_map(|e| match_path(doc, e))
                    .map(|p| fixture_path(&p)),
            );
        }
    }
    let file_structure = render_file_tree(&planned);

    let prepared: Vec<std::result::Result<PreparedPage, String>> = inputs
        .tasks
        .iter()
        .map(|t| match prepare_page(t, inputs, config, &file_structure) {
            Ok(p) => Ok(p),
            Err(e) if e.is_configuration() => Err(format!("!{e}")),
            Err(e) => Err(e.to_string()),
        })
        .collect();
    if let Some(Err(m)) = prepared.iter().find(|p| matches!(p, Err(m) if m.starts_with('!'))) {
        return Err(Error::Config(m[1..].to_string()));
    }
    let prompts: Vec<(String, String)> = inputs
        .tasks
        .iter()
        .zip(&prepared)
        .map(|(t, p)| {
            let text = p.as_ref().map(|p| p.bundle.render()).unwrap_or_default();
            (t.page_id.clone(), text)
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut records: Vec<TaskRecord> = pool.install(|| {
        inputs
            .tasks
            .par_iter()
            .zip(prepared.par_iter())
            .map(|(task, prep)| match prep {
                Ok(p) => generate_page(task, &p.bundle, client, workspace, 0),
                Err(message) => Ok(TaskRecord {
                    task: task.clone(),
                    status: TaskStatus::Failed {
                        reason: FailureReason::Prompt,
                        message: message.clone(),
                    },
                    transcripts: vec![Transcript {
                        prompt: String::new(),
                        completion: String::new(),
                        model_id: client.model_id().to_string(),
                        latency_ms: 0,
                    }],
                    warnings: vec![],
                }),
            })
            .collect::<Result<Vec<_>>>()
    })?;

    // Single writer from here on.
    let mut produced: BTreeMap<String, String> = BTreeMap::new();
    for r in records.iter().filter(|r| r.status == TaskStatus::Ok) {
        produced.insert(r.task.target_path.clone(), workspace.read(&r.task.target_path)?);
    }
    let mocked = mock_apis(&produced, inputs.api_schema)?;
    for (path, text) in mocked.rewritten.iter().chain(&mocked.fixtures) {
        workspace.write(path, text)?;
        produced.insert(path.clone(), text.clone());
    }
    let mut warnings = mocked.warnings;

    let files: BTreeSet<String> = workspace.files().into_iter().collect();
    let mut manifest = if workspace.exists(MANIFEST_PATH) {
        RouteManifest::from_json(&workspace.read(MANIFEST_PATH)?)?
    } else {
        RouteManifest::new()
    };
    for (record, prep) in records.iter_mut().zip(&prepared) {
        if record.status != TaskStatus::Ok {
            continue;
        }
        let stack = prep.as_ref().map(|p| &p.stack).expect("generated tasks were prepared");
        let policy = ImportPolicy {
            whitelist: stack.allowed_imports().into_iter().collect(),
            files: files.clone(),
        };
        let path = &record.task.target_path;
        let report = static_validate(path, &produced[path], &policy);
        if !report.passed {
            record.status = TaskStatus::Invalid {
                diagnostics: report.diagnostics.iter().map(|d| d.to_string()).collect(),
            };
            continue;
        }
        if let Err(e) = manifest.inject(&record.task) {
            record.status = TaskStatus::Failed {
                reason: FailureReason::Conflict,
                message: e.to_string(),
            };
        }
    }
    let manifest_text = manifest.to_json();
    let router = render_router(&manifest);
    workspace.write(MANIFEST_PATH, &manifest_text)?;
    workspace.write(ROUTER_PATH, &router)?;
    produced.insert(MANIFEST_PATH.into(), manifest_text);
    produced.insert(ROUTER_PATH.into(), router);

    for r in &records {
        warnings.extend(r.warnings.iter().cloned());
    }
    Ok(GenerationRun {
        run_id: run_id(client.model_id(), &prompts),
        model_id: client.model_id().to_string(),
        strategy: config.strategy,
        tasks: records,
        produced_files: produced,
        warnings,
    })
}
