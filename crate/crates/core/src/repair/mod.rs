//! Validation tiers and the bounded repair loop.

mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use validate::{
    external_validate, probe_routes, static_validate, Diagnostic, ExternalValidator, ImportPolicy,
    Tier, ValidationReport, DEFAULT_DIAGNOSTIC_PATTERN, PROBE_TIMEOUT,
};

use crate::error::{Error, Result};
use crate::orchestrator::llm::{clean_completion, LlmClient};
use crate::orchestrator::workspace::Workspace;
use crate::promptgen::TemplateSet;

pub const DEFAULT_MAX_ATTEMPTS: usize = 3;
pub const DEFAULT_MAX_FIXES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairBounds {
    /// A: validation rounds.
    pub max_attempts: usize,
    /// F: fix proposals per broken file per round.
    pub max_fixes: usize,
}

impl Default for RepairBounds {
    fn default() -> Self {
        RepairBounds {
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            max_fixes: DEFAULT_MAX_FIXES,
        }
    }
}

impl RepairBounds {
    pub fn validate(&self) -> Result<()> {
        if self.max_attempts == 0 || self.max_fixes == 0 {
            return Err(Error::Parameter(format!(
                "max attempts ({}) and max fixes ({}) must both be at least 1",
                self.max_attempts, self.max_fixes
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileStatus {
    Fixed,
    StillBroken,
    Untouched,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileOutcome {
    /// Trials in the latest round that worked on this file (at most F).
    pub fixes_tried: usize,
    /// Trials over all rounds.
    pub total_trials: usize,
    pub final_status: FileStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialResult {
    /// Passed static validation and was saved.
    Saved,
    /// Failed static validation; discarded.
    Invalid,
    /// The agent replied with nothing.
    Empty,
    /// The agent call failed.
    AgentError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub attempt: usize,
    pub file: String,
    pub trial: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fix_hash: Option<String>,
    pub result: TrialResult,
    /// Diagnostics left in the candidate (or the error text).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub attempts_used: usize,
    pub per_file: BTreeMap<String, FileOutcome>,
    pub history: Vec<HistoryEntry>,
    /// Reports from the final validation round.
    pub final_reports: Vec<ValidationReport>,
}

impl RepairOutcome {
    pub fn count(&self, status: FileStatus) -> usize {
        self.per_file.values().filter(|o| o.final_status == status).count()
    }
}

pub fn fix_hash(candidate: &str) -> String {
    hex::encode(&Sha256::digest(candidate.as_bytes())[..8])
}

/// Asks the agent for a corrected file. The candidate is returned, not saved.
/// An empty reply is an error counted as a failed fix.
pub fn propose_fix(
    file: &str,
    contents: &str,
    diagnostics: &[Diagnostic],
    history: &str,
    agent: &dyn LlmClient,
    templates: &TemplateSet,
    sample: u64,
) -> Result<String> {
    if diagnostics.is_empty() {
        return Err(Error::Input(format!("no diagnostics for {file}")));
    }
    let diag_text = diagnostics
        .iter()
        .map(|d| format!("- {d}"))
        .collect::<Vec<_>>()
        .join("\n");
    let vars = BTreeMap::from([
        ("path", file.to_string()),
        ("diagnostics", diag_text),
        ("history", if history.is_empty() { "none".to_string() } else { history.to_string() }),
        ("contents", contents.trim_end_matches('\n').to_string()),
    ]);
    let prompt = templates.render("fix", &vars)?;
    let reply = clean_completion(&agent.complete(&prompt, sample)?);
    if reply.trim().is_empty() {
        return Err(Error::Validation(format!("agent returned an empty fix for {file}")));
    }
    Ok(reply)
}

/// Options for [`repair_loop`] beyond the agent and bounds.
pub struct RepairContext<'a> {
    pub workspace: &'a Workspace,
    pub whitelist: &'a BTreeSet<String>,
    pub external: Option<&'a ExternalValidator>,
    pub templates: &'a TemplateSet,
    /// JSONL log, one record per history entry.
    pub log: Option<&'a Path>,
}

fn validate_all(ctx: &RepairContext<'_>) -> Result<Vec<ValidationReport>> {
    let files = ctx.workspace.files();
    let policy = ImportPolicy::new(ctx.whitelist.iter().cloned(), files.iter().cloned());
    let mut reports = Vec::new();
    for f in ctx.workspace.source_files() {
        let contents = ctx.workspace.read(&f)?;
        reports.push(static_validate(&f, &contents, &policy));
    }
    if let Some(ext) = ctx.external {
        reports.push(external_validate(ctx.workspace.root(), ext)?);
    }
    Ok(reports)
}

/// Broken files and their diagnostics. External diagnostics are attributed
/// to the file they name when it exists in the workspace.
fn broken_set(ctx: &RepairContext<'_>, reports: &[ValidationReport]) -> BTreeMap<String, Vec<Diagnostic>> {
    let mut out: BTreeMap<String, Vec<Diagnostic>> = BTreeMap::new();
    for r in reports.iter().filter(|r| !r.passed) {
        for d in &r.diagnostics {
            let file = d.file.trim_start_matches("./");
            if ctx.workspace.exists(file) {
                out.entry(file.to_string()).or_default().push(d.clone());
            } else {
                log::warn!("diagnostic without a workspace file: {d}");
            }
        }
    }
    out
}

fn history_text(history: &[HistoryEntry], file: &str) -> String {
    let mut s = String::new();
    for h in history.iter().filter(|h| h.file == file) {
        let _ = write!(s, "- attempt {} trial {}: {:?}", h.attempt, h.trial, h.result);
        if let Some(d) = h.diagnostics.first() {
            let _ = write!(s, " ({d})");
        }
        s.push('\n');
    }
    s.trim_end().to_string()
}

/// Validate, fix, repeat. Each round validates every source file (plus the
/// external command when configured); each broken file gets up to F fix
/// proposals, and the first one passing static validation is saved. Stops
/// when nothing is broken or after A rounds.
pub fn repair_loop(ctx: &RepairContext<'_>, agent: &dyn LlmClient, bounds: RepairBounds) -> Result<RepairOutcome> {
    bounds.validate()?;
    let mut log = match ctx.log {
        Some(p) => {
            if let Some(parent) = p.parent() {
                std::fs::create_dir_all(parent)?;
            }
            Some(std::fs::File::create(p)?)
        }
        None => None,
    };
    let mut history: Vec<HistoryEntry> = Vec::new();
    let mut per_file: BTreeMap<String, FileOutcome> = BTreeMap::new();
    let mut rounds_with_work = 0;
    let mut final_reports = Vec::new();
    let mut exhausted = true;

    for attempt in 1..=bounds.max_attempts {
        let reports = validate_all(ctx)?;
        let broken = broken_set(ctx, &reports);
        final_reports = reports;
        if broken.is_empty() {
            exhausted = false;
            break;
        }
        rounds_with_work += 1;
        for (file, diags) in &broken {
            let contents = ctx.workspace.read(file)?;
            let files = ctx.workspace.files();
            let policy = ImportPolicy::new(ctx.whitelist.iter().cloned(), files);
            let outcome = per_file.entry(file.clone()).or_insert(FileOutcome {
                fixes_tried: 0,
                total_trials: 0,
                final_status: FileStatus::StillBroken,
            });
            outcome.fixes_tried = 0;
            for trial in 1..=bounds.max_fixes {
                outcome.fixes_tried += 1;
                outcome.total_trials += 1;
                let sample = (attempt * bounds.max_fixes + trial) as u64;
                let prior = history_text(&history, file);
                let entry = match propose_fix(file, &contents, diags, &prior, agent, ctx.templates, sample) {
                    Ok(candidate) => {
                        let report = static_validate(file, &candidate, &policy);
                        let hash = Some(fix_hash(&candidate));
                        if report.passed {
                            ctx.workspace.write(file, &candidate)?;
                            HistoryEntry {
                                attempt,
                                file: file.clone(),
                                trial,
                                fix_hash: hash,
                                result: TrialResult::Saved,
                                diagnostics: vec![],
                            }
                        } else {
                            HistoryEntry {
                                attempt,
                                file: file.clone(),
                                trial,
                                fix_hash: hash,
                                result: TrialResult::Invalid,
                                diagnostics: report.diagnostics.iter().map(|d| d.to_string()).collect(),
                            }
                        }
                    }
                    Err(Error::Validation(m)) => HistoryEntry {
                        attempt,
                        file: file.clone(),
                        trial,
                        fix_hash: None,
                        result: TrialResult::Empty,
                        diagnostics: vec![m],
                    },
                    Err(e) if e.is_configuration() => return Err(e),
                    Err(e) => HistoryEntry {
                        attempt,
                        file: file.clone(),
                        trial,
                        fix_hash: None,
                        result: TrialResult::AgentError,
                        diagnostics: vec![e.to_string()],
                    },
                };
                if let Some(f) = log.as_mut() {
                    writeln!(f, "{}", serde_json::to_string(&entry)?)?;
                }
                let saved = entry.result == TrialResult::Saved;
                history.push(entry);
                if saved {
                    break;
                }
            }
        }
    }

    if exhausted {
        // The last round's saves have not been re-validated yet.
        final_reports = validate_all(ctx)?;
    }
    let still = broken_set(ctx, &final_reports);
    for (file, outcome) in per_file.iter_mut() {
        outcome.final_status = if still.contains_key(file) {
            FileStatus::StillBroken
        } else {
            FileStatus::Fixed
        };
    }
    for f in ctx.workspace.source_files() {
        per_file.entry(f).or_insert(FileOutcome {
            fixes_tried: 0,
            total_trials: 0,
            final_status: FileStatus::Untouched,
        });
    }
    Ok(RepairOutcome {
        attempts_used: rounds_with_work.max(1),
        per_file,
        history,
        final_reports,
    })
}
