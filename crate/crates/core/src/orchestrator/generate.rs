//! One LLM call per page and the record it leaves behind.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::llm::{clean_completion, LlmClient};
use super::workspace::Workspace;
use crate::error::{Error, Result};
use crate::promptgen::PromptBundle;
use crate::task::PageTask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub prompt: String,
    pub completion: String,
    pub model_id: String,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureReason {
    /// The client failed after its retries.
    Transport,
    /// The completion was empty after cleaning.
    Empty,
    /// The prompt could not be built.
    Prompt,
    /// Writing the file failed.
    Io,
    /// The route is already bound to another file.
    Conflict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum TaskStatus {
    /// Written, statically valid, and routed.
    Ok,
    /// Written but failed static validation, so not routed.
    Invalid { diagnostics: Vec<String> },
    Failed { reason: FailureReason, message: String },
}

impl TaskStatus {
    pub fn label(&self) -> String {
        match self {
            TaskStatus::Ok => "ok".into(),
            TaskStatus::Invalid { .. } => "invalid".into(),
            TaskStatus::Failed { reason, .. } => {
                format!("failed({})", serde_json::to_value(reason).expect("enum").as_str().unwrap_or(""))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task: PageTask,
    pub status: TaskStatus,
    pub transcripts: Vec<Transcript>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Calls the client once (clients retry internally), cleans the completion,
/// and writes it to the task's target path. Failures become the task status;
/// only a bundle/task mismatch is an error.
pub fn generate_page(
    task: &PageTask,
    bundle: &PromptBundle,
    client: &dyn LlmClient,
    workspace: &Workspace,
    sample: u64,
) -> Result<TaskRecord> {
    if bundle.page_id != task.page_id {
        return Err(Error::Input(format!(
            "prompt bundle is for {}, task is {}",
            bundle.page_id, task.page_id
        )));
    }
    let prompt = bundle.render();
    let started = Instant::now();
    let reply = client.complete(&prompt, sample);
    let latency_ms = started.elapsed().as_millis() as u64;
    let (completion, status) = match reply {
        Err(e) => (
            String::new(),
            TaskStatus::Failed {
                reason: FailureReason::Transport,
                message: e.to_string(),
            },
        ),
        Ok(raw) => {
            let cleaned = clean_completion(&raw);
            if cleaned.is_empty() {
                (
                    raw,
                    TaskStatus::Failed {
                        reason: FailureReason::Empty,
                        message: "completion is empty".into(),
                    },
                )
            } else {
                let status = match workspace.write(&task.target_path, &cleaned) {
                    Ok(()) => TaskStatus::Ok,
                    Err(e) => TaskStatus::Failed {
                        reason: FailureReason::Io,
                        message: e.to_string(),
                    },
                };
                (raw, status)
            }
        }
    };
    Ok(TaskRecord {
        task: task.clone(),
        status,
        transcripts: vec![Transcript {
            prompt,
            completion,
            model_id: client.model_id().to_string(),
            latency_ms,
        }],
        warnings: bundle.warnings.clone(),
    })
}
