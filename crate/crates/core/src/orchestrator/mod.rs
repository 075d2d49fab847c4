//! Page planning, generation, API mocking, and route injection.

pub mod generate;
pub mod geojson;
pub mod llm;
pub mod mock;
pub mod mocks;
pub mod pipeline;
pub mod plan;
pub mod routes;
pub mod workspace;

pub use generate::{generate_page, FailureReason, TaskRecord, TaskStatus, Transcript};
pub use geojson::validate_geojson;
pub use llm::{
    clean_completion, CannedClient, FailingClient, HttpLlmClient, LlmClient, LlmConfig, RetryPolicy,
};
pub use mock::{BracketFixer, EchoAgent, TemplateMock};
pub use mocks::{mock_apis, MockOutput};
pub use pipeline::{run_pipeline, GenerationRun, Knowledge, PipelineConfig, PipelineInputs};
pub use plan::{plan_pages, AppSpec, PageSpec};
pub use routes::{inject_route, render_router, RouteEntry, RouteManifest};
pub use workspace::Workspace;
