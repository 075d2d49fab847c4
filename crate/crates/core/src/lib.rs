//! Wireframe-driven dashboard generation.

pub mod dialect;
pub mod error;
pub mod fsutil;
pub mod evaluation;
pub mod kbase;
pub mod orchestrator;
pub mod promptgen;
pub mod repair;
pub mod retrieval;
pub mod task;
pub mod wireframe;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/wireframes.md")]
    struct Wireframes;
    #[doc = include_str!("../../../book/src/knowledge-base.md")]
    struct KnowledgeBase;
    #[doc = include_str!("../../../book/src/retrieval.md")]
    struct Retrieval;
    #[doc = include_str!("../../../book/src/generation.md")]
    struct Generation;
    #[doc = include_str!("../../../book/src/repair.md")]
    struct Repair;
    #[doc = include_str!("../../../book/src/evaluation.md")]
    struct Evaluation;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct CommandLine;
}
