//! Component knowledge base.
//!
//! Source files from a corpus of UI components are parsed into typed
//! [`KnowledgeEntity`] records (components, the libraries they import, the
//! features they advertise, and verbatim code snippets) and linked into a
//! [`KnowledgeGraph`] that is persisted as newline-delimited JSON.

mod classify;
mod graph;
mod ingest;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use classify::{classify_entity, word_tokens, Taxonomy};
pub use graph::{build_graph, graph_neighbors, Edge, KnowledgeGraph, Relation};
pub use ingest::{ingest_corpus, ingest_source, package_name, CorpusIngest, Ingested};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Library,
    Component,
    Feature,
    Snippet,
}

impl EntityKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EntityKind::Library => "library",
            EntityKind::Component => "component",
            EntityKind::Feature => "feature",
            EntityKind::Snippet => "snippet",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Declaration order is the tie-break priority used by classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainLabel {
    Geovisualization,
    Charting,
    Layout,
    Forms,
    Navigation,
    Other,
}

impl DomainLabel {
    pub const ALL: [DomainLabel; 6] = [
        DomainLabel::Geovisualization,
        DomainLabel::Charting,
        DomainLabel::Layout,
        DomainLabel::Forms,
        DomainLabel::Navigation,
        DomainLabel::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DomainLabel::Geovisualization => "geovisualization",
            DomainLabel::Charting => "charting",
            DomainLabel::Layout => "layout",
            DomainLabel::Forms => "forms",
            DomainLabel::Navigation => "navigation",
            DomainLabel::Other => "other",
        }
    }
}

impl fmt::Display for DomainLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainLabel {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DomainLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| crate::Error::Config(format!("unknown domain label {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeEntity {
    pub entity_id: String,
    pub kind: EntityKind,
    pub name: String,
    /// Package names imported by the defining file (components, snippets).
    #[serde(default)]
    pub imports: Vec<String>,
    pub domain_label: DomainLabel,
    pub description: String,
    pub sample_code: String,
    pub source_path: String,
    /// Byte span of `sample_code` within the source file.
    pub span: (usize, usize),
    /// Feature names advertised by a component.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub features: Vec<String>,
    /// For snippets, the id of the component they exemplify.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exemplifies: Option<String>,
}

fn hash_id(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    hex::encode(&h.finalize()[..8])
}

/// Id of an entity extracted from a span of a source file.
pub fn span_entity_id(kind: EntityKind, source_path: &str, span: (usize, usize)) -> String {
    hash_id(&[
        kind.as_str(),
        source_path,
        &format!("{}-{}", span.0, span.1),
    ])
}

/// Libraries and features are shared across files and keyed by name.
pub fn library_id(name: &str) -> String {
    hash_id(&["library", name])
}

pub fn feature_id(name: &str) -> String {
    hash_id(&["feature", &name.to_ascii_lowercase()])
}

/// Text embedded for retrieval.
pub fn entity_text(e: &KnowledgeEntity) -> String {
    let mut text = format!("{} {}: {}", e.kind, e.name, e.description.trim_end_matches('.'));
    if !e.imports.is_empty() {
        text.push_str(". uses ");
        text.push_str(&e.imports.join(", "));
    }
    if !e.features.is_empty() {
        text.push_str(". features ");
        text.push_str(&e.features.join(", "));
    }
    text.push_str(". domain ");
    text.push_str(e.domain_label.as_str());
    text
}
