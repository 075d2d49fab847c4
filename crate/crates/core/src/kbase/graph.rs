use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{feature_id, library_id, EntityKind, KnowledgeEntity};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub const GRAPH_FORMAT: &str = "dashgen-graph";
pub const GRAPH_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Relation {
    /// component → library
    Uses,
    /// component → feature
    Provides,
    /// snippet → component
    Exemplifies,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Uses => "USES",
            Relation::Provides => "PROVIDES",
            Relation::Exemplifies => "EXEMPLIFIES",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: String,
    pub relation: Relation,
    pub dst: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeGraph {
    nodes: BTreeMap<String, KnowledgeEntity>,
    edges: BTreeSet<Edge>,
}

/// One line of the persisted graph.
#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record {
    Header {
        format: String,
        version: u32,
        nodes: usize,
        edges: usize,
    },
    Node(KnowledgeEntity),
    Edge(Edge),
}

impl KnowledgeGraph {
    pub fn node(&self, id: &str) -> Option<&KnowledgeEntity> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &KnowledgeEntity> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn count_kind(&self, kind: EntityKind) -> usize {
        self.nodes.values().filter(|e| e.kind == kind).count()
    }

    /// Sources of edges with `relation` pointing at `id`, sorted.
    pub fn incoming(&self, id: &str, relation: Relation) -> Vec<String> {
        self.edges
            .iter()
            .filter(|e| e.dst == id && e.relation == relation)
            .map(|e| e.src.clone())
            .collect()
    }

    /// Newline-delimited JSON: a header line, nodes by id, then edges.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        let header = Record::Header {
            format: GRAPH_FORMAT.into(),
            version: GRAPH_VERSION,
            nodes: self.nodes.len(),
            edges: self.edges.len(),
        };
        let mut push = |r: &Record| {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        };
        push(&header);
        for node in self.nodes.values() {
            push(&Record::Node(node.clone()));
        }
        for edge in &self.edges {
            push(&Record::Edge(edge.clone()));
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Record = serde_json::from_str(
            lines
                .next()
                .ok_or_else(|| Error::Format("empty graph file".into()))?,
        )?;
        let (n_nodes, n_edges) = match header {
            Record::Header {
                format,
                version,
                nodes,
                edges,
            } if format == GRAPH_FORMAT => {
                if version > GRAPH_VERSION {
                    return Err(Error::Format(format!(
                        "graph file version {version} is newer than supported {GRAPH_VERSION}"
                    )));
                }
                (nodes, edges)
            }
            _ => return Err(Error::Format("missing graph header".into())),
        };
        let mut graph = KnowledgeGraph::default();
        for line in lines {
            match serde_json::from_str::<Record>(line)? {
                Record::Node(n) => {
                    if graph.nodes.insert(n.entity_id.clone(), n).is_some() {
                        return Err(Error::Format("duplicate node record".into()));
                    }
                }
                Record::Edge(e) => {
                    graph.edges.insert(e);
                }
                Record::Header { .. } => return Err(Error::Format("repeated header".into())),
            }
        }
        if graph.nodes.len() != n_nodes || graph.edges.len() != n_edges {
            return Err(Error::Format(format!(
                "graph header announces {n_nodes} nodes/{n_edges} edges, found {}/{}",
                graph.nodes.len(),
                graph.edges.len()
            )));
        }
        graph.check_edges()?;
        Ok(graph)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_ndjson().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_ndjson(&std::fs::read_to_string(path)?)
    }

    fn check_edges(&self) -> Result<()> {
        for e in &self.edges {
            let kinds = (
                self.nodes.get(&e.src).map(|n| n.kind),
                self.nodes.get(&e.dst).map(|n| n.kind),
            );
            let expected = match e.relation {
                Relation::Uses => (EntityKind::Component, EntityKind::Library),
                Relation::Provides => (EntityKind::Component, EntityKind::Feature),
                Relation::Exemplifies => (EntityKind::Snippet, EntityKind::Component),
            };
            if kinds != (Some(expected.0), Some(expected.1)) {
                return Err(Error::Validation(format!(
                    "edge {} -{}-> {} does not connect a {} to a {}",
                    e.src, e.relation, e.dst, expected.0, expected.1
                )));
            }
        }
        Ok(())
    }
}

/// Link entities into a graph.
///
/// Libraries and features are keyed by name and merged across files.
/// Re-ingesting an unchanged file yields identical records, which collapse.
/// Any other id collision is an error naming both source paths.
pub fn build_graph(entities: &[KnowledgeEntity]) -> Result<KnowledgeGraph> {
    let mut graph = KnowledgeGraph::default();
    for e in entities {
        match graph.nodes.get(&e.entity_id) {
            None => {
                graph.nodes.insert(e.entity_id.clone(), e.clone());
            }
            Some(existing) if existing == e => {}
            Some(existing)
                if existing.kind == e.kind
                    && matches!(e.kind, EntityKind::Library | EntityKind::Feature)
                    && existing.name.eq_ignore_ascii_case(&e.name) =>
            {
                // Keep the record from the lexicographically first file.
                if e.source_path < existing.source_path {
                    graph.nodes.insert(e.entity_id.clone(), e.clone());
                }
            }
            Some(existing) => {
                return Err(Error::Validation(format!(
                    "duplicate entity id {} from {} and {}",
                    e.entity_id, existing.source_path, e.source_path
                )));
            }
        }
    }

    let mut edges = BTreeSet::new();
    for e in graph.nodes.values() {
        match e.kind {
            EntityKind::Component => {
                for lib in &e.imports {
                    edges.insert(Edge {
                        src: e.entity_id.clone(),
                        relation: Relation::Uses,
                        dst: library_id(lib),
                    });
                }
                for f in &e.features {
                    edges.insert(Edge {
                        src: e.entity_id.clone(),
                        relation: Relation::Provides,
                        dst: feature_id(f),
                    });
                }
            }
            EntityKind::Snippet => {
                if let Some(c) = &e.exemplifies {
                    edges.insert(Edge {
                        src: e.entity_id.clone(),
                        relation: Relation::Exemplifies,
                        dst: c.clone(),
                    });
                }
            }
            EntityKind::Library | EntityKind::Feature => {}
        }
    }
    graph.edges = edges;
    graph.check_edges()?;
    Ok(graph)
}

/// Destinations of `node`'s outgoing `relation` edges, sorted.
pub fn graph_neighbors(graph: &KnowledgeGraph, node: &str, relation: Relation) -> Result<Vec<String>> {
    if !graph.nodes.contains_key(node) {
        return Err(Error::Lookup(format!("unknown entity {node}")));
    }
    // Edges are ordered by (src, relation, dst).
    Ok(graph
        .edges
        .iter()
        .filter(|e| e.src == node && e.relation == relation)
        .map(|e| e.dst.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kbase::ingest_source;

    fn file(component: &str, libs: &[&str]) -> String {
        let mut s = String::new();
        for (i, l) in libs.iter().enumerate() {
            s.push_str(&format!("import L{i} from '{l}';\n"));
        }
        s.push_str(&format!("export function {component}() {{ return null; }}\n"));
        s
    }

    #[test]
    fn empty_graph() {
        let g = build_graph(&[]).unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn one_component_one_library() {
        let ents = ingest_source("a.jsx", &file("A", &["react"])).unwrap().entities;
        let g = build_graph(&ents).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.count_kind(EntityKind::Snippet), 1);
        let rels: Vec<Relation> = g.edges().map(|e| e.relation).collect();
        assert_eq!(rels.iter().filter(|r| **r == Relation::Uses).count(), 1);
        assert_eq!(rels.iter().filter(|r| **r == Relation::Exemplifies).count(), 1);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn shared_library_has_three_inbound_uses() {
        let mut ents = Vec::new();
        for (path, name) in [("a.jsx", "A"), ("b.jsx", "B"), ("c.jsx", "C")] {
            ents.extend(ingest_source(path, &file(name, &["recharts"])).unwrap().entities);
        }
        let g = build_graph(&ents).unwrap();
        assert_eq!(g.count_kind(EntityKind::Library), 1);
        let lib = library_id("recharts");
        assert_eq!(g.incoming(&lib, Relation::Uses).len(), 3);
        assert_eq!(g.node(&lib).unwrap().source_path, "a.jsx");
    }

    #[test]
    fn reingestion_is_idempotent() {
        let a = ingest_source("a.jsx", &file("A", &["react"])).unwrap().entities;
        let mut twice = a.clone();
        twice.extend(a.clone());
        assert_eq!(build_graph(&twice).unwrap(), build_graph(&a).unwrap());
    }

    #[test]
    fn conflicting_duplicate_names_both_paths() {
        let mut a = ingest_source("a.jsx", &file("A", &[])).unwrap().entities;
        let mut b = a[0].clone();
        b.source_path = "z.jsx".into();
        a.push(b);
        let err = build_graph(&a).unwrap_err().to_string();
        assert!(err.contains("a.jsx") && err.contains("z.jsx"), "{err}");
    }

    #[test]
    fn neighbors_sorted_and_filtered() {
        let ents = ingest_source("a.jsx", &file("A", &["zlib-ui", "alpha"])).unwrap().entities;
        let g = build_graph(&ents).unwrap();
        let comp = ents.iter().find(|e| e.kind == EntityKind::Component).unwrap();
        let uses = graph_neighbors(&g, &comp.entity_id, Relation::Uses).unwrap();
        let mut expected = vec![library_id("zlib-ui"), library_id("alpha")];
        expected.sort();
        assert_eq!(uses, expected);
        assert!(graph_neighbors(&g, &comp.entity_id, Relation::Provides)
            .unwrap()
            .is_empty());
        let lib = library_id("alpha");
        assert!(graph_neighbors(&g, &lib, Relation::Uses).unwrap().is_empty());
        assert!(matches!(
            graph_neighbors(&g, "nope", Relation::Uses),
            Err(Error::Lookup(_))
        ));
    }

    #[test]
    fn ndjson_round_trip() {
        let src = "/** @feature zoom */\nimport { MapContainer } from 'react-leaflet';\nexport function M() { return null; }\n";
        let ents = ingest_source("m.jsx", src).unwrap().entities;
        let g = build_graph(&ents).unwrap();
        let text = g.to_ndjson();
        assert!(text.lines().next().unwrap().contains("\"dashgen-graph\""));
        assert_eq!(KnowledgeGraph::from_ndjson(&text).unwrap(), g);
        assert_eq!(text, KnowledgeGraph::from_ndjson(&text).unwrap().to_ndjson());
    }

    #[test]
    fn truncated_file_is_rejected() {
        let ents = ingest_source("a.jsx", &file("A", &["react"])).unwrap().entities;
        let text = build_graph(&ents).unwrap().to_ndjson();
        let truncated: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            KnowledgeGraph::from_ndjson(&truncated),
            Err(Error::Format(_))
        ));
    }
}
