use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use walkdir::WalkDir;

use super::classify::{classify_entity, word_tokens, Taxonomy};
use super::{feature_id, library_id, span_entity_id, DomainLabel, EntityKind, KnowledgeEntity};
use crate::dialect::ParsedSource;
use crate::error::{Error, Result};

/// Share of error tokens above which a file is rejected.
pub const UNPARSEABLE_RATIO: f64 = 0.10;

const SOURCE_EXTENSIONS: &[&str] = &["jsx", "js", "mjs"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingested {
    pub entities: Vec<KnowledgeEntity>,
    pub warnings: Vec<String>,
}

/// Package name of a bare import specifier; `None` for relative paths.
///
/// `leaflet/dist/leaflet.css` → `leaflet`, `@mui/material/Button` →
/// `@mui/material`.
pub fn package_name(specifier: &str) -> Option<String> {
    if specifier.is_empty() || specifier.starts_with('.') || specifier.starts_with('/') {
        return None;
    }
    let mut parts = specifier.split('/');
    let first = parts.next()?;
    if first.starts_with('@') {
        let second = parts.next()?;
        Some(format!("{first}/{second}"))
    } else {
        Some(first.to_string())
    }
}

fn name_phrase(name: &str) -> String {
    word_tokens(name).join(" ")
}

/// Extract entities from one component source file.
///
/// Per exported component: one component entity, one snippet entity holding
/// the declaring statement, one library entity per imported package, and one
/// feature entity per `@feature <name>` line in the leading comment.
/// Entities come back with `domain_label = other`; see [`classify_entity`].
pub fn ingest_source(path: &str, contents: &str) -> Result<Ingested> {
    let parsed = ParsedSource::parse(contents);
    if parsed.error_ratio() > UNPARSEABLE_RATIO {
        let first = parsed.syntax_errors().into_iter().next();
        let (line, column, detail) = first
            .map(|e| (e.position.line, e.position.column, e.message))
            .unwrap_or((1, 1, "syntax errors".into()));
        return Err(Error::Ingestion {
            path: path.to_string(),
            line,
            column,
            message: format!(
                "unparseable source ({:.0}% error tokens); first error: {detail}",
                parsed.error_ratio() * 100.0
            ),
        });
    }

    let mut out = Ingested::default();
    if parsed.has_errors() {
        out.warnings
            .push(format!("{path}: syntax errors below rejection threshold"));
    }

    let stem = Path::new(path)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("Component");
    let components = parsed.components(stem);
    if components.is_empty() {
        out.warnings
            .push(format!("{path}: no exported components"));
        return Ok(out);
    }

    let imports = parsed.imports();
    let mut packages: Vec<String> = Vec::new();
    let mut library_entities = Vec::new();
    for import in &imports {
        let Some(pkg) = package_name(&import.specifier) else {
            continue;
        };
        if packages.contains(&pkg) {
            continue;
        }
        packages.push(pkg.clone());
        library_entities.push(KnowledgeEntity {
            entity_id: library_id(&pkg),
            kind: EntityKind::Library,
            name: pkg.clone(),
            imports: vec![],
            domain_label: DomainLabel::Other,
            description: format!("{pkg} library"),
            sample_code: contents[import.span.clone()].to_string(),
            source_path: path.to_string(),
            span: (import.span.start, import.span.end),
            features: vec![],
            exemplifies: None,
        });
    }
    packages.sort();

    let mut feature_names = BTreeSet::new();
    for comp in &components {
        let (mut description, features) = split_features(comp.leading_comment.as_deref());
        if description.is_empty() {
            description = format!("{} component", name_phrase(&comp.name));
        }
        let stmt = &contents[comp.span.clone()];
        let signature_len = stmt.find('\n').unwrap_or(stmt.len());
        let component_id =
            span_entity_id(EntityKind::Component, path, (comp.span.start, comp.span.end));

        out.entities.push(KnowledgeEntity {
            entity_id: component_id.clone(),
            kind: EntityKind::Component,
            name: comp.name.clone(),
            imports: packages.clone(),
            domain_label: DomainLabel::Other,
            description: description.clone(),
            sample_code: stmt[..signature_len].to_string(),
            source_path: path.to_string(),
            span: (comp.span.start, comp.span.start + signature_len),
            features: features.clone(),
            exemplifies: None,
        });
        out.entities.push(KnowledgeEntity {
            entity_id: span_entity_id(EntityKind::Snippet, path, (comp.span.start, comp.span.end)),
            kind: EntityKind::Snippet,
            name: comp.name.clone(),
            imports: packages.clone(),
            domain_label: DomainLabel::Other,
            description,
            sample_code: stmt.to_string(),
            source_path: path.to_string(),
            span: (comp.span.start, comp.span.end),
            features: vec![],
            exemplifies: Some(component_id),
        });

        for feature in features {
            if !feature_names.insert(feature.to_ascii_lowercase()) {
                continue;
            }
            let marker = format!("@feature {feature}");
            let start = contents.find(&marker).unwrap_or(0);
            let end = if contents[start..].starts_with(&marker) {
                start + marker.len()
            } else {
                start
            };
            out.entities.push(KnowledgeEntity {
                entity_id: feature_id(&feature),
                kind: EntityKind::Feature,
                name: feature.clone(),
                imports: vec![],
                domain_label: DomainLabel::Other,
                description: format!("{} feature", feature),
                sample_code: contents[start..end].to_string(),
                source_path: path.to_string(),
                span: (start, end),
                features: vec![],
                exemplifies: None,
            });
        }
    }
    out.entities.extend(library_entities);
    Ok(out)
}

/// Splits `@feature` lines out of a comment, returning (description, features).
fn split_features(comment: Option<&str>) -> (String, Vec<String>) {
    let Some(comment) = comment else {
        return (String::new(), vec![]);
    };
    let mut description = Vec::new();
    let mut features = Vec::new();
    for line in comment.lines() {
        match line.trim().strip_prefix("@feature") {
            Some(rest) if rest.is_empty() || rest.starts_with(char::is_whitespace) => {
                let f = rest.trim();
                if !f.is_empty() && !features.iter().any(|x: &String| x == f) {
                    features.push(f.to_string());
                }
            }
            _ => description.push(line.trim()),
        }
    }
    (description.join(" "), features)
}

#[derive(Debug, Default)]
pub struct CorpusIngest {
    pub entities: Vec<KnowledgeEntity>,
    pub warnings: Vec<String>,
    pub files: usize,
}

/// Ingest and classify every component source under `root`.
///
/// Files are processed in parallel; results are merged in path order. The
/// first ingestion error (in path order) aborts the whole corpus.
pub fn ingest_corpus(root: &Path, taxonomy: &Taxonomy) -> Result<CorpusIngest> {
    let mut files: Vec<_> = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .filter(|e| {
            e.path()
                .extension()
                .and_then(|x| x.to_str())
                .is_some_and(|x| SOURCE_EXTENSIONS.contains(&x))
        })
        .map(|e| e.into_path())
        .collect();
    files.sort();

    let results: Vec<Result<Ingested>> = files
        .par_iter()
        .map(|file| {
            let rel = file
                .strip_prefix(root)
                .unwrap_or(file)
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            let contents = std::fs::read_to_string(file)?;
            let mut ingested = ingest_source(&rel, &contents)?;
            for e in &mut ingested.entities {
                e.domain_label = classify_entity(e, taxonomy)?;
            }
            Ok(ingested)
        })
        .collect();

    let mut out = CorpusIngest {
        files: files.len(),
        ..Default::default()
    };
    for r in results {
        let ingested = r?;
        out.entities.extend(ingested.entities);
        out.warnings.extend(ingested.warnings);
    }
    Ok(out)
}
