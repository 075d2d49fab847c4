//! Prompt assembly from the wireframe outline, requirements, API schema,
//! workspace layout, and retrieved exemplars.

pub mod openapi;
mod stack;
mod templates;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use stack::{category_of, recommend_stack, StackCategory, StackRecommendation, LIBRARY_CATEGORIES};
pub use templates::{fill, TemplateSet, TEMPLATE_NAMES};

use crate::error::{Error, Result};
use crate::kbase::{EntityKind, KnowledgeGraph, Relation};
use crate::retrieval::ScoredEntity;
use crate::task::PageTask;
use crate::wireframe::LayoutOutline;

pub const DEFAULT_TOKEN_BUDGET: usize = 8000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShotStrategy {
    Zero,
    One,
    Few(usize),
}

impl ShotStrategy {
    pub fn shots(self) -> usize {
        match self {
            ShotStrategy::Zero => 0,
            ShotStrategy::One => 1,
            ShotStrategy::Few(k) => k,
        }
    }

    /// Strategy family without the shot count, as used in reports.
    pub fn family(self) -> &'static str {
        match self {
            ShotStrategy::Zero => "zero",
            ShotStrategy::One => "one",
            ShotStrategy::Few(_) => "few",
        }
    }
}

impl fmt::Display for ShotStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShotStrategy::Few(k) => write!(f, "few:{k}"),
            other => f.write_str(other.family()),
        }
    }
}

impl FromStr for ShotStrategy {
    type Err = Error;

    /// `zero`, `one`, `few` (three shots) or `few:K`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zero" => Ok(ShotStrategy::Zero),
            "one" => Ok(ShotStrategy::One),
            "few" => Ok(ShotStrategy::Few(3)),
            other => other
                .strip_prefix("few:")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k >= 1)
                .map(ShotStrategy::Few)
                .ok_or_else(|| Error::Parameter(format!("unknown shot strategy {s:?}"))),
        }
    }
}

impl Serialize for ShotStrategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ShotStrategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    System,
    FileStructure,
    LayoutOutline,
    ApiSchema,
    Requirements,
    Exemplars,
    OutputContract,
}

impl SectionKind {
    pub const ALL: [SectionKind; 7] = [
        SectionKind::System,
        SectionKind::FileStructure,
        SectionKind::LayoutOutline,
        SectionKind::ApiSchema,
        SectionKind::Requirements,
        SectionKind::Exemplars,
        SectionKind::OutputContract,
    ];

    fn template(self) -> &'static str {
        match self {
            SectionKind::System => "system",
            SectionKind::FileStructure => "file_structure",
            SectionKind::LayoutOutline => "layout_outline",
            SectionKind::ApiSchema => "api_schema",
            SectionKind::Requirements => "requirements",
            SectionKind::Exemplars => "exemplars",
            SectionKind::OutputContract => "output_contract",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    #[default]
    Mvvm,
    Mvc,
}

impl Architecture {
    pub fn convention(self) -> &'static str {
        match self {
            Architecture::Mvvm => {
                "Follow MVVM: keep data fetching and state in a view-model hook declared in the same file, and keep the JSX view free of fetch calls."
            }
            Architecture::Mvc => {
                "Follow MVC: keep data access in model functions, event handling in controller functions, and rendering in the view component, all in the same file."
            }
        }
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mvvm" => Ok(Architecture::Mvvm),
            "mvc" => Ok(Architecture::Mvc),
            _ => Err(Error::Config(format!("unknown architecture {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snippet {
    pub entity_id: String,
    pub name: String,
    pub source_path: String,
    pub code: String,
    pub similarity: f64,
}

/// Replaces each retrieved component by the snippet exemplifying it, keeping
/// the component's similarity. Snippets pass through; other kinds are dropped.
/// The result stays in descending similarity order.
pub fn exemplar_candidates(retrieved: &[ScoredEntity], graph: &KnowledgeGraph) -> Vec<ScoredEntity> {
    let mut out: Vec<ScoredEntity> = Vec::new();
    let mut seen = BTreeSet::new();
    for scored in retrieved {
        let snippet = match scored.entity.kind {
            EntityKind::Snippet => Some(scored.entity.clone()),
            EntityKind::Component => graph
                .incoming(&scored.entity.entity_id, Relation::Exemplifies)
                .first()
                .and_then(|id| graph.node(id))
                .cloned(),
            _ => None,
        };
        if let Some(entity) = snippet {
            if seen.insert(entity.entity_id.clone()) {
                out.push(ScoredEntity {
                    entity,
                    similarity: scored.similarity,
                });
            }
        }
    }
    out
}

/// Exemplars for a strategy: the top snippets from distinct source files.
/// Returns the snippets and any warnings.
pub fn select_snippets(retrieved: &[ScoredEntity], strategy: ShotStrategy) -> (Vec<Snippet>, Vec<String>) {
    let want = strategy.shots();
    let mut out = Vec::new();
    let mut files = BTreeSet::new();
    for scored in retrieved {
        if out.len() == want {
            break;
        }
        let e = &scored.entity;
        if e.kind != EntityKind::Snippet || !files.insert(e.source_path.as_str()) {
            continue;
        }
        out.push(Snippet {
            entity_id: e.entity_id.clone(),
            name: e.name.clone(),
            source_path: e.source_path.clone(),
            code: e.sample_code.clone(),
            similarity: scored.similarity,
        });
    }
    let mut warnings = Vec::new();
    if out.len() < want {
        warnings.push(format!(
            "{strategy} asked for {want} exemplars but only {} distinct-file snippets were retrieved",
            out.len()
        ));
    }
    (out, warnings)
}

pub struct PromptInput<'a> {
    pub page: &'a PageTask,
    pub outline: &'a LayoutOutline,
    /// Already filtered to the page's endpoints, or empty.
    pub api_schema: &'a str,
    pub file_structure: &'a str,
    pub requirements: &'a str,
    pub endpoints: &'a [String],
    pub snippets: &'a [Snippet],
    pub stack: &'a StackRecommendation,
    pub strategy: ShotStrategy,
    pub architecture: Architecture,
    pub templates: &'a TemplateSet,
    pub token_budget: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub page_id: String,
    pub sections: Vec<(SectionKind, String)>,
    pub shot_strategy: ShotStrategy,
    pub token_estimate: usize,
    /// Exemplar blocks actually included.
    pub exemplar_count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PromptBundle {
    pub fn render(&self) -> String {
        render_sections(&self.sections)
    }

    pub fn section(&self, kind: SectionKind) -> Option<&str> {
        self.sections
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, b)| b.as_str())
    }
}

fn render_sections(sections: &[(SectionKind, String)]) -> String {
    let mut out = sections
        .iter()
        .map(|(_, body)| body.as_str())
        .collect::<Vec<_>>()
        .join("\n\n");
    out.push('\n');
    out
}

/// Characters / 4, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

/// `GeoPage`, `geo-page`, `geo_page` → `GeoPage`.
pub fn component_name(page_id: &str) -> String {
    let mut name: String = page_id
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|p| !p.is_empty())
        .map(|p| {
            let mut cs = p.chars();
            let first = cs.next().expect("non-empty").to_ascii_uppercase();
            std::iter::once(first).chain(cs).collect::<String>()
        })
        .collect();
    if name.is_empty() || name.starts_with(|c: char| c.is_ascii_digit()) {
        name.insert_str(0, "Page");
    }
    name
}

fn or_none(items: &[String]) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.iter().map(|s| format!("`{s}`")).collect::<Vec<_>>().join(", ")
    }
}

/// Builds the prompt bundle for one page.
///
/// Sections always appear in [`SectionKind::ALL`] order; zero-shot bundles
/// omit the exemplars section. When the estimate exceeds the token budget,
/// exemplars are dropped lowest-similarity first, each with a warning.
pub fn assemble_prompt(input: &PromptInput<'_>) -> Result<PromptBundle> {
    if input.requirements.trim().is_empty() {
        return Err(Error::Input("requirements are empty".into()));
    }
    if input.outline.trim().is_empty() {
        return Err(Error::Input("layout outline is empty".into()));
    }
    let page = input.page;
    let stack = input.stack;
    let vars: BTreeMap<&str, String> = BTreeMap::from([
        ("page_id", page.page_id.clone()),
        ("page_type", page.page_type.to_string()),
        ("difficulty", page.difficulty.to_string()),
        ("route", page.route.clone()),
        ("target_path", page.target_path.clone()),
        ("css_framework", stack.css_framework.clone()),
        ("ui_library", stack.ui_library.clone()),
        ("visualization_package", stack.visualization_package.clone()),
        ("mapping_engine", stack.mapping_engine.clone()),
        ("stack_rationale", format!("Stack rationale: {}.", stack.rationale)),
        ("file_structure", if input.file_structure.trim().is_empty() {
            "(empty)".to_string()
        } else {
            input.file_structure.trim_end().to_string()
        }),
        ("outline", input.outline.trim_end().to_string()),
        ("api_schema", if input.api_schema.trim().is_empty() {
            "(no API schema supplied)".to_string()
        } else {
            input.api_schema.trim_end().to_string()
        }),
        ("requirements", input.requirements.trim().to_string()),
        ("component_name", component_name(&page.page_id)),
        ("marker", format!("`{}`", page.marker())),
        ("allowed_imports", or_none(&stack.allowed_imports())),
        ("endpoints", or_none(input.endpoints)),
        ("architecture", input.architecture.convention().to_string()),
    ]);

    let mut fixed = BTreeMap::new();
    for kind in SectionKind::ALL {
        if kind != SectionKind::Exemplars {
            fixed.insert(kind, input.templates.render(kind.template(), &vars)?);
        }
    }

    let mut warnings = Vec::new();
    let mut snippets: Vec<&Snippet> = input
        .snippets
        .iter()
        .take(input.strategy.shots())
        .collect();
    if snippets.len() < input.strategy.shots() {
        warnings.push(format!(
            "{} asked for {} exemplars, {} supplied",
            input.strategy,
            input.strategy.shots(),
            snippets.len()
        ));
    }

    loop {
        let mut sections: Vec<(SectionKind, String)> = Vec::with_capacity(7);
        for kind in SectionKind::ALL {
            if kind == SectionKind::Exemplars {
                if input.strategy == ShotStrategy::Zero {
                    continue;
                }
                sections.push((kind, render_exemplars(input.templates, &snippets)?));
            } else {
                sections.push((kind, fixed[&kind].clone()));
            }
        }
        let token_estimate = estimate_tokens(&render_sections(&sections));
        if token_estimate > input.token_budget && !snippets.is_empty() {
            let (drop_at, _) = snippets
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.similarity.total_cmp(&b.1.similarity).then(b.0.cmp(&a.0)))
                .expect("non-empty");
            let dropped = snippets.remove(drop_at);
            warnings.push(format!(
                "dropped exemplar {} ({}) to stay within {} estimated tokens",
                dropped.name, dropped.source_path, input.token_budget
            ));
            continue;
        }
        if token_estimate > input.token_budget {
            warnings.push(format!(
                "prompt estimate {token_estimate} tokens exceeds the budget of {}",
                input.token_budget
            ));
        }
        return Ok(PromptBundle {
            page_id: page.page_id.clone(),
            sections,
            shot_strategy: input.strategy,
            token_estimate,
            exemplar_count: snippets.len(),
            warnings,
        });
    }
}

fn render_exemplars(templates: &TemplateSet, snippets: &[&Snippet]) -> Result<String> {
    let blocks = if snippets.is_empty() {
        "(no exemplars available)".to_string()
    } else {
        snippets
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let vars = BTreeMap::from([
                    ("index", (i + 1).to_string()),
                    ("name", s.name.clone()),
                    ("source_path", s.source_path.clone()),
                    ("similarity", format!("{:.3}", s.similarity)),
                    ("code", s.code.trim_end().to_string()),
                ]);
                templates.render("exemplar", &vars)
            })
            .collect::<Result<Vec<_>>>()?
            .join("\n\n")
    };
    templates.render("exemplars", &BTreeMap::from([("blocks", blocks)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_round_trip() {
        for s in ["zero", "one", "few:4"] {
            assert_eq!(s.parse::<ShotStrategy>().unwrap().to_string(), s);
        }
        assert_eq!("few".parse::<ShotStrategy>().unwrap(), ShotStrategy::Few(3));
        assert!("few:0".parse::<ShotStrategy>().is_err());
    }

    #[test]
    fn component_names() {
        assert_eq!(component_name("GeoPage"), "GeoPage");
        assert_eq!(component_name("site-map"), "SiteMap");
        assert_eq!(component_name("3d"), "Page3d");
    }

    #[test]
    fn token_estimate_rounds_up() {
        assert_eq!(estimate_tokens("abcde"), 2);
        assert_eq!(estimate_tokens(""), 0);
    }
}
