use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::kbase::{graph_neighbors, EntityKind, KnowledgeEntity, KnowledgeGraph, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StackCategory {
    CssFramework,
    UiLibrary,
    Visualization,
    Mapping,
}

/// Fixed package → category table used for voting.
pub const LIBRARY_CATEGORIES: &[(&str, StackCategory)] = &[
    ("bootstrap", StackCategory::CssFramework),
    ("bulma", StackCategory::CssFramework),
    ("tailwindcss", StackCategory::CssFramework),
    ("@picocss/pico", StackCategory::CssFramework),
    ("foundation-sites", StackCategory::CssFramework),
    ("@mui/material", StackCategory::UiLibrary),
    ("@chakra-ui/react", StackCategory::UiLibrary),
    ("@mantine/core", StackCategory::UiLibrary),
    ("antd", StackCategory::UiLibrary),
    ("react-bootstrap", StackCategory::UiLibrary),
    ("semantic-ui-react", StackCategory::UiLibrary),
    ("@nivo/core", StackCategory::Visualization),
    ("@visx/visx", StackCategory::Visualization),
    ("chart.js", StackCategory::Visualization),
    ("d3", StackCategory::Visualization),
    ("echarts", StackCategory::Visualization),
    ("echarts-for-react", StackCategory::Visualization),
    ("plotly.js", StackCategory::Visualization),
    ("react-chartjs-2", StackCategory::Visualization),
    ("react-plotly.js", StackCategory::Visualization),
    ("recharts", StackCategory::Visualization),
    ("victory", StackCategory::Visualization),
    ("@deck.gl/react", StackCategory::Mapping),
    ("@react-google-maps/api", StackCategory::Mapping),
    ("cesium", StackCategory::Mapping),
    ("leaflet", StackCategory::Mapping),
    ("mapbox-gl", StackCategory::Mapping),
    ("maplibre-gl", StackCategory::Mapping),
    ("ol", StackCategory::Mapping),
    ("react-leaflet", StackCategory::Mapping),
    ("react-map-gl", StackCategory::Mapping),
];

/// Packages that a recommended package needs alongside it.
const COMPANIONS: &[(&str, &str)] = &[
    ("react-leaflet", "leaflet"),
    ("react-chartjs-2", "chart.js"),
    ("react-plotly.js", "plotly.js"),
    ("echarts-for-react", "echarts"),
    ("react-map-gl", "mapbox-gl"),
    ("react-bootstrap", "bootstrap"),
];

pub fn category_of(package: &str) -> Option<StackCategory> {
    LIBRARY_CATEGORIES
        .iter()
        .find(|(name, _)| *name == package)
        .map(|(_, c)| *c)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackRecommendation {
    pub css_framework: String,
    pub ui_library: String,
    pub visualization_package: String,
    pub mapping_engine: String,
    #[serde(default)]
    pub rationale: String,
}

impl Default for StackRecommendation {
    fn default() -> Self {
        StackRecommendation {
            css_framework: "bootstrap".into(),
            ui_library: "react-bootstrap".into(),
            visualization_package: "recharts".into(),
            mapping_engine: "react-leaflet".into(),
            rationale: "default stack".into(),
        }
    }
}

impl StackRecommendation {
    fn field_mut(&mut self, category: StackCategory) -> &mut String {
        match category {
            StackCategory::CssFramework => &mut self.css_framework,
            StackCategory::UiLibrary => &mut self.ui_library,
            StackCategory::Visualization => &mut self.visualization_package,
            StackCategory::Mapping => &mut self.mapping_engine,
        }
    }

    /// Bare specifiers a page generated for this stack may import.
    pub fn allowed_imports(&self) -> Vec<String> {
        let mut out: BTreeSet<String> = ["react", "react-dom"].iter().map(|s| s.to_string()).collect();
        for lib in [
            &self.css_framework,
            &self.ui_library,
            &self.visualization_package,
            &self.mapping_engine,
        ] {
            out.insert(lib.clone());
            for (pkg, companion) in COMPANIONS {
                if pkg == lib {
                    out.insert(companion.to_string());
                }
            }
        }
        out.into_iter().collect()
    }
}

/// Majority vote per category over libraries the retrieved components use.
///
/// Each retrieved component votes once for every library it USES, except a
/// companion package (such as `leaflet`) that the component uses together
/// with its wrapper (`react-leaflet`) in the same category. The most
/// voted library in a category wins, ties going to the lexicographically
/// smaller name; a category with no votes keeps the default. Empty retrieval
/// returns `defaults` unchanged.
pub fn recommend_stack(
    retrieved: &[KnowledgeEntity],
    graph: &KnowledgeGraph,
    defaults: &StackRecommendation,
) -> StackRecommendation {
    if retrieved.is_empty() {
        return defaults.clone();
    }
    let mut votes: BTreeMap<StackCategory, BTreeMap<String, usize>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for entity in retrieved {
        if entity.kind != EntityKind::Component || !seen.insert(&entity.entity_id) {
            continue;
        }
        let Ok(libs) = graph_neighbors(graph, &entity.entity_id, Relation::Uses) else {
            continue;
        };
        let names: BTreeSet<&str> = libs
            .iter()
            .filter_map(|id| graph.node(id))
            .map(|lib| lib.name.as_str())
            .collect();
        for name in &names {
            let Some(cat) = category_of(name) else { continue };
            // A companion used alongside its same-category wrapper does not vote.
            let shadowed = COMPANIONS.iter().any(|(wrapper, companion)| {
                companion == name && names.contains(wrapper) && category_of(wrapper) == Some(cat)
            });
            if !shadowed {
                *votes.entry(cat).or_default().entry(name.to_string()).or_default() += 1;
            }
        }
    }

    let mut out = defaults.clone();
    let mut reasons = Vec::new();
    for (cat, tally) in votes {
        // BTreeMap order makes the first maximum the smallest name.
        let (winner, n) = tally
            .iter()
            .fold(None::<(&String, usize)>, |best, (name, &n)| match best {
                Some((_, bn)) if bn >= n => best,
                _ => Some((name, n)),
            })
            .expect("category has votes");
        reasons.push(format!("{winner} ({n} of {} votes)", tally.values().sum::<usize>()));
        *out.field_mut(cat) = winner.clone();
    }
    out.rationale = if reasons.is_empty() {
        "retrieved components use no categorised library; default stack".into()
    } else {
        format!("chosen by retrieved components: {}", reasons.join(", "))
    };
    out
}
