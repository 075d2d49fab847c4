use std::collections::BTreeMap;

use serde::Deserialize;

use super::{DomainLabel, KnowledgeEntity};
use crate::error::{Error, Result};

/// Keyword table mapping lower-case word tokens to domain labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    rows: Vec<(DomainLabel, Vec<String>)>,
}

impl Taxonomy {
    pub fn new(rows: Vec<(DomainLabel, Vec<String>)>) -> Self {
        let rows = rows
            .into_iter()
            .map(|(l, kws)| (l, kws.into_iter().map(|k| k.to_ascii_lowercase()).collect()))
            .collect();
        Taxonomy { rows }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|(_, k)| k.is_empty())
    }

    pub fn rows(&self) -> &[(DomainLabel, Vec<String>)] {
        &self.rows
    }

    /// `label = ["kw", ...]` pairs.
    pub fn from_toml(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw(BTreeMap<String, Vec<String>>);
        let raw: Raw =
            toml::from_str(text).map_err(|e| Error::Config(format!("taxonomy: {e}")))?;
        let rows = raw
            .0
            .into_iter()
            .map(|(label, kws)| Ok((label.parse::<DomainLabel>()?, kws)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Taxonomy::new(rows))
    }
}

impl Default for Taxonomy {
    fn default() -> Self {
        let row = |l: DomainLabel, kws: &[&str]| (l, kws.iter().map(|s| s.to_string()).collect());
        Taxonomy::new(vec![
            row(
                DomainLabel::Geovisualization,
                &[
                    "map", "maps", "leaflet", "mapbox", "maplibre", "openlayers", "geojson",
                    "choropleth", "geo", "gis", "tile", "tilelayer", "marker", "cesium",
                    "deck", "turf", "spatial", "basemap",
                ],
            ),
            row(
                DomainLabel::Charting,
                &[
                    "chart", "charts", "recharts", "plotly", "d3", "echarts", "victory",
                    "nivo", "bar", "line", "pie", "histogram", "plot", "axis", "series",
                    "timeseries", "sparkline",
                ],
            ),
            row(
                DomainLabel::Layout,
                &[
                    "layout", "grid", "panel", "container", "header", "footer", "sidebar",
                    "card", "section", "banner", "hero", "page",
                ],
            ),
            row(
                DomainLabel::Forms,
                &[
                    "form", "input", "select", "dropdown", "selector", "checkbox", "radio",
                    "button", "formik", "field", "picker", "slider",
                ],
            ),
            row(
                DomainLabel::Navigation,
                &[
                    "nav", "navbar", "navigation", "router", "route", "menu", "link",
                    "breadcrumb", "tabs", "tab",
                ],
            ),
        ])
    }
}

/// Lower-case word tokens, splitting on non-alphanumerics and camelCase.
pub fn word_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split(|c: char| !c.is_alphanumeric()) {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (chars[i - 1], chars[i]);
            let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            let boundary = (prev.is_lowercase() || prev.is_ascii_digit()) && cur.is_uppercase()
                || prev.is_uppercase() && cur.is_uppercase() && next_lower;
            if boundary {
                out.push(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        if start < chars.len() {
            out.push(chars[start..].iter().collect::<String>().to_lowercase());
        }
    }
    out
}

/// Label with the most keyword hits over name, description, and imports.
/// Ties go to the label declared first in [`DomainLabel`]; no hits → other.
pub fn classify_entity(entity: &KnowledgeEntity, taxonomy: &Taxonomy) -> Result<DomainLabel> {
    if taxonomy.is_empty() {
        return Err(Error::Config("taxonomy has no keywords".into()));
    }
    let mut haystack = word_tokens(&entity.name);
    haystack.extend(word_tokens(&entity.description));
    for import in &entity.imports {
        haystack.extend(word_tokens(import));
    }

    let mut hits: BTreeMap<DomainLabel, usize> = BTreeMap::new();
    for (label, keywords) in taxonomy.rows() {
        let n = haystack.iter().filter(|t| keywords.contains(t)).count();
        *hits.entry(*label).or_default() += n;
    }
    let best = hits
        .into_iter()
        .filter(|(_, n)| *n > 0)
        // BTreeMap iterates in priority order; keep the first maximum.
        .fold(None::<(DomainLabel, usize)>, |acc, (l, n)| match acc {
            Some((_, bn)) if bn >= n => acc,
            _ => Some((l, n)),
        });
    Ok(best.map(|(l, _)| l).unwrap_or(DomainLabel::Other))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kbase::EntityKind;

    fn entity(name: &str, description: &str, imports: &[&str]) -> KnowledgeEntity {
        KnowledgeEntity {
            entity_id: "x".into(),
            kind: EntityKind::Component,
            name: name.into(),
            imports: imports.iter().map(|s| s.to_string()).collect(),
            domain_label: DomainLabel::Other,
            description: description.into(),
            sample_code: String::new(),
            source_path: "a.jsx".into(),
            span: (0, 0),
            features: vec![],
            exemplifies: None,
        }
    }

    #[test]
    fn tokens_split_camel_case_and_punctuation() {
        assert_eq!(word_tokens("MapPanel"), ["map", "panel"]);
        assert_eq!(word_tokens("react-leaflet"), ["react", "leaflet"]);
        assert_eq!(word_tokens("GeoJSONLayer"), ["geo", "json", "layer"]);
        assert_eq!(word_tokens("d3 v7"), ["d3", "v7"]);
    }

    #[test]
    fn mapping_import_is_geovisualization() {
        let e = entity("Widget", "", &["react-leaflet"]);
        assert_eq!(
            classify_entity(&e, &Taxonomy::default()).unwrap(),
            DomainLabel::Geovisualization
        );
    }

    #[test]
    fn no_hits_is_other() {
        let e = entity("Widget", "does things", &["lodash"]);
        assert_eq!(
            classify_entity(&e, &Taxonomy::default()).unwrap(),
            DomainLabel::Other
        );
    }

    #[test]
    fn charting_beats_layout_on_tie() {
        // "chart" and "plot" hit charting; "grid" and "panel" hit layout.
        let e = entity("ChartGrid", "plot panel", &[]);
        let tax = Taxonomy::default();
        assert_eq!(classify_entity(&e, &tax).unwrap(), DomainLabel::Charting);
    }

    #[test]
    fn empty_taxonomy_is_config_error() {
        let e = entity("A", "", &[]);
        let err = classify_entity(&e, &Taxonomy::new(vec![])).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn taxonomy_from_toml() {
        let t = Taxonomy::from_toml("charting = [\"Vega\"]\nforms = [\"wizard\"]\n").unwrap();
        let e = entity("VegaView", "", &[]);
        assert_eq!(classify_entity(&e, &t).unwrap(), DomainLabel::Charting);
        assert!(Taxonomy::from_toml("weather = [\"rain\"]").is_err());
    }
}
