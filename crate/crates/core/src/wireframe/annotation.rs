use std::collections::BTreeMap;

use super::ElementKind;

/// Keys with a defined meaning. Other keys are kept but produce a warning.
pub const RECOGNIZED_KEYS: &[&str] = &[
    "role",
    "label",
    "data-endpoint",
    "lib-hint",
    "interaction",
    "page",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedAnnotations {
    pub pairs: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

/// Parse `<desc>` text: `key: value` pairs separated by `;`.
///
/// Keys are lower-cased, keys and values trimmed. Later duplicates win.
pub fn parse_annotations(text: &str) -> ParsedAnnotations {
    let mut parsed = ParsedAnnotations::default();
    for segment in text.split(';') {
        let segment = segment.trim();
        if segment.is_empty() {
            continue;
        }
        let Some((key, value)) = segment.split_once(':') else {
            parsed
                .warnings
                .push(format!("annotation segment without ':' ignored: {segment:?}"));
            continue;
        };
        let key = key.trim().to_ascii_lowercase();
        let value = collapse_whitespace(value.trim());
        if key.is_empty() {
            parsed
                .warnings
                .push(format!("annotation with empty key ignored: {segment:?}"));
            continue;
        }
        if !RECOGNIZED_KEYS.contains(&key.as_str()) {
            parsed
                .warnings
                .push(format!("unrecognized annotation key {key:?}"));
        }
        if parsed.pairs.insert(key.clone(), value).is_some() {
            parsed
                .warnings
                .push(format!("duplicate annotation key {key:?}, last value kept"));
        }
    }
    parsed
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Fixed role table. Returns `None` for roles outside the table.
pub fn kind_for_role(role: &str) -> Option<ElementKind> {
    let role = role.trim().to_ascii_lowercase();
    let kind = match role.as_str() {
        "dropdown" | "select" | "selector" | "combobox" | "picker" => ElementKind::Dropdown,
        "chart" | "graph" | "plot" | "timeseries" | "time-series" | "bar-chart"
        | "line-chart" | "pie-chart" | "histogram" => ElementKind::Chart,
        "map" | "geovisualization" | "geomap" | "web-map" | "webmap" | "choropleth" => {
            ElementKind::Map
        }
        "text" | "label" | "heading" | "title" | "paragraph" | "caption" => ElementKind::Text,
        "image" | "banner" | "thumbnail" | "logo" | "icon" => ElementKind::Image,
        "button" | "link-button" => ElementKind::Button,
        "form" | "input" | "search" | "textbox" => ElementKind::Form,
        "container" | "panel" | "section" | "card" | "layout" | "header" | "footer"
        | "sidebar" | "navbar" | "nav" | "page" => ElementKind::Container,
        "decor" | "decoration" => ElementKind::Decor,
        _ => return None,
    };
    Some(kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_pairs_and_normalizes_keys() {
        let p = parse_annotations(" Role: dropdown ;LABEL:  Site   Selector;");
        assert_eq!(p.pairs["role"], "dropdown");
        assert_eq!(p.pairs["label"], "Site Selector");
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn value_may_contain_colons() {
        let p = parse_annotations("data-endpoint: http://localhost:8000/api/sites");
        assert_eq!(p.pairs["data-endpoint"], "http://localhost:8000/api/sites");
    }

    #[test]
    fn unknown_key_is_kept_with_warning() {
        let p = parse_annotations("role: chart; owner: ops");
        assert_eq!(p.pairs["owner"], "ops");
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn malformed_segment_warns() {
        let p = parse_annotations("role: map; nonsense");
        assert_eq!(p.pairs.len(), 1);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn role_table() {
        assert_eq!(kind_for_role("Geovisualization"), Some(ElementKind::Map));
        assert_eq!(kind_for_role("select"), Some(ElementKind::Dropdown));
        assert_eq!(kind_for_role("banner"), Some(ElementKind::Image));
        assert_eq!(kind_for_role("hologram"), None);
    }
}
