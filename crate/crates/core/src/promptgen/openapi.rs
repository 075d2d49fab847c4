//! Minimal OpenAPI 3 handling: parsing, path matching, and filtering.

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Parses a JSON or YAML OpenAPI document. Blank text yields `None`.
pub fn parse_openapi(text: &str) -> Result<Option<Value>> {
    if text.trim().is_empty() {
        return Ok(None);
    }
    let doc: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(json_err) => serde_yaml::from_str(text).map_err(|yaml_err| {
            Error::Config(format!(
                "API schema is neither JSON ({json_err}) nor YAML ({yaml_err})"
            ))
        })?,
    };
    if !doc.get("openapi").is_some_and(Value::is_string) {
        return Err(Error::Config("API schema lacks an `openapi` version field".into()));
    }
    if !doc.get("paths").map_or(true, Value::is_object) {
        return Err(Error::Config("API schema `paths` is not an object".into()));
    }
    Ok(Some(doc))
}

/// Path part of a URL: scheme, host, query and fragment removed.
pub fn url_path(url: &str) -> &str {
    let rest = match url.find("://") {
        Some(i) => {
            let after = &url[i + 3..];
            after.find('/').map_or("/", |j| &after[j..])
        }
        None => url,
    };
    let end = rest.find(['?', '#']).unwrap_or(rest.len());
    &rest[..end]
}

/// Does a concrete path match an OpenAPI path template like `/sites/{id}`?
pub fn path_matches(template: &str, path: &str) -> bool {
    let t: Vec<&str> = template.trim_end_matches('/').split('/').collect();
    let p: Vec<&str> = path.trim_end_matches('/').split('/').collect();
    t.len() == p.len()
        && t.iter().zip(&p).all(|(ts, ps)| {
            (ts.starts_with('{') && ts.ends_with('}') && !ps.is_empty()) || ts == ps
        })
}

/// The schema path a URL refers to. Exact matches win over templates; among
/// templates the first in document order wins.
pub fn match_path(doc: &Value, url: &str) -> Option<String> {
    let path = url_path(url);
    let paths = doc.get("paths")?.as_object()?;
    if paths.contains_key(path) {
        return Some(path.to_string());
    }
    paths.keys().find(|t| path_matches(t, path)).cloned()
}

/// The document restricted to paths referenced by `endpoints`, pretty-printed
/// as JSON. Everything outside `paths` is kept verbatim.
pub fn filter_schema(text: &str, endpoints: &[String]) -> Result<String> {
    let Some(mut doc) = parse_openapi(text)? else {
        return Ok(String::new());
    };
    let keep: Vec<String> = endpoints.iter().filter_map(|e| match_path(&doc, e)).collect();
    if let Some(paths) = doc.get_mut("paths").and_then(Value::as_object_mut) {
        let filtered: Map<String, Value> = paths
            .iter()
            .filter(|(k, _)| keep.contains(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        *paths = filtered;
    }
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Follows local `#/...` references.
pub fn resolve_ref<'a>(doc: &'a Value, value: &'a Value) -> &'a Value {
    let mut current = value;
    for _ in 0..32 {
        match current.get("$ref").and_then(Value::as_str) {
            Some(r) if r.starts_with("#/") => match doc.pointer(&r[1..]) {
                Some(target) => current = target,
                None => return current,
            },
            _ => return current,
        }
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{"openapi":"3.0.0","info":{"title":"t","version":"1"},
      "paths":{"/api/sites":{"get":{}},"/api/sites/{id}":{"get":{}},"/api/other":{"get":{}}}}"#;

    #[test]
    fn url_paths() {
        assert_eq!(url_path("https://h.io/api/sites?x=1"), "/api/sites");
        assert_eq!(url_path("/api/sites#top"), "/api/sites");
        assert_eq!(url_path("https://h.io"), "/");
    }

    #[test]
    fn matching_prefers_exact() {
        let doc = parse_openapi(DOC).unwrap().unwrap();
        assert_eq!(match_path(&doc, "/api/sites").as_deref(), Some("/api/sites"));
        assert_eq!(match_path(&doc, "/api/sites/7").as_deref(), Some("/api/sites/{id}"));
        assert_eq!(match_path(&doc, "/api/none"), None);
    }

    #[test]
    fn filter_keeps_referenced_paths() {
        let out = filter_schema(DOC, &["/api/sites".into()]).unwrap();
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["paths"].as_object().unwrap().len(), 1);
        assert_eq!(v["info"]["title"], "t");
    }

    #[test]
    fn yaml_is_accepted() {
        let y = "openapi: 3.0.0\npaths:\n  /a:\n    get: {}\n";
        assert!(parse_openapi(y).unwrap().is_some());
    }

    #[test]
    fn garbage_is_config_error() {
        assert!(matches!(parse_openapi("{ nope"), Err(Error::Config(_))));
        assert!(matches!(parse_openapi("{\"paths\":{}}"), Err(Error::Config(_))));
    }
}
