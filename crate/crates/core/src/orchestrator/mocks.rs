//! Replaces network fetches with static fixtures derived from the API schema.

use std::collections::BTreeMap;

use serde_json::{Map, Value};

use crate::dialect::ParsedSource;
use crate::error::{Error, Result};
use crate::promptgen::openapi::{match_path, parse_openapi, resolve_ref};

pub const MOCK_DIR: &str = "mocks";
const MAX_DEPTH: usize = 24;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MockOutput {
    /// Source files whose fetch targets were rewritten (only changed files).
    pub rewritten: BTreeMap<String, String>,
    /// Fixture path → JSON text.
    pub fixtures: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

/// `/api/sites/{id}` → `api-sites-id`.
pub fn fixture_slug(schema_path: &str) -> String {
    let slug = schema_path
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("-");
    if slug.is_empty() {
        "root".into()
    } else {
        slug
    }
}

pub fn fixture_path(schema_path: &str) -> String {
    format!("{MOCK_DIR}/{}.json", fixture_slug(schema_path))
}

/// Rewrites every fetch whose URL matches a schema path to `/mocks/<slug>.json`
/// and emits that fixture. Unmatched URLs stay as they are, with a warning.
pub fn mock_apis(files: &BTreeMap<String, String>, api_schema: &str) -> Result<MockOutput> {
    let doc = parse_openapi(api_schema)?;
    let mut out = MockOutput::default();
    for (path, contents) in files {
        let parsed = ParsedSource::parse(contents);
        let calls = parsed.fetch_calls();
        let mut text = contents.clone();
        let mut changed = false;
        for call in calls.iter().rev() {
            if call.url.starts_with(&format!("/{MOCK_DIR}/")) {
                continue;
            }
            let matched = doc.as_ref().and_then(|d| match_path(d, &call.url));
            let (Some(d), Some(schema_path)) = (doc.as_ref(), matched) else {
                out.warnings.push(format!(
                    "{path}:{}:{}: {} is not in the API schema; left untouched",
                    call.position.line, call.position.column, call.url
                ));
                continue;
            };
            let fixture = fixture_path(&schema_path);
            if !out.fixtures.contains_key(&fixture) {
                let payload = example_payload(d, &schema_path)?;
                let mut body = serde_json::to_string_pretty(&payload)?;
                body.push('\n');
                out.fixtures.insert(fixture.clone(), body);
            }
            text.replace_range(call.url_span.clone(), &format!("/{fixture}"));
            changed = true;
        }
        if changed {
            out.rewritten.insert(path.clone(), text);
        }
    }
    out.warnings.sort();
    Ok(out)
}

fn is_json_media(media_type: &str) -> bool {
    media_type.contains("json")
}

/// Example payload for the GET (or only) operation of `schema_path`.
pub fn example_payload(doc: &Value, schema_path: &str) -> Result<Value> {
    let item = resolve_ref(doc, &doc["paths"][schema_path]);
    let op = ["get", "post", "put", "patch", "delete"]
        .iter()
        .find_map(|m| item.get(*m))
        .ok_or_else(|| Error::Config(format!("path {schema_path} has no operations")))?;
    let op = resolve_ref(doc, op);
    let responses = op
        .get("responses")
        .and_then(Value::as_object)
        .ok_or_else(|| Error::Config(format!("path {schema_path} has no responses")))?;
    let response = ["200", "201", "2XX", "default"]
        .iter()
        .find_map(|c| responses.get(*c))
        .or_else(|| {
            responses
                .iter()
                .find(|(code, _)| code.starts_with('2'))
                .map(|(_, r)| r)
        });
    let Some(response) = response.map(|r| resolve_ref(doc, r)) else {
        return Ok(Value::Null);
    };
    let media = response
        .get("content")
        .and_then(Value::as_object)
        .and_then(|c| c.iter().find(|(k, _)| is_json_media(k)).map(|(_, v)| v));
    let Some(media) = media else {
        return Ok(Value::Null);
    };
    if let Some(ex) = media.get("example") {
        return Ok(ex.clone());
    }
    if let Some(ex) = media
        .get("examples")
        .and_then(Value::as_object)
        .and_then(|m| m.values().next())
    {
        let ex = resolve_ref(doc, ex);
        if let Some(v) = ex.get("value") {
            return Ok(v.clone());
        }
    }
    match media.get("schema") {
        Some(schema) => synthesize(doc, schema, 0),
        None => Ok(Value::Null),
    }
}

/// Schema-driven example: `example` wins, then the first `enum` value, then
/// type defaults (string "sample", number 0, boolean false, arrays with
/// `max(1, minItems)` elements, objects with every declared property).
pub fn synthesize(doc: &Value, schema: &Value, depth: usize) -> Result<Value> {
    if depth > MAX_DEPTH {
        return Ok(Value::Null);
    }
    let schema = resolve_ref(doc, schema);
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        return Err(Error::Config(format!("unresolvable reference {r}")));
    }
    if !schema.is_object() {
        return Err(Error::Config(format!("schema is not an object: {schema}")));
    }
    if let Some(ex) = schema.get("example") {
        return Ok(ex.clone());
    }
    if let Some(first) = schema.get("enum").and_then(Value::as_array).and_then(|e| e.first()) {
        return Ok(first.clone());
    }
    if let Some(c) = schema.get("const") {
        return Ok(c.clone());
    }
    if let Some(parts) = schema.get("allOf").and_then(Value::as_array) {
        let mut merged = Map::new();
        for p in parts {
            match synthesize(doc, p, depth + 1)? {
                Value::Object(m) => merged.extend(m),
                other if parts.len() == 1 => return Ok(other),
                _ => {}
            }
        }
        return Ok(Value::Object(merged));
    }
    for key in ["oneOf", "anyOf"] {
        if let Some(first) = schema.get(key).and_then(Value::as_array).and_then(|a| a.first()) {
            return synthesize(doc, first, depth + 1);
        }
    }
    let ty = match schema.get("type") {
        Some(Value::String(s)) => Some(s.as_str()),
        Some(Value::Array(ts)) => ts.iter().filter_map(Value::as_str).find(|t| *t != "null"),
        _ => None,
    };
    let ty = ty.or_else(|| {
        if schema.get("properties").is_some() {
            Some("object")
        } else if schema.get("items").is_some() {
            Some("array")
        } else {
            None
        }
    });
    Ok(match ty {
        Some("string") => Value::String("sample".into()),
        Some("number") | Some("integer") => Value::from(0),
        Some("boolean") => Value::Bool(false),
        Some("null") | None => Value::Null,
        Some("array") => {
            let n = schema
                .get("minItems")
                .and_then(Value::as_u64)
                .unwrap_or(1)
                .max(1) as usize;
            let item = match schema.get("items") {
                Some(items) => synthesize(doc, items, depth + 1)?,
                None => Value::String("sample".into()),
            };
            Value::Array(vec![item; n])
        }
        Some("object") => {
            let mut m = Map::new();
            if let Some(props) = schema.get("properties").and_then(Value::as_object) {
                for (k, v) in props {
                    m.insert(k.clone(), synthesize(doc, v, depth + 1)?);
                }
            }
            Value::Object(m)
        }
        Some(other) => return Err(Error::Config(format!("unknown schema type {other:?}"))),
    })
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;

    const SCHEMA: &str = r#"{"openapi": "3.0.0", "info": {"title": "t", "version": "1"},
      "paths": {
        "/api/sites": {"get": {"responses": {"200": {"content": {"application/json": {
            "example": [{"id": "s1", "name": "North"}]}}}}}},
        "/api/readings/{id}": {"get": {"responses": {"200": {"content": {"application/json": {
            "schema": {"type": "object", "properties": {
                "value": {"type": "number"}, "tags": {"type": "array", "items": {"type": "string"}},
                "unit": {"type": "string", "enum": ["mm", "cm"]}}}}}}}}}
      }}"#;

    fn files(src: &str) -> BTreeMap<String, String> {
        BTreeMap::from([("pages/A.jsx".to_string(), src.to_string())])
    }

    #[test]
    fn example_wins_and_call_rewritten() {
        let out = mock_apis(&files("fetch('/api/sites').then(r => r.json());\n"), SCHEMA).unwrap();
        assert_eq!(
            out.rewritten["pages/A.jsx"],
            "fetch('/mocks/api-sites.json').then(r => r.json());\n"
        );
        let body: Value = serde_json::from_str(&out.fixtures["mocks/api-sites.json"]).unwrap();
        assert_eq!(body, json!([{"id": "s1", "name": "North"}]));
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn type_driven_defaults() {
        let out = mock_apis(&files("fetch(\"/api/readings/7\");\n"), SCHEMA).unwrap();
        let body: Value = serde_json::from_str(&out.fixtures["mocks/api-readings-id.json"]).unwrap();
        assert_eq!(body, json!({"value": 0, "tags": ["sample"], "unit": "mm"}));
    }

    #[test]
    fn unlisted_url_untouched_with_warning() {
        let out = mock_apis(&files("fetch('/api/other');\n"), SCHEMA).unwrap();
        assert!(out.rewritten.is_empty());
        assert!(out.fixtures.is_empty());
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("/api/other"));
    }

    #[test]
    fn bad_schema_is_config_error() {
        assert!(matches!(
            mock_apis(&files("fetch('/a');"), "{not json: [ at all"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn rewriting_is_idempotent() {
        let first = mock_apis(&files("fetch('/api/sites');\n"), SCHEMA).unwrap();
        let again = mock_apis(&first.rewritten, SCHEMA).unwrap();
        assert!(again.rewritten.is_empty());
        assert!(again.warnings.is_empty());
    }
}
