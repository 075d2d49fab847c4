//! Deterministic offline clients for generation and repair.

use std::fmt::Write as _;
use std::sync::OnceLock;

use regex::Regex;
use sha2::{Digest, Sha256};

use super::llm::{strip_fences, LlmClient};
use crate::dialect::ParsedSource;
use crate::error::{Error, Result};

fn outline_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(\s*)([a-z]+) #(\S+) @\([^)]*\) \{(.*)\}$").expect("valid regex")
    })
}

fn backticked(line: &str) -> Vec<String> {
    line.split('`')
        .skip(1)
        .step_by(2)
        .map(str::to_string)
        .collect()
}

/// Short hex digest of the inputs; used to vary output deterministically.
pub fn variant_tag(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
        h.update([0u8]);
    }
    hex::encode(&h.finalize()[..4])
}

#[derive(Debug, Clone, PartialEq)]
struct OutlineNode {
    kind: String,
    id: String,
    annotations: Vec<(String, String)>,
    children: Vec<OutlineNode>,
}

impl OutlineNode {
    fn annotation(&self, key: &str) -> Option<&str> {
        self.annotations
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn parse_annotation_list(text: &str) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for seg in text.split(", ") {
        match seg.split_once('=') {
            Some((k, v)) if !k.contains(' ') => out.push((k.to_string(), v.to_string())),
            _ => {
                if let Some(last) = out.last_mut() {
                    last.1.push_str(", ");
                    last.1.push_str(seg);
                }
            }
        }
    }
    out
}

fn parse_outline(lines: &[&str]) -> Vec<OutlineNode> {
    // (depth, node) stack; depth 0 is the synthetic root.
    let mut stack: Vec<(usize, OutlineNode)> = vec![(
        0,
        OutlineNode {
            kind: "container".into(),
            id: "__root".into(),
            annotations: vec![],
            children: vec![],
        },
    )];
    for line in lines {
        let Some(c) = outline_line().captures(line) else { continue };
        let depth = c[1].len() / 2;
        if depth == 0 {
            continue;
        }
        let node = OutlineNode {
            kind: c[2].to_string(),
            id: c[3].to_string(),
            annotations: parse_annotation_list(&c[4]),
            children: vec![],
        };
        while stack.len() > 1 && stack.last().expect("non-empty").0 >= depth {
            let (_, done) = stack.pop().expect("non-empty");
            stack.last_mut().expect("root stays").1.children.push(done);
        }
        stack.push((depth, node));
    }
    while stack.len() > 1 {
        let (_, done) = stack.pop().expect("non-empty");
        stack.last_mut().expect("root stays").1.children.push(done);
    }
    stack.pop().expect("root").1.children
}

/// What the generator reads back out of a prompt.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PromptFacts {
    pub page_id: String,
    pub component: String,
    pub page_type: String,
    pub endpoints: Vec<String>,
    pub allowed_imports: Vec<String>,
    outline: Vec<OutlineNode>,
}

pub fn read_prompt(prompt: &str) -> PromptFacts {
    let mut facts = PromptFacts::default();
    let mut outline_lines = Vec::new();
    let mut in_outline = false;
    for line in prompt.lines() {
        if line.starts_with("## ") {
            in_outline = line == "## Layout outline";
            continue;
        }
        if in_outline {
            outline_lines.push(line);
        }
        if let Some(rest) = line.strip_prefix("Page ") {
            if let Some((id, tail)) = rest.split_once(" is a ") {
                facts.page_id = id.to_string();
                facts.page_type = tail.split_whitespace().next().unwrap_or("").to_string();
            }
        } else if let Some(rest) = line.strip_prefix("- Declare `export default function ") {
            facts.component = rest.split('(').next().unwrap_or("").to_string();
        } else if line.starts_with("- Import only from ") {
            facts.allowed_imports = backticked(line);
        } else if line.starts_with("- Fetch data only from ") {
            facts.endpoints = backticked(line);
        }
    }
    facts.outline = parse_outline(&outline_lines);
    facts
}

/// Data key for an endpoint: its last path segment, camel-cased.
pub fn data_key(endpoint: &str) -> String {
    let seg = endpoint
        .split(['?', '#'])
        .next()
        .unwrap_or("")
        .trim_end_matches('/')
        .rsplit('/')
        .next()
        .unwrap_or("");
    let mut key = String::new();
    let mut upper = false;
    for c in seg.chars() {
        if c.is_ascii_alphanumeric() {
            if upper && !key.is_empty() {
                key.push(c.to_ascii_uppercase());
            } else {
                key.push(c);
            }
            upper = false;
        } else {
            upper = true;
        }
    }
    if key.is_empty() || key.starts_with(|c: char| c.is_ascii_digit()) {
        key.insert_str(0, "data");
    }
    key
}

fn js_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

/// Generates a syntactically valid page component from the prompt: one JSX
/// element per outline node, a view-model hook fetching each endpoint, and
/// the page marker on the outermost element.
#[derive(Debug, Clone)]
pub struct TemplateMock {
    pub seed: u64,
}

impl TemplateMock {
    pub fn new(seed: u64) -> Self {
        TemplateMock { seed }
    }

    pub fn render(&self, prompt: &str, sample: u64) -> String {
        let facts = read_prompt(prompt);
        let component = if facts.component.is_empty() {
            "Page".to_string()
        } else {
            facts.component.clone()
        };
        let uses_leaflet = facts.allowed_imports.iter().any(|i| i == "react-leaflet")
            && has_kind(&facts.outline, "map");
        let tag = variant_tag(&[
            prompt.as_bytes(),
            &self.seed.to_le_bytes(),
            &sample.to_le_bytes(),
        ]);

        let mut out = String::new();
        let _ = writeln!(out, "```jsx");
        let _ = writeln!(out, "// variant {tag}");
        let _ = writeln!(out, "import React, {{ useEffect, useState }} from 'react';");
        if uses_leaflet {
            let _ = writeln!(out, "import {{ GeoJSON, MapContainer, TileLayer }} from 'react-leaflet';");
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "function use{component}ViewModel() {{");
        let _ = writeln!(out, "  const [data, setData] = useState({{}});");
        let _ = writeln!(out, "  useEffect(() => {{");
        for ep in &facts.endpoints {
            let key = data_key(ep);
            let _ = writeln!(
                out,
                "    fetch({})\n      .then((res) => res.json())\n      .then((value) => setData((prev) => ({{ ...prev, {key}: value }})));",
                js_single(ep)
            );
        }
        let _ = writeln!(out, "  }}, []);");
        let _ = writeln!(out, "  return {{ data }};");
        let _ = writeln!(out, "}}");
        let _ = writeln!(out);
        let _ = writeln!(out, "export default function {component}() {{");
        let _ = writeln!(out, "  const {{ data }} = use{component}ViewModel();");
        let _ = writeln!(out, "  return (");
        let _ = writeln!(
            out,
            "    <main data-page-id={} className={}>",
            js_string(&facts.page_id),
            js_string(&format!("page page-{}", facts.page_type))
        );
        for node in &facts.outline {
            render_node(&mut out, node, 3, uses_leaflet);
        }
        let _ = writeln!(out, "    </main>");
        let _ = writeln!(out, "  );");
        let _ = writeln!(out, "}}");
        let _ = writeln!(out, "```");
        out
    }
}

fn js_single(s: &str) -> String {
    format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
}

fn has_kind(nodes: &[OutlineNode], kind: &str) -> bool {
    nodes
        .iter()
        .any(|n| n.kind == kind || has_kind(&n.children, kind))
}

fn render_node(out: &mut String, node: &OutlineNode, depth: usize, leaflet: bool) {
    let pad = "  ".repeat(depth);
    let id = js_string(&node.id);
    let label = node
        .annotation("label")
        .map(str::to_string)
        .unwrap_or_else(|| node.id.replace(['-', '_'], " "));
    let label_js = js_string(&label);
    let data_ref = node
        .annotation("data-endpoint")
        .and_then(|e| e.split(',').next())
        .map(|e| format!("data.{}", data_key(e.trim())));
    match node.kind.as_str() {
        "text" => {
            let tag = match node.annotation("role") {
                Some("heading" | "title") => "h2",
                _ => "p",
            };
            let _ = writeln!(out, "{pad}<{tag} data-wf-id={id}>{{{label_js}}}</{tag}>");
        }
        "image" => {
            let _ = writeln!(
                out,
                "{pad}<img data-wf-id={id} src=\"/assets/{}.png\" alt={label_js} />",
                node.id
            );
        }
        "button" => {
            let _ = writeln!(out, "{pad}<button data-wf-id={id} type=\"button\">{{{label_js}}}</button>");
        }
        "dropdown" => {
            let _ = writeln!(out, "{pad}<select data-wf-id={id} aria-label={label_js}>");
            let _ = writeln!(out, "{pad}  <option>{{{label_js}}}</option>");
            if let Some(d) = &data_ref {
                let _ = writeln!(
                    out,
                    "{pad}  {{Array.isArray({d}) && {d}.map((item, i) => <option key={{i}}>{{String(item.name ?? item.id ?? item)}}</option>)}}"
                );
            }
            let _ = writeln!(out, "{pad}</select>");
        }
        "chart" => {
            let _ = writeln!(out, "{pad}<figure data-wf-id={id} className=\"wf-chart\">");
            let _ = writeln!(out, "{pad}  <figcaption>{{{label_js}}}</figcaption>");
            if let Some(d) = &data_ref {
                let _ = writeln!(out, "{pad}  <pre>{{JSON.stringify({d} ?? null)}}</pre>");
            }
            let _ = writeln!(out, "{pad}</figure>");
        }
        "map" if leaflet => {
            let _ = writeln!(
                out,
                "{pad}<MapContainer data-wf-id={id} center={{[0, 0]}} zoom={{2}} style={{{{ height: 400 }}}}>"
            );
            let _ = writeln!(
                out,
                "{pad}  <TileLayer url=\"https://{{s}}.tile.openstreetmap.org/{{z}}/{{x}}/{{y}}.png\" />"
            );
            if let Some(d) = &data_ref {
                let _ = writeln!(out, "{pad}  {{{d} && <GeoJSON data={{{d}}} />}}");
            }
            let _ = writeln!(out, "{pad}</MapContainer>");
        }
        "map" => {
            let _ = writeln!(out, "{pad}<div data-wf-id={id} className=\"wf-map\" aria-label={label_js} />");
        }
        "form" => {
            let _ = writeln!(out, "{pad}<form data-wf-id={id}>");
            let _ = writeln!(out, "{pad}  <input aria-label={label_js} />");
            let _ = writeln!(out, "{pad}</form>");
        }
        _ => {
            if node.children.is_empty() {
                let _ = writeln!(out, "{pad}<div data-wf-id={id} className=\"wf-container\" />");
            } else {
                let _ = writeln!(out, "{pad}<div data-wf-id={id} className=\"wf-container\">");
                for c in &node.children {
                    render_node(out, c, depth + 1, leaflet);
                }
                let _ = writeln!(out, "{pad}</div>");
            }
            return;
        }
    }
    for c in &node.children {
        render_node(out, c, depth, leaflet);
    }
}

impl LlmClient for TemplateMock {
    fn model_id(&self) -> &str {
        "mock-template"
    }

    fn complete(&self, prompt: &str, sample: u64) -> Result<String> {
        Ok(self.render(prompt, sample))
    }
}

/// The file body embedded in a repair prompt.
pub fn file_from_fix_prompt(prompt: &str) -> Option<&str> {
    let start = prompt.find("## File\n```jsx\n")? + "## File\n```jsx\n".len();
    let end = prompt.rfind("\n```\n\nReturn the complete")?;
    (end >= start).then(|| &prompt[start..end])
}

/// Repairs bracket faults using the parser's own error nodes: inserts each
/// missing token at its position and deletes stray closing brackets.
pub fn repair_brackets(source: &str) -> String {
    let mut text = source.to_string();
    for _ in 0..16 {
        let parsed = ParsedSource::parse(&text);
        let Some(err) = parsed.syntax_errors().into_iter().next() else {
            break;
        };
        let snippet = err
            .message
            .split('`')
            .nth(1)
            .unwrap_or("")
            .to_string();
        if err.message.starts_with("missing") && !snippet.is_empty() {
            text.insert_str(err.span.start, &snippet);
        } else if err.message.starts_with("unexpected")
            && !snippet.is_empty()
            && snippet.chars().all(|c| matches!(c, '}' | ')' | ']'))
        {
            text.replace_range(err.span.clone(), "");
        } else {
            break;
        }
    }
    text
}

/// Repair agent that fixes bracket faults deterministically.
#[derive(Debug, Clone, Default)]
pub struct BracketFixer;

impl LlmClient for BracketFixer {
    fn model_id(&self) -> &str {
        "mock-bracket-fixer"
    }

    fn complete(&self, prompt: &str, _sample: u64) -> Result<String> {
        let file = file_from_fix_prompt(prompt)
            .ok_or_else(|| Error::Input("repair prompt carries no file block".into()))?;
        Ok(format!("```jsx\n{}\n```\n", repair_brackets(file)))
    }
}

/// Repair agent that returns the file unchanged.
#[derive(Debug, Clone, Default)]
pub struct EchoAgent;

impl LlmClient for EchoAgent {
    fn model_id(&self) -> &str {
        "mock-echo"
    }

    fn complete(&self, prompt: &str, _sample: u64) -> Result<String> {
        let file = file_from_fix_prompt(prompt)
            .ok_or_else(|| Error::Input("repair prompt carries no file block".into()))?;
        Ok(strip_fences(file).to_string())
    }
}
