//! Grammar-based view of JSX component sources.
//!
//! Wraps the tree-sitter JavaScript grammar (which covers JSX) and exposes the
//! few structural queries the pipeline needs: syntax errors with positions,
//! import declarations, exported components, and network-fetch call sites.

use std::cell::RefCell;
use std::ops::Range;

use tree_sitter::{Node, Parser, Tree};

thread_local! {
    static PARSER: RefCell<Parser> = RefCell::new({
        let mut p = Parser::new();
        p.set_language(&tree_sitter_javascript::LANGUAGE.into())
            .expect("bundled grammar is ABI compatible");
        p
    });
}

/// A source position; line and column are 1-based, column counts chars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub span: Range<usize>,
    pub position: Position,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportDecl {
    pub specifier: String,
    /// Local binding names (default, named, or namespace).
    pub bindings: Vec<String>,
    pub span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentDecl {
    pub name: String,
    /// Span of the top-level statement declaring the component.
    pub span: Range<usize>,
    pub leading_comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchCall {
    /// `fetch`, `axios`, or `axios.<method>`.
    pub callee: String,
    pub url: String,
    /// Byte range of the URL text inside its quotes.
    pub url_span: Range<usize>,
    pub position: Position,
}

pub struct ParsedSource<'a> {
    text: &'a str,
    tree: Tree,
}

impl<'a> ParsedSource<'a> {
    pub fn parse(text: &'a str) -> Self {
        let tree = PARSER.with(|p| {
            p.borrow_mut()
                .parse(text, None)
                .expect("parser has a language and no timeout")
        });
        ParsedSource { text, tree }
    }

    pub fn text(&self) -> &'a str {
        self.text
    }

    pub fn has_errors(&self) -> bool {
        self.tree.root_node().has_error()
    }

    pub fn position_of(&self, byte: usize) -> Position {
        position_of(self.text, byte)
    }

    /// ERROR and MISSING nodes in source order. Nested errors inside an ERROR
    /// node are reported once, by the outermost node.
    pub fn syntax_errors(&self) -> Vec<SyntaxError> {
        let mut out = Vec::new();
        let mut stack = vec![self.tree.root_node()];
        while let Some(node) = stack.pop() {
            if node.is_missing() {
                out.push(SyntaxError {
                    span: node.start_byte()..node.end_byte(),
                    position: self.position_of(node.start_byte()),
                    message: format!("missing `{}`", node.kind()),
                });
                continue;
            }
            if node.is_error() {
                let snippet: String = self.text[node.start_byte()..node.end_byte()]
                    .chars()
                    .take(24)
                    .collect::<String>()
                    .split_whitespace()
                    .collect::<Vec<_>>()
                    .join(" ");
                out.push(SyntaxError {
                    span: node.start_byte()..node.end_byte(),
                    position: self.position_of(node.start_byte()),
                    message: format!("unexpected `{snippet}`"),
                });
                continue;
            }
            if node.has_error() {
                let mut cursor = node.walk();
                let children: Vec<Node> = node.children(&mut cursor).collect();
                stack.extend(children.into_iter().rev());
            }
        }
        out.sort_by_key(|e| (e.span.start, e.span.end));
        out
    }

    /// (error tokens, total tokens), counting leaves of the syntax tree.
    /// Leaves under an ERROR node and MISSING leaves count as errors.
    pub fn token_counts(&self) -> (usize, usize) {
        fn visit(node: Node, in_error: bool, errors: &mut usize, total: &mut usize) {
            let in_error = in_error || node.is_error();
            if node.child_count() == 0 {
                *total += 1;
                if in_error || node.is_missing() {
                    *errors += 1;
                }
                return;
            }
            let mut cursor = node.walk();
            for child in node.children(&mut cursor) {
                visit(child, in_error, errors, total);
            }
        }
        let (mut errors, mut total) = (0, 0);
        visit(self.tree.root_node(), false, &mut errors, &mut total);
        (errors, total)
    }

    pub fn error_ratio(&self) -> f64 {
        let (errors, total) = self.token_counts();
        if total == 0 {
            0.0
        } else {
            errors as f64 / total as f64
        }
    }

    fn node_text(&self, node: Node) -> &'a str {
        &self.text[node.start_byte()..node.end_byte()]
    }

    fn top_level(&self) -> Vec<Node<'_>> {
        let root = self.tree.root_node();
        let mut cursor = root.walk();
        root.children(&mut cursor).collect()
    }

    pub fn imports(&self) -> Vec<ImportDecl> {
        let mut out = Vec::new();
        for stmt in self.top_level() {
            if stmt.kind() != "import_statement" {
                continue;
            }
            let Some(source) = stmt.child_by_field_name("source") else {
                continue;
            };
            let specifier = string_contents(self.node_text(source)).to_string();
            let mut bindings = Vec::new();
            collect_bindings(stmt, self.text, &mut bindings);
            out.push(ImportDecl {
                specifier,
                bindings,
                span: stmt.start_byte()..stmt.end_byte(),
            });
        }
        out
    }

    /// Top-level exported components: capitalized functions, arrow-function
    /// constants, and classes that are exported inline, by `export default
    /// Name`, or through an export clause.
    pub fn components(&self, fallback_name: &str) -> Vec<ComponentDecl> {
        let stmts = self.top_level();
        let mut found: Vec<(String, Node)> = Vec::new();
        fn add<'t>(found: &mut Vec<(String, Node<'t>)>, name: String, stmt: Node<'t>) {
            if !found.iter().any(|(n, _)| *n == name) {
                found.push((name, stmt));
            }
        }
        // Declarations by name, for `export default X` / `export { X }`.
        let declared = |name: &str| -> Option<Node> {
            stmts.iter().copied().find(|s| {
                declared_names(*s, self.text)
                    .iter()
                    .any(|(n, _)| n == name)
            })
        };

        for &stmt in &stmts {
            if stmt.kind() != "export_statement" {
                continue;
            }
            if let Some(decl) = stmt.child_by_field_name("declaration") {
                for (name, is_class) in declared_names(decl, self.text) {
                    if is_component_name(&name, is_class) {
                        add(&mut found, name, stmt);
                    }
                }
                continue;
            }
            if let Some(value) = stmt.child_by_field_name("value") {
                match value.kind() {
                    "identifier" => {
                        let name = self.node_text(value).to_string();
                        if let Some(d) = declared(&name) {
                            add(&mut found, name, d);
                        }
                    }
                    "arrow_function" | "function_expression" | "function" | "class"
                    | "call_expression" => {
                        add(&mut found, fallback_name.to_string(), stmt);
                    }
                    _ => {}
                }
                continue;
            }
            let mut cursor = stmt.walk();
            for child in stmt.named_children(&mut cursor) {
                if child.kind() != "export_clause" {
                    continue;
                }
                let mut c2 = child.walk();
                for spec in child.named_children(&mut c2) {
                    let Some(name) = spec.child_by_field_name("name") else {
                        continue;
                    };
                    let name = self.node_text(name).to_string();
                    if let Some(d) = declared(&name) {
                        let is_class = d.kind() == "class_declaration";
                        if is_component_name(&name, is_class) {
                            add(&mut found, name, d);
                        }
                    }
                }
            }
        }
        found.sort_by_key(|(_, n)| n.start_byte());

        found
            .into_iter()
            .map(|(name, stmt)| ComponentDecl {
                leading_comment: self.leading_comment(stmt),
                name,
                span: stmt.start_byte()..stmt.end_byte(),
            })
            .collect()
    }

    /// Contiguous comment block directly above `stmt`; falls back to the
    /// file's header comment when it precedes every other statement.
    fn leading_comment(&self, stmt: Node) -> Option<String> {
        let mut comments = Vec::new();
        let mut cur = stmt.prev_sibling();
        let mut boundary = stmt.start_byte();
        while let Some(node) = cur {
            if node.kind() != "comment" {
                break;
            }
            let between = &self.text[node.end_byte()..boundary];
            if between.matches('\n').count() > 1 {
                break;
            }
            comments.push(self.node_text(node));
            boundary = node.start_byte();
            cur = node.prev_sibling();
        }
        if comments.is_empty() {
            let first = self.top_level().into_iter().next()?;
            if first.kind() == "comment" {
                comments.push(self.node_text(first));
            }
        } else {
            comments.reverse();
        }
        let text = comments
            .iter()
            .map(|c| strip_comment(c))
            .collect::<Vec<_>>()
            .join("\n");
        let text = text.trim();
        (!text.is_empty()).then(|| text.to_string())
    }

    pub fn fetch_calls(&self) -> Vec<FetchCall> {
        let mut out = Vec::new();
        let mut stack = vec![self.tree.root_node()];
        while let Some(node) = stack.pop() {
            if node.kind() == "call_expression" {
                if let Some(call) = self.fetch_call(node) {
                    out.push(call);
                }
            }
            let mut cursor = node.walk();
            let children: Vec<Node> = node.children(&mut cursor).collect();
            stack.extend(children.into_iter().rev());
        }
        out.sort_by_key(|c| c.url_span.start);
        out
    }

    fn fetch_call(&self, call: Node) -> Option<FetchCall> {
        let function = call.child_by_field_name("function")?;
        let callee = match function.kind() {
            "identifier" => {
                let name = self.node_text(function);
                if name != "fetch" && name != "axios" {
                    return None;
                }
                name.to_string()
            }
            "member_expression" => {
                let object = function.child_by_field_name("object")?;
                let property = function.child_by_field_name("property")?;
                let method = self.node_text(property);
                if self.node_text(object) != "axios"
                    || !matches!(
                        method,
                        "get" | "post" | "put" | "patch" | "delete" | "request" | "head"
                    )
                {
                    return None;
                }
                format!("axios.{method}")
            }
            _ => return None,
        };
        let args = call.child_by_field_name("arguments")?;
        let mut cursor = args.walk();
        let first = args.named_children(&mut cursor).next()?;
        let literal = match first.kind() {
            "string" => true,
            "template_string" => {
                let mut c = first.walk();
                let has_subst = first
                    .named_children(&mut c)
                    .any(|n| n.kind() == "template_substitution");
                !has_subst
            }
            _ => false,
        };
        if !literal || first.end_byte() - first.start_byte() < 2 {
            return None;
        }
        let url_span = first.start_byte() + 1..first.end_byte() - 1;
        Some(FetchCall {
            callee,
            url: self.text[url_span.clone()].to_string(),
            position: self.position_of(first.start_byte()),
            url_span,
        })
    }
}

pub fn position_of(text: &str, byte: usize) -> Position {
    let byte = byte.min(text.len());
    let before = &text[..byte];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map(|i| i + 1).unwrap_or(0);
    Position {
        line,
        column: text[line_start..byte].chars().count() + 1,
    }
}

fn string_contents(literal: &str) -> &str {
    let t = literal.trim();
    if t.len() >= 2 {
        &t[1..t.len() - 1]
    } else {
        t
    }
}

fn collect_bindings(node: Node, text: &str, out: &mut Vec<String>) {
    let mut cursor = node.walk();
    for child in node.named_children(&mut cursor) {
        match child.kind() {
            "import_clause" | "named_imports" | "namespace_import" => {
                collect_bindings(child, text, out)
            }
            "identifier" => out.push(text[child.start_byte()..child.end_byte()].to_string()),
            "import_specifier" => {
                let local = child
                    .child_by_field_name("alias")
                    .or_else(|| child.child_by_field_name("name"));
                if let Some(n) = local {
                    out.push(text[n.start_byte()..n.end_byte()].to_string());
                }
            }
            _ => {}
        }
    }
}

/// Names introduced by a declaration node; the flag marks classes.
fn declared_names(decl: Node, text: &str) -> Vec<(String, bool)> {
    let name_of = |n: Node| text[n.start_byte()..n.end_byte()].to_string();
    match decl.kind() {
        "function_declaration" | "generator_function_declaration" => decl
            .child_by_field_name("name")
            .map(|n| vec![(name_of(n), false)])
            .unwrap_or_default(),
        "class_declaration" => decl
            .child_by_field_name("name")
            .map(|n| vec![(name_of(n), true)])
            .unwrap_or_default(),
        "lexical_declaration" | "variable_declaration" => {
            let mut out = Vec::new();
            let mut cursor = decl.walk();
            for d in decl.named_children(&mut cursor) {
                if d.kind() != "variable_declarator" {
                    continue;
                }
                let (Some(name), Some(value)) =
                    (d.child_by_field_name("name"), d.child_by_field_name("value"))
                else {
                    continue;
                };
                if name.kind() != "identifier" {
                    continue;
                }
                let is_class = value.kind() == "class";
                if matches!(
                    value.kind(),
                    "arrow_function" | "function_expression" | "function" | "class" | "call_expression"
                ) {
                    out.push((name_of(name), is_class));
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

fn is_component_name(name: &str, is_class: bool) -> bool {
    is_class || name.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

fn strip_comment(c: &str) -> String {
    let c = c.trim();
    let body = if let Some(rest) = c.strip_prefix("//") {
        rest
    } else {
        c.trim_start_matches("/*")
            .trim_start_matches('*')
            .trim_end_matches("*/")
    };
    body.lines()
        .map(|l| l.trim().trim_start_matches('*').trim())
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}
