//! Static, external, and route-level validation tiers.

use std::collections::BTreeSet;
use std::io::ErrorKind;
use std::path::Path;
use std::process::Command;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::dialect::ParsedSource;
use crate::error::{Error, Result};
use crate::kbase::package_name;
use crate::orchestrator::routes::RouteManifest;
use crate::task::page_marker;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Static,
    External,
    Route,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    pub fn at(file: &str, line: usize, column: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            file: file.to_string(),
            line: Some(line),
            column: Some(column),
            message: message.into(),
        }
    }

    pub fn whole(file: &str, message: impl Into<String>) -> Self {
        Diagnostic {
            file: file.to_string(),
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{l}:{c} {}", self.file, self.message),
            (Some(l), None) => write!(f, "{}:{l} {}", self.file, self.message),
            _ => write!(f, "{} {}", self.file, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub target: String,
    pub tier: Tier,
    /// True exactly when `diagnostics` is empty.
    pub passed: bool,
    pub diagnostics: Vec<Diagnostic>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub raw_output: String,
}

impl ValidationReport {
    pub fn new(target: &str, tier: Tier, diagnostics: Vec<Diagnostic>, raw_output: String) -> Self {
        ValidationReport {
            target: target.to_string(),
            tier,
            passed: diagnostics.is_empty(),
            diagnostics,
            raw_output,
        }
    }
}

/// What imports may resolve to: whitelisted packages and workspace files.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImportPolicy {
    pub whitelist: BTreeSet<String>,
    /// Workspace-relative paths, `/`-separated.
    pub files: BTreeSet<String>,
}

impl ImportPolicy {
    pub fn new<I, J, S, T>(whitelist: I, files: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        ImportPolicy {
            whitelist: whitelist.into_iter().map(Into::into).collect(),
            files: files.into_iter().map(Into::into).collect(),
        }
    }
}

const RESOLVE_SUFFIXES: [&str; 6] = ["", ".jsx", ".js", ".mjs", "/index.jsx", "/index.js"];

/// Normalizes `dir/spec`; `None` if it climbs above the root.
fn join_relative(from_file: &str, spec: &str) -> Option<String> {
    let mut parts: Vec<&str> = from_file.split('/').collect();
    parts.pop();
    for seg in spec.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop()?;
            }
            s => parts.push(s),
        }
    }
    Some(parts.join("/"))
}

fn resolves(from_file: &str, spec: &str, files: &BTreeSet<String>) -> bool {
    let base = if spec.starts_with('/') {
        Some(spec.trim_start_matches('/').to_string())
    } else {
        join_relative(from_file, spec)
    };
    base.is_some_and(|b| {
        RESOLVE_SUFFIXES
            .iter()
            .any(|s| files.contains(&format!("{b}{s}")))
    })
}

/// Grammar check plus import resolution. Never fails; every problem becomes
/// a diagnostic.
pub fn static_validate(path: &str, contents: &str, policy: &ImportPolicy) -> ValidationReport {
    let parsed = ParsedSource::parse(contents);
    let mut diags: Vec<Diagnostic> = parsed
        .syntax_errors()
        .into_iter()
        .map(|e| Diagnostic::at(path, e.position.line, e.position.column, e.message))
        .collect();
    for import in parsed.imports() {
        let pos = parsed.position_of(import.span.start);
        let spec = &import.specifier;
        let ok = match package_name(spec) {
            Some(pkg) => policy.whitelist.contains(&pkg),
            None => resolves(path, spec, &policy.files),
        };
        if !ok {
            let msg = if package_name(spec).is_some() {
                format!("import `{spec}` is not in the allowed stack")
            } else {
                format!("unresolved import `{spec}`")
            };
            diags.push(Diagnostic::at(path, pos.line, pos.column, msg));
        }
    }
    ValidationReport::new(path, Tier::Static, diags, String::new())
}

pub const DEFAULT_DIAGNOSTIC_PATTERN: &str =
    r"^(?P<file>[^:\s]+):(?P<line>\d+):(?P<col>\d+):?\s+(?P<msg>.+)$";

/// A configured build or lint command whose output lists diagnostics.
#[derive(Debug, Clone)]
pub struct ExternalValidator {
    pub command: String,
    /// Each needs `file`, `line`, and `msg` groups; `col` is optional.
    pub patterns: Vec<Regex>,
}

impl ExternalValidator {
    pub fn new(command: &str, patterns: &[String]) -> Result<Self> {
        let patterns = if patterns.is_empty() {
            vec![DEFAULT_DIAGNOSTIC_PATTERN.to_string()]
        } else {
            patterns.to_vec()
        };
        let compiled = patterns
            .iter()
            .map(|p| {
                let re = Regex::new(p)
                    .map_err(|e| Error::Config(format!("diagnostic pattern {p:?}: {e}")))?;
                for group in ["file", "line", "msg"] {
                    if !re.capture_names().any(|n| n == Some(group)) {
                        return Err(Error::Config(format!(
                            "diagnostic pattern {p:?} lacks a `{group}` group"
                        )));
                    }
                }
                Ok(re)
            })
            .collect::<Result<Vec<_>>>()?;
        if shlex::split(command).map_or(true, |w| w.is_empty()) {
            return Err(Error::Config(format!("cannot parse command {command:?}")));
        }
        Ok(ExternalValidator {
            command: command.to_string(),
            patterns: compiled,
        })
    }

    pub fn parse_line(&self, line: &str) -> Option<Diagnostic> {
        self.patterns.iter().find_map(|re| {
            let c = re.captures(line)?;
            let line_no = c.name("line")?.as_str().parse::<usize>().ok()?.max(1);
            let col = c
                .name("col")
                .and_then(|m| m.as_str().parse::<usize>().ok())
                .map(|v| v.max(1));
            Some(Diagnostic {
                file: c["file"].to_string(),
                line: Some(line_no),
                column: col,
                message: c["msg"].trim().to_string(),
            })
        })
    }
}

/// Runs the command in `workspace`. Exit 0 passes; otherwise matching output
/// lines become diagnostics. A missing binary is an environment error.
pub fn external_validate(workspace: &Path, validator: &ExternalValidator) -> Result<ValidationReport> {
    let words = shlex::split(&validator.command)
        .filter(|w| !w.is_empty())
        .ok_or_else(|| Error::Config(format!("cannot parse command {:?}", validator.command)))?;
    let output = Command::new(&words[0])
        .args(&words[1..])
        .current_dir(workspace)
        .output()
        .map_err(|e| match e.kind() {
            ErrorKind::NotFound => Error::Environment(format!("validator `{}` not found", words[0])),
            ErrorKind::PermissionDenied => {
                Error::Environment(format!("validator `{}` is not executable", words[0]))
            }
            _ => Error::Environment(format!("cannot run validator `{}`: {e}", words[0])),
        })?;
    let mut raw = String::from_utf8_lossy(&output.stdout).into_owned();
    raw.push_str(&String::from_utf8_lossy(&output.stderr));
    let target = workspace.display().to_string();
    if output.status.success() {
        return Ok(ValidationReport::new(&target, Tier::External, vec![], raw));
    }
    let mut diags: Vec<Diagnostic> = raw.lines().filter_map(|l| validator.parse_line(l)).collect();
    if diags.is_empty() {
        let status = output
            .status
            .code()
            .map_or_else(|| "a signal".to_string(), |c| format!("status {c}"));
        diags.push(Diagnostic::whole("", format!("`{}` exited with {status}", validator.command)));
    }
    Ok(ValidationReport::new(&target, Tier::External, diags, raw))
}

pub const PROBE_TIMEOUT: Duration = Duration::from_secs(10);

/// One GET per route; a route passes on status 200 with the page marker in
/// the body. Refused connections on every route is a serving error.
pub fn probe_routes(base_url: &str, manifest: &RouteManifest) -> Result<Vec<ValidationReport>> {
    let client = reqwest::blocking::Client::builder()
        .timeout(PROBE_TIMEOUT)
        .build()
        .map_err(|e| Error::Config(format!("http client: {e}")))?;
    let base = base_url.trim_end_matches('/');
    let mut reports = Vec::new();
    let mut unreachable = 0;
    for (route, entry) in manifest.iter() {
        let url = format!("{base}{route}");
        let diags = match client.get(&url).send() {
            Err(e) => {
                if e.is_connect() {
                    unreachable += 1;
                }
                vec![Diagnostic::whole(route, format!("request failed: {e}"))]
            }
            Ok(resp) if resp.status().as_u16() != 200 => {
                vec![Diagnostic::whole(route, format!("status {}", resp.status().as_u16()))]
            }
            Ok(resp) => {
                let body = resp.text().unwrap_or_default();
                if body.contains(&page_marker(&entry.page_id)) {
                    vec![]
                } else {
                    vec![Diagnostic::whole(route, "marker missing")]
                }
            }
        };
        reports.push(ValidationReport::new(route, Tier::Route, diags, String::new()));
    }
    if !reports.is_empty() && unreachable == reports.len() {
        return Err(Error::Serving(format!("nothing is listening at {base_url}")));
    }
    Ok(reports)
}
