use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

use crate::error::{Error, Result};

/// Template names every set must provide.
pub const TEMPLATE_NAMES: &[&str] = &[
    "system",
    "file_structure",
    "layout_outline",
    "api_schema",
    "requirements",
    "exemplars",
    "exemplar",
    "output_contract",
    "fix",
];

const BUILTIN: &[(&str, &str)] = &[
    ("system", include_str!("../../templates/v1/system.txt")),
    ("file_structure", include_str!("../../templates/v1/file_structure.txt")),
    ("layout_outline", include_str!("../../templates/v1/layout_outline.txt")),
    ("api_schema", include_str!("../../templates/v1/api_schema.txt")),
    ("requirements", include_str!("../../templates/v1/requirements.txt")),
    ("exemplars", include_str!("../../templates/v1/exemplars.txt")),
    ("exemplar", include_str!("../../templates/v1/exemplar.txt")),
    ("output_contract", include_str!("../../templates/v1/output_contract.txt")),
    ("fix", include_str!("../../templates/v1/fix.txt")),
];

fn placeholder() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\}").expect("valid regex"))
}

/// Prompt templates with `{{name}}` placeholders, one file per template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<String, String>,
}

impl TemplateSet {
    /// The templates compiled into the library.
    pub fn builtin() -> Self {
        TemplateSet {
            templates: BUILTIN
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    /// Reads `<name>.txt` for every required template from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut templates = BTreeMap::new();
        for name in TEMPLATE_NAMES {
            let path = dir.join(format!("{name}.txt"));
            let text = std::fs::read_to_string(&path).map_err(|e| {
                Error::Config(format!("template {}: {e}", path.display()))
            })?;
            templates.insert(name.to_string(), text);
        }
        Ok(TemplateSet { templates })
    }

    pub fn get(&self, name: &str) -> Result<&str> {
        self.templates
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("missing template {name:?}")))
    }

    /// Substitutes placeholders in one pass; substituted text is not
    /// re-scanned. A placeholder without a value is a configuration error.
    pub fn render(&self, name: &str, vars: &BTreeMap<&str, String>) -> Result<String> {
        Ok(fill(name, self.get(name)?, vars)?.trim_end().to_string())
    }
}

/// Replaces every `{{key}}` in `template` with its value from `vars`.
/// `name` only labels the error for a placeholder without a value.
pub fn fill(name: &str, template: &str, vars: &BTreeMap<&str, String>) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut last = 0;
    for caps in placeholder().captures_iter(template) {
        let whole = caps.get(0).expect("group 0");
        let key = &caps[1];
        let value = vars.get(key).ok_or_else(|| {
            Error::Config(format!("template {name:?} uses unknown placeholder {key:?}"))
        })?;
        out.push_str(&template[last..whole.start()]);
        out.push_str(value);
        last = whole.end();
    }
    out.push_str(&template[last..]);
    Ok(out)
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitutes_once() {
        let set = TemplateSet::builtin();
        let vars = BTreeMap::from([("requirements", "show {{page_id}}".to_string())]);
        assert_eq!(
            set.render("requirements", &vars).unwrap(),
            "## Requirements\nshow {{page_id}}"
        );
    }

    #[test]
    fn missing_value_is_config_error() {
        let set = TemplateSet::builtin();
        assert!(matches!(
            set.render("requirements", &BTreeMap::new()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn builtin_matches_shipped_directory() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("templates/v1");
        assert_eq!(TemplateSet::load_dir(&dir).unwrap(), TemplateSet::builtin());
    }
}
