//! App specs and page planning.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task::{PageTask, PageType};

pub const DEFAULT_CONCAT_ID: &str = "app";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageSpec {
    pub id: String,
    #[serde(rename = "type")]
    pub page_type: String,
    pub route: String,
    #[serde(default)]
    pub requirements: String,
    /// Value of the `page` annotation marking this page in the wireframe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wireframe_page: Option<String>,
}

/// The `app.toml` file: one app instance with its pages.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concat_id: Option<String>,
    /// Wireframe SVG, relative to the spec file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wireframe: Option<String>,
    /// OpenAPI document, relative to the spec file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub openapi: Option<String>,
    #[serde(default)]
    pub pages: Vec<PageSpec>,
}

impl AppSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("app spec: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read app spec {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

fn valid_page_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

/// One task per page, sharing the spec's concat id. Target paths are
/// `pages/<PageId>.jsx`.
pub fn plan_pages(spec: &AppSpec) -> Result<Vec<PageTask>> {
    let concat = spec.concat_id.as_deref().unwrap_or(DEFAULT_CONCAT_ID);
    let mut routes = BTreeSet::new();
    let mut ids = BTreeSet::new();
    let mut tasks = Vec::with_capacity(spec.pages.len());
    for page in &spec.pages {
        if !valid_page_id(&page.id) {
            return Err(Error::Validation(format!(
                "page id {:?} must be non-empty and use only letters, digits, '-' or '_'",
                page.id
            )));
        }
        let page_type: PageType = page.page_type.parse()?;
        if !page.route.starts_with('/') {
            return Err(Error::Validation(format!(
                "route {:?} of page {} must begin with '/'",
                page.route, page.id
            )));
        }
        if !routes.insert(page.route.as_str()) {
            return Err(Error::Validation(format!("duplicate route {}", page.route)));
        }
        if !ids.insert(page.id.as_str()) {
            return Err(Error::Validation(format!("duplicate page id {}", page.id)));
        }
        let mut task = PageTask::new(concat, &page.id, page_type, &page.route);
        task.requirements = page.requirements.clone();
        task.wireframe_page = page.wireframe_page.clone();
        tasks.push(task);
    }
    Ok(tasks)
}
