//! Per-page work units shared by prompting, generation, and evaluation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PageType {
    Base,
    Home,
    Geovisualization,
}

impl PageType {
    pub const ALL: [PageType; 3] = [PageType::Base, PageType::Home, PageType::Geovisualization];

    /// Base pages carry top-level text, home pages add metadata and banner
    /// imagery, geovisualization pages render GeoJSON.
    pub fn difficulty(self) -> u8 {
        match self {
            PageType::Base => 1,
            PageType::Home => 2,
            PageType::Geovisualization => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PageType::Base => "base",
            PageType::Home => "home",
            PageType::Geovisualization => "geovisualization",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            PageType::Base => "Base",
            PageType::Home => "Homepage",
            PageType::Geovisualization => "Geovisualization",
        }
    }
}

impl fmt::Display for PageType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PageType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(PageType::Base),
            "home" | "homepage" => Ok(PageType::Home),
            "geovisualization" | "geo" => Ok(PageType::Geovisualization),
            _ => Err(Error::Validation(format!("unknown page type {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageTask {
    pub concat_id: String,
    pub page_id: String,
    pub page_type: PageType,
    pub difficulty: u8,
    /// Relative to the workspace root.
    pub target_path: String,
    pub route: String,
    /// Wireframe element carrying `page: <page_id>`, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wireframe_page: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub requirements: String,
}

impl PageTask {
    pub fn new(concat_id: &str, page_id: &str, page_type: PageType, route: &str) -> Self {
        PageTask {
            concat_id: concat_id.to_string(),
            page_id: page_id.to_string(),
            page_type,
            difficulty: page_type.difficulty(),
            target_path: format!("pages/{page_id}.jsx"),
            route: route.to_string(),
            wireframe_page: None,
            requirements: String::new(),
        }
    }

    /// Attribute every generated page must carry so that a served route can
    /// be recognised without a browser.
    pub fn marker(&self) -> String {
        page_marker(&self.page_id)
    }
}

pub fn page_marker(page_id: &str) -> String {
    format!("data-page-id=\"{page_id}\"")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn difficulty_follows_type() {
        let d: Vec<u8> = PageType::ALL.iter().map(|t| t.difficulty()).collect();
        assert_eq!(d, [1, 2, 3]);
    }

    #[test]
    fn parses_aliases() {
        assert_eq!("homePage".parse::<PageType>().unwrap(), PageType::Home);
        assert!("landing".parse::<PageType>().is_err());
    }
}
