//! Annotated SVG wireframes.
//!
//! A wireframe is an SVG mockup whose shapes carry a `<desc>` child with
//! `key: value` annotations (`role: dropdown; label: Site Selector`). Parsing
//! turns it into a flat list of typed [`WireframeElement`]s in absolute canvas
//! coordinates; [`build_component_tree`] nests them by spatial containment and
//! [`tree_to_outline`] serializes the tree into the text block used in prompts.

mod annotation;
mod path;
mod svg;
mod tree;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use annotation::{kind_for_role, parse_annotations, ParsedAnnotations, RECOGNIZED_KEYS};
pub use svg::parse_svg;
pub use tree::{build_component_tree, tree_to_outline, ComponentTree, LayoutOutline, TreeNode};

/// Axis-aligned box in SVG user units. `(x, y)` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Self {
        BBox {
            x,
            y,
            width,
            height,
        }
    }

    pub fn from_extents(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        BBox::new(min_x, min_y, (max_x - min_x).max(0.0), (max_y - min_y).max(0.0))
    }

    pub fn right(&self) -> f64 {
        self.x + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        BBox::new(self.x + dx, self.y + dy, self.width, self.height)
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox::from_extents(
            self.x.min(other.x),
            self.y.min(other.y),
            self.right().max(other.right()),
            self.bottom().max(other.bottom()),
        )
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.right().min(other.right()) - self.x.max(other.x);
        let h = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Closed containment of `other` inside `self`.
    pub fn encloses(&self, other: &BBox) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Dropdown,
    Chart,
    Map,
    Text,
    Image,
    Button,
    Form,
    Container,
    Decor,
}

impl ElementKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ElementKind::Dropdown => "dropdown",
            ElementKind::Chart => "chart",
            ElementKind::Map => "map",
            ElementKind::Text => "text",
            ElementKind::Image => "image",
            ElementKind::Button => "button",
            ElementKind::Form => "form",
            ElementKind::Container => "container",
            ElementKind::Decor => "decor",
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireframeElement {
    pub id: String,
    pub kind: ElementKind,
    pub bbox: BBox,
    pub annotations: BTreeMap<String, String>,
    pub style: BTreeMap<String, String>,
    /// Character data of `<text>` elements.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl WireframeElement {
    pub fn annotation(&self, key: &str) -> Option<&str> {
        self.annotations.get(key).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireframeDocument {
    pub source_name: String,
    pub canvas: BBox,
    pub elements: Vec<WireframeElement>,
    pub warnings: Vec<String>,
}

impl WireframeDocument {
    pub fn element(&self, id: &str) -> Option<&WireframeElement> {
        self.elements.iter().find(|e| e.id == id)
    }

    /// Canonical JSON dump with stable key order.
    pub fn to_canonical_json(&self) -> String {
        // Struct fields serialize in declaration order and maps are BTreeMaps.
        let mut out = serde_json::to_string_pretty(self).expect("document serializes");
        out.push('\n');
        out
    }

    /// Distinct `data-endpoint` annotation values, sorted.
    pub fn data_endpoints(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .elements
            .iter()
            .filter_map(|e| e.annotation("data-endpoint"))
            .flat_map(|v| v.split(',').map(|s| s.trim().to_string()))
            .filter(|s| !s.is_empty())
            .collect();
        out.sort();
        out.dedup();
        out
    }
}
