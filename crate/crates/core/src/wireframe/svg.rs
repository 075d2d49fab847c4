use std::collections::{BTreeMap, HashSet};

use roxmltree::{Document, Node};

use super::annotation::{kind_for_role, parse_annotations};
use super::path::path_bbox;
use super::{BBox, ElementKind, WireframeDocument, WireframeElement};
use crate::error::{Error, Result};

const PRESENTATION_ATTRS: &[&str] = &[
    "fill",
    "fill-opacity",
    "font-family",
    "font-size",
    "font-weight",
    "opacity",
    "stroke",
    "stroke-width",
];

const SKIPPED: &[&str] = &[
    "defs",
    "style",
    "title",
    "desc",
    "metadata",
    "clipPath",
    "mask",
    "symbol",
    "marker",
    "pattern",
    "linearGradient",
    "radialGradient",
    "filter",
    "script",
];

const DEFAULT_FONT_SIZE: f64 = 16.0;
/// Average glyph advance as a fraction of the font size.
const GLYPH_ADVANCE: f64 = 0.6;

/// Parse an annotated SVG mockup.
///
/// Shapes and groups that carry an `id` and a `<desc>` become elements. Shapes
/// with neither become `decor`; groups with neither only contribute their
/// `translate` offset to descendants.
pub fn parse_svg(source_name: &str, bytes: &[u8]) -> Result<WireframeDocument> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        offset: e.valid_up_to(),
        message: "input is not valid UTF-8".into(),
    })?;
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        Error::Parse {
            offset: byte_offset(text, pos.row as usize, pos.col as usize),
            message: e.to_string(),
        }
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "svg" {
        return Err(Error::Format(format!(
            "root element is <{}>, expected <svg>",
            root.tag_name().name()
        )));
    }

    let canvas = canvas_of(&root)?;
    let mut walker = Walker::default();
    walker.walk_children(root, 0.0, 0.0);

    let mut seen = HashSet::new();
    for el in &walker.elements {
        if !seen.insert(el.id.as_str()) {
            return Err(Error::Validation(format!("duplicate element id {:?}", el.id)));
        }
    }

    Ok(WireframeDocument {
        source_name: source_name.to_string(),
        canvas,
        elements: walker.elements,
        warnings: walker.warnings,
    })
}

/// roxmltree reports 1-based (row, column-in-chars).
fn byte_offset(text: &str, row: usize, col: usize) -> usize {
    let mut offset = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        if i + 1 == row {
            return offset
                + line
                    .char_indices()
                    .nth(col.saturating_sub(1))
                    .map(|(b, _)| b)
                    .unwrap_or(line.len());
        }
        offset += line.len();
    }
    text.len()
}

fn canvas_of(root: &Node) -> Result<BBox> {
    if let Some(vb) = root.attribute("viewBox") {
        let nums: Vec<f64> = vb
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .filter_map(|s| s.parse().ok())
            .collect();
        if nums.len() == 4 && nums[2] > 0.0 && nums[3] > 0.0 {
            return Ok(BBox::new(nums[0], nums[1], nums[2], nums[3]));
        }
        return Err(Error::Format(format!("invalid viewBox {vb:?}")));
    }
    let w = root.attribute("width").and_then(parse_number);
    let h = root.attribute("height").and_then(parse_number);
    match (w, h) {
        (Some(w), Some(h)) if w > 0.0 && h > 0.0 => Ok(BBox::new(0.0, 0.0, w, h)),
        _ => Err(Error::Format(
            "svg root needs a viewBox or positive width and height".into(),
        )),
    }
}

/// Leading number of an SVG length, ignoring any unit suffix.
fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let end = s
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .unwrap_or(s.len());
    // "1em" would otherwise swallow the 'e'.
    let num = s[..end].trim_end_matches(['e', 'E']);
    num.parse().ok()
}

fn attr_num(node: &Node, name: &str) -> f64 {
    node.attribute(name).and_then(parse_number).unwrap_or(0.0)
}

#[derive(Default)]
struct Walker {
    elements: Vec<WireframeElement>,
    warnings: Vec<String>,
    decor_count: usize,
    anon_count: usize,
}

impl Walker {
    /// Walks element children, returning the union of their geometry.
    fn walk_children(&mut self, node: Node, dx: f64, dy: f64) -> Option<BBox> {
        let mut acc: Option<BBox> = None;
        for child in node.children().filter(|n| n.is_element()) {
            if let Some(b) = self.walk(child, dx, dy) {
                acc = Some(match acc {
                    Some(a) => a.union(&b),
                    None => b,
                });
            }
        }
        acc
    }

    fn walk(&mut self, node: Node, dx: f64, dy: f64) -> Option<BBox> {
        let tag = node.tag_name().name();
        if SKIPPED.contains(&tag) {
            return None;
        }
        let (tx, ty) = self.translation(&node);
        let (dx, dy) = (dx + tx, dy + ty);

        match tag {
            "g" | "a" | "svg" | "switch" => {
                let slot = self.open_element(&node, true);
                let bbox = self.walk_children(node, dx, dy);
                if let Some(slot) = slot {
                    self.elements[slot].bbox = bbox.unwrap_or(BBox::new(dx, dy, 0.0, 0.0));
                }
                bbox
            }
            _ => {
                let (local, text) = match self.geometry(&node, tag) {
                    Some(g) => g,
                    None => return None,
                };
                let bbox = local.translate(dx, dy);
                if let Some(slot) = self.open_element(&node, false) {
                    let el = &mut self.elements[slot];
                    el.bbox = bbox;
                    el.text = text;
                }
                Some(bbox)
            }
        }
    }

    fn translation(&mut self, node: &Node) -> (f64, f64) {
        let Some(t) = node.attribute("transform") else {
            return (0.0, 0.0);
        };
        let (mut tx, mut ty) = (0.0, 0.0);
        for part in t.split(')') {
            let part = part.trim().trim_start_matches(',').trim();
            if part.is_empty() {
                continue;
            }
            let Some((name, args)) = part.split_once('(') else {
                self.warnings
                    .push(format!("unparseable transform {t:?} ignored"));
                return (0.0, 0.0);
            };
            let args: Vec<f64> = args
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .filter_map(|s| s.parse().ok())
                .collect();
            if name.trim() == "translate" && !args.is_empty() {
                tx += args[0];
                ty += args.get(1).copied().unwrap_or(0.0);
            } else {
                self.warnings.push(format!(
                    "transform {:?} is not a translate and was ignored",
                    name.trim()
                ));
            }
        }
        (tx, ty)
    }

    fn geometry(&mut self, node: &Node, tag: &str) -> Option<(BBox, Option<String>)> {
        let bbox = match tag {
            "rect" | "image" | "foreignObject" => BBox::new(
                attr_num(node, "x"),
                attr_num(node, "y"),
                attr_num(node, "width").max(0.0),
                attr_num(node, "height").max(0.0),
            ),
            "circle" => {
                let r = attr_num(node, "r").max(0.0);
                BBox::new(
                    attr_num(node, "cx") - r,
                    attr_num(node, "cy") - r,
                    2.0 * r,
                    2.0 * r,
                )
            }
            "ellipse" => {
                let rx = attr_num(node, "rx").max(0.0);
                let ry = attr_num(node, "ry").max(0.0);
                BBox::new(
                    attr_num(node, "cx") - rx,
                    attr_num(node, "cy") - ry,
                    2.0 * rx,
                    2.0 * ry,
                )
            }
            "line" => {
                let (x1, y1) = (attr_num(node, "x1"), attr_num(node, "y1"));
                let (x2, y2) = (attr_num(node, "x2"), attr_num(node, "y2"));
                BBox::from_extents(x1.min(x2), y1.min(y2), x1.max(x2), y1.max(y2))
            }
            "polyline" | "polygon" => {
                let nums: Vec<f64> = node
                    .attribute("points")
                    .unwrap_or("")
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|s| !s.is_empty())
                    .filter_map(|s| s.parse().ok())
                    .collect();
                if nums.len() < 2 {
                    self.warnings
                        .push(format!("<{tag}> without points ignored"));
                    return None;
                }
                let xs = nums.iter().step_by(2);
                let ys = nums.iter().skip(1).step_by(2);
                let (min_x, max_x) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
                let (min_y, max_y) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
                BBox::from_extents(min_x, min_y, max_x, max_y)
            }
            "path" => match path_bbox(node.attribute("d").unwrap_or("")) {
                Some(b) => b,
                None => {
                    self.warnings.push(format!(
                        "path {:?} has unparseable data and was ignored",
                        node.attribute("id").unwrap_or("")
                    ));
                    return None;
                }
            },
            "text" => {
                let content: String = node
                    .descendants()
                    .filter(|n| n.is_text())
                    .filter(|n| {
                        // <desc> inside <text> is annotation, not content.
                        n.parent()
                            .map(|p| p.tag_name().name() != "desc")
                            .unwrap_or(true)
                    })
                    .filter_map(|n| n.text())
                    .collect::<Vec<_>>()
                    .join(" ");
                let content = content.split_whitespace().collect::<Vec<_>>().join(" ");
                let fs = style_map(node)
                    .get("font-size")
                    .and_then(|v| parse_number(v))
                    .unwrap_or(DEFAULT_FONT_SIZE);
                let first = |name: &str| {
                    node.attribute(name)
                        .and_then(|v| v.split_whitespace().next())
                        .and_then(parse_number)
                        .unwrap_or(0.0)
                };
                let (x, baseline) = (first("x"), first("y"));
                let width = content.chars().count() as f64 * GLYPH_ADVANCE * fs;
                let bbox = BBox::new(x, baseline - fs, width, fs);
                return Some((bbox, Some(content)));
            }
            _ => return None,
        };
        Some((bbox, None))
    }

    /// Pushes an element for `node` when it qualifies, returning its index.
    fn open_element(&mut self, node: &Node, is_group: bool) -> Option<usize> {
        let id = node.attribute("id").map(str::to_string);
        let desc = node
            .children()
            .find(|c| c.is_element() && c.tag_name().name() == "desc")
            .map(|d| {
                d.descendants()
                    .filter(|n| n.is_text())
                    .filter_map(|n| n.text())
                    .collect::<String>()
            });

        if is_group && desc.is_none() {
            return None;
        }

        let (id, kind, annotations) = match (id, desc) {
            (None, None) => {
                self.decor_count += 1;
                (
                    format!("__decor-{}", self.decor_count),
                    ElementKind::Decor,
                    BTreeMap::new(),
                )
            }
            (Some(id), None) => {
                self.warnings
                    .push(format!("element {id:?}: missing role (no <desc>)"));
                (id, ElementKind::Container, BTreeMap::new())
            }
            (id, Some(desc)) => {
                let id = id.unwrap_or_else(|| {
                    self.anon_count += 1;
                    let synthetic = format!("__{}-{}", node.tag_name().name(), self.anon_count);
                    self.warnings
                        .push(format!("annotated element without id named {synthetic:?}"));
                    synthetic
                });
                let parsed = parse_annotations(&desc);
                self.warnings.extend(
                    parsed
                        .warnings
                        .into_iter()
                        .map(|w| format!("element {id:?}: {w}")),
                );
                let kind = match parsed.pairs.get("role") {
                    None => {
                        self.warnings.push(format!("element {id:?}: missing role"));
                        ElementKind::Container
                    }
                    Some(role) => kind_for_role(role).unwrap_or_else(|| {
                        self.warnings
                            .push(format!("element {id:?}: unknown role {role:?}"));
                        ElementKind::Container
                    }),
                };
                (id, kind, parsed.pairs)
            }
        };

        self.elements.push(WireframeElement {
            id,
            kind,
            bbox: BBox::new(0.0, 0.0, 0.0, 0.0),
            annotations,
            style: style_map(node),
            text: None,
        });
        Some(self.elements.len() - 1)
    }
}

fn style_map(node: &Node) -> BTreeMap<String, String> {
    let mut style = BTreeMap::new();
    for &name in PRESENTATION_ATTRS {
        if let Some(v) = node.attribute(name) {
            style.insert(name.to_string(), v.trim().to_string());
        }
    }
    if let Some(s) = node.attribute("style") {
        for decl in s.split(';') {
            if let Some((k, v)) = decl.split_once(':') {
                let (k, v) = (k.trim(), v.trim());
                if !k.is_empty() {
                    style.insert(k.to_ascii_lowercase(), v.to_string());
                }
            }
        }
    }
    style
}
