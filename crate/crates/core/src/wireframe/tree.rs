use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{BBox, ElementKind, WireframeDocument};

/// Fraction of a child's area that must fall inside its parent.
pub const CONTAINMENT_THRESHOLD: f64 = 0.95;

pub const ROOT_ID: &str = "__root";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    /// Index into the document's elements; `None` for the synthetic root.
    pub element: Option<usize>,
    pub id: String,
    pub kind: ElementKind,
    pub bbox: BBox,
    pub depth: usize,
    pub children: Vec<usize>,
}

/// Arena-backed containment tree; node 0 is the synthetic root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTree {
    pub nodes: Vec<TreeNode>,
    /// Per node, the annotations of its element (empty for the root).
    annotations: Vec<Vec<(String, String)>>,
}

pub type LayoutOutline = String;

impl ComponentTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn parent_of(&self, node: usize) -> Option<usize> {
        self.nodes.iter().position(|n| n.children.contains(&node))
    }

    pub fn find(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Subtree whose top node's element carries `page: <page_id>`
    /// (case-insensitive), re-rooted under a fresh synthetic root.
    pub fn page_subtree(&self, page_id: &str) -> Option<ComponentTree> {
        let top = self.annotations.iter().position(|ann| {
            ann.iter()
                .any(|(k, v)| k == "page" && v.eq_ignore_ascii_case(page_id))
        })?;
        let mut nodes = vec![TreeNode {
            element: None,
            id: ROOT_ID.to_string(),
            kind: ElementKind::Container,
            bbox: self.nodes[top].bbox,
            depth: 0,
            children: vec![],
        }];
        let mut annotations = vec![vec![]];
        let mut stack = vec![(top, 0usize)];
        while let Some((src, parent)) = stack.pop() {
            let idx = nodes.len();
            let mut node = self.nodes[src].clone();
            node.depth = nodes[parent].depth + 1;
            node.children.clear();
            nodes.push(node);
            annotations.push(self.annotations[src].clone());
            nodes[parent].children.push(idx);
            for &c in self.nodes[src].children.iter().rev() {
                stack.push((c, idx));
            }
        }
        Some(ComponentTree { nodes, annotations })
    }

    pub fn node_annotations(&self, node: usize) -> &[(String, String)] {
        &self.annotations[node]
    }

    /// Values of one annotation key across all nodes, in node order.
    pub fn annotation_values(&self, key: &str) -> Vec<&str> {
        self.annotations
            .iter()
            .flatten()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    /// Sorted, de-duplicated `data-endpoint` values (comma-separated lists
    /// are split).
    pub fn data_endpoints(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .annotation_values("data-endpoint")
            .into_iter()
            .flat_map(|v| v.split(','))
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

fn contains(parent: &BBox, child: &BBox) -> bool {
    let area = child.area();
    if area <= 0.0 {
        return parent.encloses(child);
    }
    parent.intersection_area(child) / area >= CONTAINMENT_THRESHOLD
}

/// Nest non-decor elements by the 95% containment rule.
///
/// Each element's parent is the smallest-area element containing it. Equal
/// areas are broken by document order: only an earlier element can contain
/// an equal-area later one, which keeps the relation acyclic.
pub fn build_component_tree(doc: &WireframeDocument) -> ComponentTree {
    let members: Vec<usize> = doc
        .elements
        .iter()
        .enumerate()
        .filter(|(_, e)| e.kind != ElementKind::Decor)
        .map(|(i, _)| i)
        .collect();

    let can_contain = |outer: usize, inner: usize| -> bool {
        let (a, b) = (&doc.elements[outer], &doc.elements[inner]);
        let (aa, ba) = (a.bbox.area(), b.bbox.area());
        let larger = aa > ba || (aa == ba && outer < inner);
        larger && contains(&a.bbox, &b.bbox)
    };

    // parent[i] is an element index or None for the root.
    let mut parent: Vec<Option<usize>> = vec![None; doc.elements.len()];
    for &child in &members {
        let mut best: Option<usize> = None;
        for &cand in &members {
            if cand == child || !can_contain(cand, child) {
                continue;
            }
            best = match best {
                None => Some(cand),
                Some(b) => {
                    let (ca, ba) = (doc.elements[cand].bbox.area(), doc.elements[b].bbox.area());
                    if ca < ba || (ca == ba && cand < b) {
                        Some(cand)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        parent[child] = best;
    }

    let mut nodes = vec![TreeNode {
        element: None,
        id: ROOT_ID.to_string(),
        kind: ElementKind::Container,
        bbox: doc.canvas,
        depth: 0,
        children: vec![],
    }];
    let mut annotations = vec![vec![]];
    let mut node_of = vec![usize::MAX; doc.elements.len()];
    for &i in &members {
        let el = &doc.elements[i];
        node_of[i] = nodes.len();
        nodes.push(TreeNode {
            element: Some(i),
            id: el.id.clone(),
            kind: el.kind,
            bbox: el.bbox,
            depth: 0,
            children: vec![],
        });
        annotations.push(
            el.annotations
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        );
    }
    for &i in &members {
        let p = parent[i].map(|p| node_of[p]).unwrap_or(0);
        nodes[p].children.push(node_of[i]);
    }

    let order = |a: &TreeNode, b: &TreeNode| -> Ordering {
        a.bbox
            .y
            .total_cmp(&b.bbox.y)
            .then(a.bbox.x.total_cmp(&b.bbox.x))
            .then(a.element.cmp(&b.element))
    };
    for i in 0..nodes.len() {
        let mut children = std::mem::take(&mut nodes[i].children);
        children.sort_by(|&a, &b| order(&nodes[a], &nodes[b]));
        nodes[i].children = children;
    }

    let mut stack = vec![0usize];
    while let Some(n) = stack.pop() {
        let depth = nodes[n].depth;
        let children = nodes[n].children.clone();
        for c in children {
            nodes[c].depth = depth + 1;
            stack.push(c);
        }
    }

    ComponentTree { nodes, annotations }
}

fn fmt_num(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    if r == 0.0 {
        return "0".into();
    }
    let s = format!("{r:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Indented outline, one line per node:
/// `<kind> #<id> @(x,y,w,h) {k=v, ...}` with annotations sorted by key.
pub fn tree_to_outline(tree: &ComponentTree) -> LayoutOutline {
    let mut out = String::new();
    let mut stack = vec![0usize];
    while let Some(n) = stack.pop() {
        let node = &tree.nodes[n];
        let b = node.bbox;
        let ann = tree
            .node_annotations(n)
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(
            out,
            "{}{} #{} @({},{},{},{}) {{{}}}",
            "  ".repeat(node.depth),
            node.kind,
            node.id,
            fmt_num(b.x),
            fmt_num(b.y),
            fmt_num(b.width),
            fmt_num(b.height),
            ann
        );
        for &c in node.children.iter().rev() {
            stack.push(c);
        }
    }
    out
}
