//! The app route manifest and the router generated from it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::promptgen::component_name;
use crate::task::PageTask;

pub const MANIFEST_FORMAT: &str = "dashgen-routes";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_PATH: &str = "routes.json";
pub const ROUTER_PATH: &str = "App.jsx";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteEntry {
    pub page_id: String,
    pub target_path: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RouteManifest {
    routes: BTreeMap<String, RouteEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestFile {
    format: String,
    version: u32,
    routes: BTreeMap<String, RouteEntry>,
}

impl RouteManifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn get(&self, route: &str) -> Option<&RouteEntry> {
        self.routes.get(route)
    }

    /// Routes in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &RouteEntry)> {
        self.routes.iter().map(|(r, e)| (r.as_str(), e))
    }

    /// Adds `route → target_path`. Re-injecting an identical entry is a no-op;
    /// the same route bound to another file is a conflict.
    pub fn inject(&mut self, task: &PageTask) -> Result<()> {
        let entry = RouteEntry {
            page_id: task.page_id.clone(),
            target_path: task.target_path.clone(),
        };
        match self.routes.get(&task.route) {
            Some(existing) if *existing == entry => Ok(()),
            Some(existing) => Err(Error::Conflict(format!(
                "route {} already serves {} ({}), not {}",
                task.route, existing.target_path, existing.page_id, entry.target_path
            ))),
            None => {
                self.routes.insert(task.route.clone(), entry);
                Ok(())
            }
        }
    }

    pub fn to_json(&self) -> String {
        let file = ManifestFile {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            routes: self.routes.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ManifestFile = serde_json::from_str(text)
            .map_err(|e| Error::Format(format!("route manifest: {e}")))?;
        if file.format != MANIFEST_FORMAT || file.version != MANIFEST_VERSION {
            return Err(Error::Format(format!(
                "route manifest is {} v{}, expected {MANIFEST_FORMAT} v{MANIFEST_VERSION}",
                file.format, file.version
            )));
        }
        Ok(RouteManifest { routes: file.routes })
    }
}

/// Functional form of [`RouteManifest::inject`].
pub fn inject_route(manifest: &RouteManifest, task: &PageTask) -> Result<RouteManifest> {
    let mut next = manifest.clone();
    next.inject(task)?;
    Ok(next)
}

/// Root component switching on `window.location.pathname`.
pub fn render_router(manifest: &RouteManifest) -> String {
    let mut out = String::from("import React from 'react';\n");
    let mut names = Vec::new();
    for (_, e) in manifest.iter() {
        let name = component_name(&e.page_id);
        let path = e.target_path.trim_end_matches(".jsx");
        let _ = writeln!(out, "import {name} from './{path}';");
        names.push(name);
    }
    out.push_str("\nconst ROUTES = {\n");
    for ((route, _), name) in manifest.iter().zip(&names) {
        let _ = writeln!(out, "  {}: {name},", serde_json::to_string(route).expect("string"));
    }
    out.push_str("};\n\nexport default function App() {\n");
    out.push_str("  const Page = ROUTES[window.location.pathname];\n");
    out.push_str("  return Page ? <Page /> : <p>Not found</p>;\n}\n");
    out
}
