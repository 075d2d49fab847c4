use std::path::{Component, Path, PathBuf};

use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

/// A directory that generated files may not escape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    /// Opens `root`, creating it when absent.
    pub fn open(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Workspace {
            root: root.canonicalize()?,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Absolute path for a workspace-relative path.
    ///
    /// Rejects absolute paths and `..` that climb above the root, then
    /// canonicalizes the deepest existing ancestor so that symlinks cannot
    /// lead outside either.
    pub fn resolve(&self, rel: &str) -> Result<PathBuf> {
        let rel_path = Path::new(rel);
        let mut parts: Vec<&std::ffi::OsStr> = Vec::new();
        for c in rel_path.components() {
            match c {
                Component::Normal(p) => parts.push(p),
                Component::CurDir => {}
                Component::ParentDir => {
                    if parts.pop().is_none() {
                        return Err(Error::Confinement(rel_path.to_path_buf()));
                    }
                }
                Component::RootDir | Component::Prefix(_) => {
                    return Err(Error::Confinement(rel_path.to_path_buf()))
                }
            }
        }
        if parts.is_empty() {
            return Err(Error::Confinement(rel_path.to_path_buf()));
        }
        let full: PathBuf = parts.iter().fold(self.root.clone(), |p, c| p.join(c));
        let mut existing = full.as_path();
        while !existing.exists() {
            existing = existing.parent().unwrap_or(&self.root);
        }
        if !existing.canonicalize()?.starts_with(&self.root) {
            return Err(Error::Confinement(rel_path.to_path_buf()));
        }
        Ok(full)
    }

    pub fn write(&self, rel: &str, contents: &str) -> Result<()> {
        let path = self.resolve(rel)?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        write_atomic(&path, contents.as_bytes())
    }

    pub fn read(&self, rel: &str) -> Result<String> {
        Ok(std::fs::read_to_string(self.resolve(rel)?)?)
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.resolve(rel).map(|p| p.is_file()).unwrap_or(false)
    }

    /// Every file, as sorted `/`-separated relative paths.
    pub fn files(&self) -> Vec<String> {
        let mut out: Vec<String> = WalkDir::new(&self.root)
            .into_iter()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_type().is_file())
            .filter_map(|e| {
                e.path().strip_prefix(&self.root).ok().map(|p| {
                    p.components()
                        .map(|c| c.as_os_str().to_string_lossy().into_owned())
                        .collect::<Vec<_>>()
                        .join("/")
                })
            })
            .collect();
        out.sort();
        out
    }

    /// Source files the dialect parser understands.
    pub fn source_files(&self) -> Vec<String> {
        self.files()
            .into_iter()
            .filter(|f| is_source(f))
            .collect()
    }
}

pub fn is_source(path: &str) -> bool {
    [".jsx", ".js", ".mjs"].iter().any(|ext| path.ends_with(ext))
}

/// Indented tree listing of relative paths.
pub fn render_file_tree(paths: &[String]) -> String {
    let mut sorted: Vec<&String> = paths.iter().collect();
    sorted.sort();
    sorted.dedup();
    let mut out = String::new();
    let mut open: Vec<&str> = Vec::new();
    for path in sorted {
        let parts: Vec<&str> = path.split('/').collect();
        let (dirs, file) = parts.split_at(parts.len() - 1);
        let common = open.iter().zip(dirs).take_while(|(a, b)| a == b).count();
        open.truncate(common);
        for d in &dirs[common..] {
            out.push_str(&format!("{}{d}/\n", "  ".repeat(open.len())));
            open.push(d);
        }
        out.push_str(&format!("{}{}\n", "  ".repeat(open.len()), file[0]));
    }
    out
}
