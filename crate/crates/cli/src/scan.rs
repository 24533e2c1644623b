//! Finding the workspace's source files.

use std::collections::BTreeMap;
use std::path::Path;

use globset::{Glob, GlobSet, GlobSetBuilder};
use walkdir::WalkDir;

pub fn matcher(include: &[String]) -> Result<GlobSet, globset::Error> {
    let mut builder = GlobSetBuilder::new();
    for pattern in include {
        builder.add(Glob::new(pattern)?);
    }
    builder.build()
}

/// Contents of every included file, keyed by `/`-separated path relative
/// to `root`. Hidden directories are skipped.
pub fn scan(root: &Path, include: &GlobSet) -> BTreeMap<String, String> {
    let mut files = BTreeMap::new();
    let walk = WalkDir::new(root)
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || !e.file_name().to_string_lossy().starts_with('.'));
    for entry in walk.filter_map(Result::ok) {
        if !entry.file_type().is_file() {
            continue;
        }
        let Ok(rel) = entry.path().strip_prefix(root) else { continue };
        let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        if !include.is_match(&rel) {
            continue;
        }
        match std::fs::read_to_string(entry.path()) {
            Ok(text) => {
                files.insert(rel, text);
            }
            Err(e) => tracing::warn!(file = %rel, "skipping unreadable file: {e}"),
        }
    }
    files
}
