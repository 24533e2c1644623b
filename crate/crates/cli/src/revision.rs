//! Base revisions and base-revision file contents from the SCM.

use std::path::Path;
use std::process::Command;

use conflict_radar_core::model::RevisionStamp;

use crate::config::{RevisionProvider, META_DIR};

pub const REVISION_FILE: &str = "REVISION";

/// The workspace's base revision. Falls back to 0 with a warning when the
/// provider has nothing to say.
pub fn current_revision(provider: RevisionProvider, root: &Path) -> RevisionStamp {
    let found = match provider {
        RevisionProvider::File => file_revision(root),
        RevisionProvider::Git => git_revision(root),
    };
    match found {
        Ok(n) => RevisionStamp(n),
        Err(e) => {
            tracing::warn!(%provider, "no base revision ({e}); using 0");
            RevisionStamp(0)
        }
    }
}

fn file_revision(root: &Path) -> Result<u64, String> {
    let path = root.join(META_DIR).join(REVISION_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.trim().parse().map_err(|_| format!("{}: not an integer", path.display()))
}

fn git(root: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new("git").arg("-C").arg(root).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).trim().to_string());
    }
    Ok(out.stdout)
}

fn git_revision(root: &Path) -> Result<u64, String> {
    let out = git(root, &["rev-list", "--first-parent", "--count", "HEAD"])?;
    String::from_utf8_lossy(&out).trim().parse().map_err(|e| format!("unexpected rev-list output: {e}"))
}

/// Content of `rel_path` at the base revision. Only the git provider can
/// answer; the file provider keeps no history.
pub fn base_content(provider: RevisionProvider, root: &Path, rel_path: &str) -> Option<String> {
    match provider {
        RevisionProvider::File => None,
        RevisionProvider::Git => {
            let out = git(root, &["show", &format!("HEAD:{rel_path}")]).ok()?;
            String::from_utf8(out).ok()
        }
    }
}

/// True iff the file's bytes equal its base-revision bytes. A missing
/// baseline never counts as a revert.
pub fn detect_revert(baseline: Option<&str>, current: Option<&str>) -> bool {
    match (baseline, current) {
        (Some(b), Some(c)) => b.as_bytes() == c.as_bytes(),
        (None, _) => {
            tracing::debug!("no baseline; not a revert");
            false
        }
        (Some(_), None) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_provider() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(current_revision(RevisionProvider::File, dir.path()), RevisionStamp(0));
        std::fs::create_dir(dir.path().join(META_DIR)).unwrap();
        std::fs::write(dir.path().join(META_DIR).join(REVISION_FILE), "5\n").unwrap();
        assert_eq!(current_revision(RevisionProvider::File, dir.path()), RevisionStamp(5));
        std::fs::write(dir.path().join(META_DIR).join(REVISION_FILE), "five").unwrap();
        assert_eq!(current_revision(RevisionProvider::File, dir.path()), RevisionStamp(0));
    }

    #[test]
    fn git_outside_a_repository() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(current_revision(RevisionProvider::Git, dir.path()), RevisionStamp(0));
        assert_eq!(base_content(RevisionProvider::Git, dir.path(), "A.java"), None);
    }

    #[test]
    fn revert_is_byte_equality() {
        let base = "class A { int x; }\n";
        assert!(detect_revert(Some(base), Some(base)));
        assert!(!detect_revert(Some(base), Some("class A { int y; }\n")));
        assert!(!detect_revert(Some(base), Some("class A {  int x; }\n")));
        assert!(!detect_revert(None, Some(base)));
        assert!(!detect_revert(Some(base), None));
    }
}
