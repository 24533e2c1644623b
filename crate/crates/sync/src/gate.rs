//! The publish gate: nothing leaves a workspace until every touched file
//! parses, and what leaves is the consolidated diff against the trees that
//! were last published.

use std::collections::BTreeMap;
use std::time::Duration;

use conflict_radar_core::distill::{consolidate, extract_changes, ChangeContext, IdentityMap};
use conflict_radar_core::model::{ChangeSet, MemberId, RevisionStamp};
use conflict_radar_core::syntax::{parse_unit, ElementTree, ParseError};

/// Contents of one file after an edit burst; `None` when it was deleted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileSnapshot {
    pub path: String,
    pub source: Option<String>,
}

impl FileSnapshot {
    pub fn new(path: impl Into<String>, source: impl Into<String>) -> Self {
        FileSnapshot { path: path.into(), source: Some(source.into()) }
    }

    pub fn deleted(path: impl Into<String>) -> Self {
        FileSnapshot { path: path.into(), source: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateResult {
    /// Consolidated delta to publish. May be empty when the burst had no
    /// semantic effect.
    Published(ChangeSet),
    Held { file: String, error: ParseError },
}

#[derive(Debug, Clone)]
pub struct PublishGate {
    project: String,
    author: MemberId,
    base_revision: RevisionStamp,
    published: BTreeMap<String, ElementTree>,
    identity: IdentityMap,
    next_seq: u64,
    local: ChangeSet,
}

impl PublishGate {
    pub fn new(project: impl Into<String>, author: MemberId, base_revision: RevisionStamp) -> Self {
        PublishGate {
            project: project.into(),
            local: ChangeSet::new(author.clone(), base_revision),
            author,
            base_revision,
            published: BTreeMap::new(),
            identity: IdentityMap::new(),
            next_seq: 0,
        }
    }

    pub fn author(&self) -> &MemberId {
        &self.author
    }

    pub fn base_revision(&self) -> RevisionStamp {
        self.base_revision
    }

    /// Records the base-revision tree of a file.
    pub fn set_baseline(&mut self, tree: ElementTree) {
        self.published.insert(tree.file_path.clone(), tree);
    }

    pub fn published_tree(&self, path: &str) -> Option<&ElementTree> {
        self.published.get(path)
    }

    pub fn published_trees(&self) -> &BTreeMap<String, ElementTree> {
        &self.published
    }

    /// Everything this workspace has published since the base revision,
    /// consolidated.
    pub fn local_changes(&self) -> &ChangeSet {
        &self.local
    }

    pub fn publish_if_error_free(&mut self, burst: &[FileSnapshot], at_millis: u64) -> GateResult {
        let mut parsed = Vec::with_capacity(burst.len());
        for snap in burst {
            let tree = match &snap.source {
                Some(src) => match parse_unit(src, &snap.path) {
                    Ok(tree) => tree,
                    Err(error) => return GateResult::Held { file: snap.path.clone(), error },
                },
                None => ElementTree::empty(snap.path.clone()),
            };
            parsed.push(tree);
        }

        let mut delta = ChangeSet::new(self.author.clone(), self.base_revision);
        for tree in parsed {
            let empty = ElementTree::empty(tree.file_path.clone());
            let old = self.published.get(&tree.file_path).unwrap_or(&empty);
            let ctx = ChangeContext {
                first_seq: self.next_seq,
                at_millis,
                ..ChangeContext::new(self.project.clone(), self.author.clone(), self.base_revision)
            };
            let raw = extract_changes(old, &tree, &ctx).expect("same file path");
            self.next_seq += raw.len() as u64;
            delta.changes.extend(self.identity.canonicalize(&raw).changes);
            self.published.insert(tree.file_path.clone(), tree);
        }
        let delta = consolidate(&delta);
        self.local.changes.extend(delta.changes.iter().cloned());
        self.local = consolidate(&self.local);
        GateResult::Published(delta)
    }

    /// Drops all local changes for a file restored to its base content.
    pub fn revert_file(&mut self, baseline: ElementTree) {
        let path = baseline.file_path.clone();
        self.local.changes.retain(|c| c.path.file != path);
        self.identity.forget_file(&path);
        self.published.insert(path, baseline);
    }

    /// Moves to a new base revision with fresh baselines. Returns the empty
    /// delta that announces the move.
    pub fn rebase(&mut self, base_revision: RevisionStamp, baselines: impl IntoIterator<Item = ElementTree>) -> ChangeSet {
        self.base_revision = base_revision;
        self.identity = IdentityMap::new();
        self.local = ChangeSet::new(self.author.clone(), base_revision);
        self.published = baselines.into_iter().map(|t| (t.file_path.clone(), t)).collect();
        self.local.clone()
    }
}

/// Exponential retry delay: 250 ms doubling up to 8 s.
#[derive(Debug, Clone)]
pub struct Backoff {
    attempt: u32,
}

impl Backoff {
    pub const BASE: Duration = Duration::from_millis(250);
    pub const CAP: Duration = Duration::from_secs(8);

    pub fn new() -> Self {
        Backoff { attempt: 0 }
    }

    pub fn next_delay(&mut self) -> Duration {
        let delay = Self::BASE.saturating_mul(1 << self.attempt.min(16)).min(Self::CAP);
        self.attempt += 1;
        delay
    }

    pub fn reset(&mut self) {
        self.attempt = 0;
    }
}

impl Default for Backoff {
    fn default() -> Self {
        Self::new()
    }
}
