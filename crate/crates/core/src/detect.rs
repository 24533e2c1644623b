//! Conflict detection by semantic path lookup.
//!
//! Detection is stateless: every call rebuilds a hash index of the remote
//! changes keyed by alias-resolved structured path and probes it against the
//! local changes, which is linear in the total number of changes.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::distill::{locate, RenameAlias};
use crate::model::{ChangeKind, ChangeSet, ConflictReport, MemberId, RevisionStamp, SemanticChange, SemanticPath, Severity};
use crate::syntax::ElementTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateDecision {
    Accepted,
    Rejected,
}

/// Incoming change sets based on an older revision than the local one are
/// rejected; equal and newer ones are accepted.
pub fn version_gate(incoming: &ChangeSet, local_base: RevisionStamp) -> GateDecision {
    if incoming.base_revision < local_base {
        GateDecision::Rejected
    } else {
        GateDecision::Accepted
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DetectOptions {
    /// Downgrade conflicts where both sides made identical edits to
    /// awareness.
    pub suppress_identical: bool,
}

/// Resolves renamed paths back to their pre-rename identity.
#[derive(Debug, Clone, Default)]
pub struct AliasResolver {
    renamed: HashMap<SemanticPath, SemanticPath>,
}

impl AliasResolver {
    pub fn new(aliases: &[RenameAlias]) -> Self {
        let renamed = aliases.iter().map(|a| (a.new_path.clone(), a.old_path.clone())).collect();
        AliasResolver { renamed }
    }

    pub fn resolve(&self, path: &SemanticPath) -> SemanticPath {
        if self.renamed.is_empty() {
            return path.clone();
        }
        let mut current = path.clone();
        let mut seen = HashSet::new();
        while seen.insert(current.clone()) {
            if let Some(old) = self.renamed.get(&current) {
                current = old.clone();
            } else if let (Some(param), Some(old)) = (&current.param, self.renamed.get(&current.member_path())) {
                current = old.param(param);
            } else {
                break;
            }
        }
        current
    }
}

/// Changes grouped by alias-resolved path.
pub struct PathIndex<'a> {
    resolver: &'a AliasResolver,
    entries: HashMap<SemanticPath, Vec<(&'a MemberId, &'a SemanticChange)>>,
}

impl<'a> PathIndex<'a> {
    pub fn new(resolver: &'a AliasResolver) -> Self {
        PathIndex { resolver, entries: HashMap::new() }
    }

    pub fn insert_set(&mut self, set: &'a ChangeSet) {
        for change in &set.changes {
            self.entries.entry(self.resolver.resolve(&change.path)).or_default().push((&set.author, change));
        }
    }

    pub fn get(&self, path: &SemanticPath) -> Option<&[(&'a MemberId, &'a SemanticChange)]> {
        self.entries.get(&self.resolver.resolve(path)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn detect(local: &ChangeSet, remotes: &[ChangeSet], aliases: &[RenameAlias]) -> Vec<ConflictReport> {
    detect_with(local, remotes, aliases, DetectOptions::default())
}

pub fn detect_with(
    local: &ChangeSet,
    remotes: &[ChangeSet],
    aliases: &[RenameAlias],
    options: DetectOptions,
) -> Vec<ConflictReport> {
    let resolver = AliasResolver::new(aliases);
    let mut remote_index = PathIndex::new(&resolver);
    for set in remotes.iter().filter(|s| s.author != local.author) {
        remote_index.insert_set(set);
    }
    let mut local_index = PathIndex::new(&resolver);
    local_index.insert_set(local);

    let mut reports: Vec<ConflictReport> = remote_index
        .entries
        .iter()
        .map(|(path, remote)| {
            let local_changes = local_index.entries.get(path).map(Vec::as_slice).unwrap_or(&[]);
            build_report(path, local_changes, remote, options)
        })
        .collect();
    reports.sort_by(|a, b| a.path_id.cmp(&b.path_id).then_with(|| a.path.cmp(&b.path)));
    reports
}

/// Most recent change; ties on time and sequence go to the greatest author.
fn latest<'c>(changes: &'c [(&MemberId, &SemanticChange)]) -> Option<&'c SemanticChange> {
    changes.iter().max_by_key(|(a, c)| (c.at_millis, c.seq, *a)).map(|(_, c)| *c)
}

fn build_report(
    path: &SemanticPath,
    local: &[(&MemberId, &SemanticChange)],
    remote: &[(&MemberId, &SemanticChange)],
    options: DetectOptions,
) -> ConflictReport {
    let mut local_kinds: BTreeSet<ChangeKind> = local.iter().map(|(_, c)| c.kind).collect();
    let remote_kinds: BTreeSet<ChangeKind> = remote.iter().map(|(_, c)| c.kind).collect();
    let remote_authors: BTreeSet<MemberId> = remote.iter().map(|(a, _)| (*a).clone()).collect();
    let plumbing = local_kinds.iter().chain(&remote_kinds).all(|k| k.is_plumbing());

    let mut severity = if local_kinds.is_empty() { Severity::Awareness } else { Severity::Conflict };
    if severity == Severity::Conflict && options.suppress_identical && identical_results(local, remote) {
        severity = Severity::Awareness;
        local_kinds.clear();
    }

    let span_source = match severity {
        Severity::Conflict => latest(local),
        Severity::Awareness => latest(remote),
    };
    ConflictReport {
        path_id: path.id(),
        path: path.clone(),
        severity,
        local_kinds,
        remote_authors,
        remote_kinds,
        plumbing,
        decoration_span: span_source.map(|c| c.decoration_span).unwrap_or_default(),
    }
}

/// Every remote author's net edits at the path equal the local ones.
fn identical_results(local: &[(&MemberId, &SemanticChange)], remote: &[(&MemberId, &SemanticChange)]) -> bool {
    let outcome = |changes: &mut dyn Iterator<Item = &SemanticChange>| -> BTreeSet<(ChangeKind, Option<String>)> {
        changes.map(|c| (c.kind, c.after())).collect()
    };
    let mine = outcome(&mut local.iter().map(|(_, c)| *c));
    let mut by_author: BTreeMap<&MemberId, Vec<&SemanticChange>> = BTreeMap::new();
    for (author, change) in remote {
        by_author.entry(*author).or_default().push(change);
    }
    by_author.values().all(|changes| outcome(&mut changes.iter().copied()) == mine)
}

/// Drops every change recorded for `file_path`.
pub fn purge_on_revert(changes: &ChangeSet, file_path: &str) -> ChangeSet {
    ChangeSet {
        author: changes.author.clone(),
        base_revision: changes.base_revision,
        changes: changes.changes.iter().filter(|c| c.path.file != file_path).cloned().collect(),
    }
}

/// Re-anchors awareness reports to the local file version. Conflict reports
/// already carry a span from the local change.
pub fn anchor_reports(reports: &mut [ConflictReport], trees: &HashMap<String, ElementTree>) {
    for report in reports.iter_mut().filter(|r| r.severity == Severity::Awareness) {
        let Some(tree) = trees.get(&report.path.file) else { continue };
        let Some(&kind) = report.remote_kinds.iter().next() else { continue };
        if let Some(span) = locate(tree, &report.path, kind) {
            report.decoration_span = span;
        }
    }
}

/// Highest severity in a report list: `None` when empty.
pub fn worst_severity(reports: &[ConflictReport]) -> Option<Severity> {
    reports.iter().map(|r| r.severity).max()
}
