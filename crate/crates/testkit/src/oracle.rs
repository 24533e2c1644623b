//! Deliberately naive reference implementations used to cross-check the
//! engine: linear scans and pairwise comparisons, no indexes.

use std::collections::{BTreeMap, BTreeSet};

use conflict_radar_core::distill::{consolidate, RenameAlias};
use conflict_radar_core::model::{ChangeKind, ChangeSet, ConflictReport, MemberId, SemanticChange, SemanticPath, Severity};

/// Follows rename aliases back to the oldest identity. Later aliases win
/// when two share a new path; revisiting a path stops the walk.
pub fn resolve_linear(aliases: &[RenameAlias], path: &SemanticPath) -> SemanticPath {
    let mut current = path.clone();
    let mut visited: Vec<SemanticPath> = Vec::new();
    loop {
        if visited.contains(&current) {
            return current;
        }
        visited.push(current.clone());
        if let Some(a) = aliases.iter().rev().find(|a| a.new_path == current) {
            current = a.old_path.clone();
            continue;
        }
        if let Some(param) = current.param.clone() {
            let member = SemanticPath { param: None, ..current.clone() };
            if let Some(a) = aliases.iter().rev().find(|a| a.new_path == member) {
                current = SemanticPath { param: Some(param), ..a.old_path.clone() };
                continue;
            }
        }
        return current;
    }
}

struct Group<'a> {
    key: SemanticPath,
    remote: Vec<(&'a MemberId, &'a SemanticChange)>,
    local: Vec<&'a SemanticChange>,
}

/// Compares every local change against every remote change.
pub fn brute_force_detect(
    local: &ChangeSet,
    remotes: &[ChangeSet],
    aliases: &[RenameAlias],
    suppress_identical: bool,
) -> Vec<ConflictReport> {
    let mut groups: Vec<Group> = Vec::new();
    for set in remotes {
        if set.author == local.author {
            continue;
        }
        for rc in &set.changes {
            let key = resolve_linear(aliases, &rc.path);
            match groups.iter_mut().find(|g| g.key == key) {
                Some(g) => g.remote.push((&set.author, rc)),
                None => groups.push(Group { key, remote: vec![(&set.author, rc)], local: vec![] }),
            }
        }
    }
    for group in &mut groups {
        for lc in &local.changes {
            if resolve_linear(aliases, &lc.path) == group.key {
                group.local.push(lc);
            }
        }
    }

    let mut reports: Vec<ConflictReport> = groups
        .into_iter()
        .map(|g| {
            let mut local_kinds: BTreeSet<ChangeKind> = g.local.iter().map(|c| c.kind).collect();
            let remote_kinds: BTreeSet<ChangeKind> = g.remote.iter().map(|(_, c)| c.kind).collect();
            let remote_authors: BTreeSet<MemberId> = g.remote.iter().map(|(a, _)| (*a).clone()).collect();
            let plumbing = local_kinds.iter().chain(remote_kinds.iter()).all(|k| k.is_plumbing());
            let mut severity = if g.local.is_empty() { Severity::Awareness } else { Severity::Conflict };
            if severity == Severity::Conflict && suppress_identical {
                let mine: BTreeSet<_> = g.local.iter().map(|c| (c.kind, c.after())).collect();
                let mut theirs: BTreeMap<&MemberId, BTreeSet<_>> = BTreeMap::new();
                for (a, c) in &g.remote {
                    theirs.entry(*a).or_default().insert((c.kind, c.after()));
                }
                if theirs.values().all(|t| *t == mine) {
                    severity = Severity::Awareness;
                    local_kinds.clear();
                }
            }
            let newest = |cs: Vec<(&MemberId, &SemanticChange)>| {
                let mut best: Option<(&MemberId, &SemanticChange)> = None;
                for (a, c) in cs {
                    let newer = match best {
                        None => true,
                        Some((ba, bc)) => (c.at_millis, c.seq, a) >= (bc.at_millis, bc.seq, ba),
                    };
                    if newer {
                        best = Some((a, c));
                    }
                }
                best.map(|(_, c)| c.decoration_span).unwrap_or_default()
            };
            let decoration_span = match severity {
                Severity::Conflict => newest(g.local.iter().map(|c| (&local.author, *c)).collect()),
                Severity::Awareness => newest(g.remote.clone()),
            };
            ConflictReport {
                path_id: g.key.id(),
                path: g.key,
                severity,
                local_kinds,
                remote_authors,
                remote_kinds,
                plumbing,
                decoration_span,
            }
        })
        .collect();
    reports.sort_by(|a, b| (&a.path_id, &a.path).cmp(&(&b.path_id, &b.path)));
    reports
}

/// Per-author result of replaying accepted deltas in order: a delta on a
/// newer base discards what came before, re-delivered sequence numbers are
/// skipped, and one consolidation runs at the end.
pub fn replay_deltas(deltas: &[ChangeSet]) -> BTreeMap<MemberId, ChangeSet> {
    let mut raw: BTreeMap<MemberId, (ChangeSet, BTreeSet<u64>)> = BTreeMap::new();
    for delta in deltas {
        let (set, seen) = raw
            .entry(delta.author.clone())
            .or_insert_with(|| (ChangeSet::new(delta.author.clone(), delta.base_revision), BTreeSet::new()));
        if delta.base_revision > set.base_revision {
            set.base_revision = delta.base_revision;
            set.changes.clear();
        }
        for c in &delta.changes {
            if seen.insert(c.seq) {
                set.changes.push(c.clone());
            }
        }
    }
    raw.into_iter().map(|(author, (set, _))| (author, consolidate(&set))).collect()
}
