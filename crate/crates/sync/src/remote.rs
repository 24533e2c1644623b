//! A workspace's view of the other members' change sets.

use std::collections::BTreeMap;

use conflict_radar_core::detect::{detect_with, version_gate, DetectOptions, GateDecision};
use conflict_radar_core::distill::{rename_aliases, FoldOutcome, MemberChanges, RenameAlias};
use conflict_radar_core::model::{ChangeSet, ConflictReport, MemberId, RevisionStamp};

use crate::protocol::WireMessage;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applied {
    Folded(FoldOutcome),
    Purged,
    Replaced,
    /// The delta is based on an older revision than this workspace.
    Rejected,
    Ignored,
}

impl Applied {
    /// Whether remote state may have changed.
    pub fn changed(self) -> bool {
        matches!(
            self,
            Applied::Folded(FoldOutcome::Applied | FoldOutcome::Rebased) | Applied::Purged | Applied::Replaced
        )
    }
}

#[derive(Debug, Clone)]
pub struct RemoteState {
    local_author: MemberId,
    local_base: RevisionStamp,
    members: BTreeMap<MemberId, MemberChanges>,
}

impl RemoteState {
    pub fn new(local_author: MemberId, local_base: RevisionStamp) -> Self {
        RemoteState { local_author, local_base, members: BTreeMap::new() }
    }

    pub fn set_local_base(&mut self, base: RevisionStamp) {
        self.local_base = base;
    }

    pub fn apply(&mut self, message: &WireMessage) -> Applied {
        match message {
            WireMessage::Welcome { snapshot, .. } => {
                self.members = snapshot
                    .iter()
                    .filter(|m| m.change_set.author != self.local_author)
                    .map(|m| (m.change_set.author.clone(), m.clone()))
                    .collect();
                Applied::Replaced
            }
            WireMessage::Broadcast { author, change_set_delta } => {
                if *author == self.local_author {
                    return Applied::Ignored;
                }
                if version_gate(change_set_delta, self.local_base) == GateDecision::Rejected {
                    return Applied::Rejected;
                }
                let entry = self
                    .members
                    .entry(author.clone())
                    .or_insert_with(|| MemberChanges::new(author.clone(), change_set_delta.base_revision));
                Applied::Folded(entry.fold(change_set_delta))
            }
            WireMessage::Revert { author, file_path } => match self.members.get_mut(author) {
                Some(m) if *author != self.local_author => {
                    m.purge_file(file_path);
                    Applied::Purged
                }
                _ => Applied::Ignored,
            },
            _ => Applied::Ignored,
        }
    }

    pub fn member(&self, author: &MemberId) -> Option<&MemberChanges> {
        self.members.get(author)
    }

    pub fn remote_sets(&self) -> Vec<ChangeSet> {
        self.members.values().map(|m| m.change_set.clone()).collect()
    }

    pub fn aliases(&self) -> Vec<RenameAlias> {
        self.members.values().flat_map(|m| rename_aliases(&m.change_set)).collect()
    }

    pub fn detect(&self, local: &ChangeSet, options: DetectOptions) -> Vec<ConflictReport> {
        detect_with(local, &self.remote_sets(), &self.aliases(), options)
    }
}

/// Applies an incoming message and, when remote state changed, recomputes
/// the local reports.
pub fn client_apply(
    state: &mut RemoteState,
    message: &WireMessage,
    local: &ChangeSet,
    options: DetectOptions,
) -> (Applied, Option<Vec<ConflictReport>>) {
    let applied = state.apply(message);
    let reports = applied.changed().then(|| state.detect(local, options));
    (applied, reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use conflict_radar_core::distill::{extract_changes, ChangeContext};
    use conflict_radar_core::model::Severity;
    use conflict_radar_core::syntax::parse_unit;

    const BASE: &str = "class Zebra { int stripeCount; void m() { } void k() { } }";

    fn edit(author: &str, new: &str, first_seq: u64) -> ChangeSet {
        let ctx = ChangeContext { first_seq, ..ChangeContext::new("Zoo", author, RevisionStamp(1)) };
        extract_changes(&parse_unit(BASE, "Zebra.java").unwrap(), &parse_unit(new, "Zebra.java").unwrap(), &ctx).unwrap()
    }

    fn broadcast(delta: &ChangeSet) -> WireMessage {
        WireMessage::Broadcast { author: delta.author.clone(), change_set_delta: delta.clone() }
    }

    #[test]
    fn body_edit_on_both_sides_conflicts() {
        let mut state = RemoteState::new("alice".into(), RevisionStamp(1));
        let local = edit("alice", "class Zebra { int stripeCount; void m() { a(); } void k() { } }", 0);
        let remote = edit("bob", "class Zebra { int stripeCount; void m() { b(); } void k() { } }", 0);
        let (applied, reports) = client_apply(&mut state, &broadcast(&remote), &local, DetectOptions::default());
        assert_eq!(applied, Applied::Folded(FoldOutcome::Applied));
        let reports = reports.unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].severity, Severity::Conflict);
        assert_eq!(reports[0].path_id, "Zoo/Zebra.java/Zebra/m");
    }

    #[test]
    fn duplicate_delivery_changes_nothing() {
        let mut state = RemoteState::new("alice".into(), RevisionStamp(1));
        let local = ChangeSet::new("alice".into(), RevisionStamp(1));
        let remote = edit("bob", "class Zebra { int stripeCount; void m() { b(); } void k() { } }", 0);
        let (_, first) = client_apply(&mut state, &broadcast(&remote), &local, DetectOptions::default());
        let before = state.remote_sets();
        let (applied, again) = client_apply(&mut state, &broadcast(&remote), &local, DetectOptions::default());
        assert_eq!(applied, Applied::Folded(FoldOutcome::Duplicate));
        assert!(again.is_none());
        assert_eq!(state.remote_sets(), before);
        assert_eq!(state.detect(&local, DetectOptions::default()), first.unwrap());
    }

    #[test]
    fn revert_clears_reports_for_the_file() {
        let mut state = RemoteState::new("alice".into(), RevisionStamp(1));
        let local = ChangeSet::new("alice".into(), RevisionStamp(1));
        let remote = edit("bob", "class Zebra { int stripes; void m() { b(); } void k() { } }", 0);
        client_apply(&mut state, &broadcast(&remote), &local, DetectOptions::default());
        let revert = WireMessage::Revert { author: "bob".into(), file_path: "Zebra.java".into() };
        let (applied, reports) = client_apply(&mut state, &revert, &local, DetectOptions::default());
        assert_eq!(applied, Applied::Purged);
        assert!(reports.unwrap().is_empty());
    }

    #[test]
    fn older_base_is_rejected_locally() {
        let mut state = RemoteState::new("alice".into(), RevisionStamp(2));
        let local = ChangeSet::new("alice".into(), RevisionStamp(2));
        let remote = edit("bob", "class Zebra { int stripes; void m() { } void k() { } }", 0);
        let (applied, reports) = client_apply(&mut state, &broadcast(&remote), &local, DetectOptions::default());
        assert_eq!(applied, Applied::Rejected);
        assert!(reports.is_none());
        assert!(state.remote_sets().is_empty());
    }

    #[test]
    fn own_echo_and_welcome() {
        let mut state = RemoteState::new("alice".into(), RevisionStamp(1));
        let mine = edit("alice", "class Zebra { int stripes; void m() { } void k() { } }", 0);
        assert_eq!(state.apply(&broadcast(&mine)), Applied::Ignored);
        let theirs = edit("bob", "class Zebra { int stripes; void m() { } void k() { } }", 0);
        let mut bob = MemberChanges::new("bob".into(), RevisionStamp(1));
        bob.fold(&theirs);
        let mut me = MemberChanges::new("alice".into(), RevisionStamp(1));
        me.fold(&mine);
        let welcome = WireMessage::Welcome { session_id: "s".into(), base_revision: RevisionStamp(1), snapshot: vec![me, bob.clone()] };
        assert_eq!(state.apply(&welcome), Applied::Replaced);
        assert_eq!(state.remote_sets(), vec![bob.change_set]);
        assert_eq!(state.aliases().len(), 1);
    }
}
