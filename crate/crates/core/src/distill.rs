//! Distilling semantic changes out of two element trees, consolidating
//! them to their net effect, and tracking element identities across
//! successive edit bursts.
//!
//! Paths in the output of [`extract_changes`] name elements as they were in
//! the *old* tree, except [`ChangeKind::ElementAdded`], which names the new
//! element. [`IdentityMap`] rewrites burst paths to the identity each element
//! had at the base revision, so that a change set accumulated over many
//! bursts uses one stable key per element.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    AttributeGroup, ChangeKind, ChangeSet, MemberId, MemberRef, RevisionStamp, SemanticChange, SemanticPath,
};
use crate::syntax::{ClassDecl, ElementTree, FieldDecl, Fingerprint, MethodDecl, Position, Span};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistillError {
    #[error("cannot diff {old} against {new}: trees belong to different files")]
    MismatchedFile { old: String, new: String },
}

/// Stamping information applied to every change a diff produces.
#[derive(Debug, Clone)]
pub struct ChangeContext {
    pub project: String,
    pub author: MemberId,
    pub base_revision: RevisionStamp,
    /// Sequence number of the first emitted change; later ones count up.
    pub first_seq: u64,
    pub at_millis: u64,
}

impl ChangeContext {
    pub fn new(project: impl Into<String>, author: impl Into<MemberId>, base_revision: RevisionStamp) -> Self {
        ChangeContext {
            project: project.into(),
            author: author.into(),
            base_revision,
            first_seq: 0,
            at_millis: 0,
        }
    }
}

/// Old path and new path of a renamed element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RenameAlias {
    pub old_path: SemanticPath,
    pub new_path: SemanticPath,
    pub author: MemberId,
}

struct Emitter<'a> {
    ctx: &'a ChangeContext,
    file: &'a str,
    out: Vec<SemanticChange>,
}

impl Emitter<'_> {
    fn class_path(&self, chain: &[String]) -> SemanticPath {
        SemanticPath {
            project: self.ctx.project.clone(),
            file: self.file.to_string(),
            class_chain: chain.to_vec(),
            member: None,
            param: None,
        }
    }

    fn push(
        &mut self,
        kind: ChangeKind,
        path: SemanticPath,
        old_value: Option<String>,
        new_value: Option<String>,
        decoration_span: Span,
    ) {
        self.push_full(kind, path, old_value, new_value, None, None, decoration_span);
    }

    #[allow(clippy::too_many_arguments)]
    fn push_full(
        &mut self,
        kind: ChangeKind,
        path: SemanticPath,
        old_value: Option<String>,
        new_value: Option<String>,
        old_fingerprint: Option<Fingerprint>,
        new_fingerprint: Option<Fingerprint>,
        decoration_span: Span,
    ) {
        let seq = self.ctx.first_seq + self.out.len() as u64;
        self.out.push(SemanticChange {
            kind,
            path,
            old_value,
            new_value,
            old_fingerprint,
            new_fingerprint,
            author: self.ctx.author.clone(),
            base_revision: self.ctx.base_revision,
            seq,
            at_millis: self.ctx.at_millis,
            decoration_span,
        });
    }
}

fn modifier_text(set: &std::collections::BTreeSet<String>) -> String {
    set.iter().map(String::as_str).collect::<Vec<_>>().join(" ")
}

fn field_summary(f: &FieldDecl) -> String {
    format!("{} {}", f.type_text, f.name)
}

fn method_summary(m: &MethodDecl) -> String {
    let params = m.params.iter().map(|p| format!("{} {}", p.type_text, p.name)).collect::<Vec<_>>().join(", ");
    match &m.return_type {
        Some(rt) => format!("{rt} {}({params})", m.name),
        None => format!("{}({params})", m.name),
    }
}

/// Diffs two trees of the same file into a change set.
pub fn extract_changes(old: &ElementTree, new: &ElementTree, ctx: &ChangeContext) -> Result<ChangeSet, DistillError> {
    if old.file_path != new.file_path {
        return Err(DistillError::MismatchedFile { old: old.file_path.clone(), new: new.file_path.clone() });
    }
    let mut em = Emitter { ctx, file: &new.file_path, out: Vec::new() };
    let file_start = Span::point(Position::START);
    diff_class_lists(&mut em, &[], &old.classes, &new.classes, file_start);
    Ok(ChangeSet { author: ctx.author.clone(), base_revision: ctx.base_revision, changes: em.out })
}

fn diff_class_lists(em: &mut Emitter<'_>, chain: &[String], old: &[ClassDecl], new: &[ClassDecl], removal_span: Span) {
    for o in old {
        let mut sub = chain.to_vec();
        sub.push(o.name.clone());
        match new.iter().find(|n| n.name == o.name) {
            Some(n) => diff_class(em, &sub, o, n),
            None => {
                let path = em.class_path(&sub);
                em.push(ChangeKind::ElementRemoved, path, Some(format!("class {}", o.name)), None, removal_span);
            }
        }
    }
    for n in new.iter().filter(|n| !old.iter().any(|o| o.name == n.name)) {
        let mut sub = chain.to_vec();
        sub.push(n.name.clone());
        let path = em.class_path(&sub);
        em.push(ChangeKind::ElementAdded, path, None, Some(format!("class {}", n.name)), n.name_span);
    }
}

/// Pairs old and new items: exact key matches first, then each rule in
/// `fallbacks` in turn over the leftovers. Ties go to the first unmatched old
/// item and the first qualifying new item in source order.
fn pair_up<T>(
    old: &[T],
    new: &[T],
    exact: impl Fn(&T, &T) -> bool,
    fallbacks: &[&dyn Fn(&T, &T) -> bool],
) -> (Vec<(usize, usize)>, Vec<usize>, Vec<usize>) {
    let mut old_used = vec![false; old.len()];
    let mut new_used = vec![false; new.len()];
    let mut pairs = Vec::new();
    let rules: Vec<&dyn Fn(&T, &T) -> bool> = std::iter::once(&exact as &dyn Fn(&T, &T) -> bool).chain(fallbacks.iter().copied()).collect();
    for rule in rules {
        for (i, o) in old.iter().enumerate() {
            if old_used[i] {
                continue;
            }
            if let Some(j) = (0..new.len()).find(|&j| !new_used[j] && rule(o, &new[j])) {
                old_used[i] = true;
                new_used[j] = true;
                pairs.push((i, j));
            }
        }
    }
    pairs.sort();
    let removed = (0..old.len()).filter(|&i| !old_used[i]).collect();
    let added = (0..new.len()).filter(|&j| !new_used[j]).collect();
    (pairs, removed, added)
}

fn diff_class(em: &mut Emitter<'_>, chain: &[String], old: &ClassDecl, new: &ClassDecl) {
    let class_path = em.class_path(chain);

    // Fields: by name, then rename when type and initializer are unchanged.
    let (pairs, removed, added) = pair_up(
        &old.fields,
        &new.fields,
        |o, n| o.name == n.name,
        &[&|o: &FieldDecl, n: &FieldDecl| o.type_text == n.type_text && o.initializer == n.initializer],
    );
    for (i, j) in pairs {
        diff_field(em, &class_path, &old.fields[i], &new.fields[j]);
    }
    for i in removed {
        let f = &old.fields[i];
        em.push(ChangeKind::ElementRemoved, class_path.field(&f.name), Some(field_summary(f)), None, new.name_span);
    }
    for j in added {
        let f = &new.fields[j];
        em.push(ChangeKind::ElementAdded, class_path.field(&f.name), None, Some(field_summary(f)), f.name_span);
    }

    // Methods: by (name, arity); then rename with identical signature types
    // and body; then same name with a different arity.
    let (pairs, removed, added) = pair_up(
        &old.methods,
        &new.methods,
        |o, n| o.name == n.name && o.arity() == n.arity(),
        &[
            &|o: &MethodDecl, n: &MethodDecl| {
                o.return_type == n.return_type
                    && o.body_fingerprint == n.body_fingerprint
                    && o.param_types().eq(n.param_types())
            },
            &|o: &MethodDecl, n: &MethodDecl| o.name == n.name,
        ],
    );
    for (i, j) in pairs {
        diff_method(em, &class_path, &old.methods[i], &new.methods[j]);
    }
    for i in removed {
        let m = &old.methods[i];
        em.push(ChangeKind::ElementRemoved, class_path.method(&m.name, m.arity()), Some(method_summary(m)), None, new.name_span);
    }
    for j in added {
        let m = &new.methods[j];
        em.push(ChangeKind::ElementAdded, class_path.method(&m.name, m.arity()), None, Some(method_summary(m)), m.name_span);
    }

    diff_class_lists(em, chain, &old.classes, &new.classes, new.name_span);
}

fn access_or_modifier_span(modifiers_span: Option<Span>, name_span: Span) -> Span {
    modifiers_span.unwrap_or(name_span)
}

fn diff_field(em: &mut Emitter<'_>, class_path: &SemanticPath, old: &FieldDecl, new: &FieldDecl) {
    let path = class_path.field(&old.name);
    if old.name != new.name {
        em.push(ChangeKind::FieldRenamed, path.clone(), Some(old.name.clone()), Some(new.name.clone()), new.name_span);
    }
    if old.type_text != new.type_text {
        em.push(ChangeKind::FieldTypeChanged, path.clone(), Some(old.type_text.clone()), Some(new.type_text.clone()), new.type_span);
    }
    if old.initializer != new.initializer {
        let span = new.initializer_span.unwrap_or(new.name_span);
        em.push(ChangeKind::FieldValueChanged, path.clone(), old.initializer.clone(), new.initializer.clone(), span);
    }
    if old.accessibility != new.accessibility {
        em.push(
            ChangeKind::FieldAccessibilityChanged,
            path.clone(),
            Some(old.accessibility.keyword().into()),
            Some(new.accessibility.keyword().into()),
            access_or_modifier_span(new.modifiers_span, new.name_span),
        );
    }
    if old.modifiers != new.modifiers {
        em.push(
            ChangeKind::ModifierSetChanged,
            path,
            Some(modifier_text(&old.modifiers)),
            Some(modifier_text(&new.modifiers)),
            access_or_modifier_span(new.modifiers_span, new.name_span),
        );
    }
}

fn diff_method(em: &mut Emitter<'_>, class_path: &SemanticPath, old: &MethodDecl, new: &MethodDecl) {
    let path = class_path.method(&old.name, old.arity());
    if old.name != new.name {
        em.push(ChangeKind::MethodRenamed, path.clone(), Some(old.name.clone()), Some(new.name.clone()), new.name_span);
    }
    if old.return_type != new.return_type {
        em.push(
            ChangeKind::MethodReturnTypeChanged,
            path.clone(),
            old.return_type.clone(),
            new.return_type.clone(),
            new.return_type_span.unwrap_or(new.name_span),
        );
    }
    if old.accessibility != new.accessibility {
        em.push(
            ChangeKind::MethodAccessibilityChanged,
            path.clone(),
            Some(old.accessibility.keyword().into()),
            Some(new.accessibility.keyword().into()),
            access_or_modifier_span(new.modifiers_span, new.name_span),
        );
    }
    if old.modifiers != new.modifiers {
        em.push(
            ChangeKind::ModifierSetChanged,
            path.clone(),
            Some(modifier_text(&old.modifiers)),
            Some(modifier_text(&new.modifiers)),
            access_or_modifier_span(new.modifiers_span, new.name_span),
        );
    }
    if old.body_fingerprint != new.body_fingerprint {
        em.push_full(
            ChangeKind::MethodBodyChanged,
            path.clone(),
            None,
            None,
            old.body_fingerprint,
            new.body_fingerprint,
            new.body_span.unwrap_or(new.name_span),
        );
    }
    for (o, n) in old.params.iter().zip(&new.params) {
        let param_path = path.param(&o.name);
        if o.name != n.name {
            em.push(ChangeKind::ParamRenamed, param_path.clone(), Some(o.name.clone()), Some(n.name.clone()), n.name_span);
        }
        if o.type_text != n.type_text {
            em.push(ChangeKind::ParamTypeChanged, param_path, Some(o.type_text.clone()), Some(n.type_text.clone()), n.type_span);
        }
    }
    for n in new.params.iter().skip(old.arity()) {
        em.push(ChangeKind::ParamAdded, path.param(&n.name), None, Some(format!("{} {}", n.type_text, n.name)), n.span);
    }
    for o in old.params.iter().skip(new.arity()) {
        em.push(ChangeKind::ParamRemoved, path.param(&o.name), Some(format!("{} {}", o.type_text, o.name)), None, new.params_span);
    }
}

/// Collapses a change set to its net effect: one change per (path,
/// attribute group), carrying the group's original before-value and its
/// latest after-value, span, sequence number and timestamp. Groups whose net
/// effect is a no-op are dropped, as is everything under an element that was
/// both added and removed. Survivors keep the relative order of their latest
/// contributing change.
pub fn consolidate(set: &ChangeSet) -> ChangeSet {
    let mut ordered: Vec<&SemanticChange> = set.changes.iter().collect();
    ordered.sort_by_key(|c| c.seq);

    struct Acc {
        first: usize,
        last: usize,
    }
    let mut groups: Vec<Acc> = Vec::new();
    let mut index: HashMap<(&SemanticPath, AttributeGroup), usize> = HashMap::new();
    for (pos, change) in ordered.iter().enumerate() {
        match index.get(&(&change.path, change.kind.group())) {
            Some(&g) => groups[g].last = pos,
            None => {
                index.insert((&change.path, change.kind.group()), groups.len());
                groups.push(Acc { first: pos, last: pos });
            }
        }
    }

    let mut survivors: Vec<(usize, SemanticChange)> = Vec::new();
    let mut vanished: Vec<SemanticPath> = Vec::new();
    for acc in &groups {
        let first = ordered[acc.first];
        let mut net = ordered[acc.last].clone();
        net.old_value = first.old_value.clone();
        net.old_fingerprint = first.old_fingerprint;
        if net.kind.group() == AttributeGroup::Existence && net.old_value.is_none() && net.new_value.is_none() {
            vanished.push(net.path.clone());
            continue;
        }
        if net.before() == net.after() {
            continue;
        }
        survivors.push((acc.last, net));
    }
    survivors.retain(|(_, c)| !vanished.iter().any(|v| c.path.is_within(v)));
    survivors.sort_by_key(|(pos, _)| *pos);

    ChangeSet {
        author: set.author.clone(),
        base_revision: set.base_revision,
        changes: survivors.into_iter().map(|(_, c)| c).collect(),
    }
}

/// One alias per surviving rename.
pub fn rename_aliases(set: &ChangeSet) -> Vec<RenameAlias> {
    let arity_delta = |method: &SemanticPath| -> isize {
        set.changes
            .iter()
            .filter(|c| c.path.param.is_some() && c.path.member_path() == *method)
            .map(|c| match c.kind {
                ChangeKind::ParamAdded => 1,
                ChangeKind::ParamRemoved => -1,
                _ => 0,
            })
            .sum()
    };
    set.changes
        .iter()
        .filter(|c| c.kind.is_rename())
        .filter_map(|c| {
            let new_name = c.new_value.as_deref()?;
            let new_path = match c.kind {
                ChangeKind::ParamRenamed => SemanticPath { param: Some(new_name.to_string()), ..c.path.clone() },
                _ => {
                    let member = match c.path.member.as_ref()? {
                        MemberRef::Method { arity, .. } => MemberRef::Method {
                            name: new_name.to_string(),
                            arity: (*arity as isize + arity_delta(&c.path)).max(0) as usize,
                        },
                        m => m.with_name(new_name),
                    };
                    SemanticPath { member: Some(member), ..c.path.clone() }
                }
            };
            (new_path != c.path).then(|| RenameAlias { old_path: c.path.clone(), new_path, author: c.author.clone() })
        })
        .collect()
}

/// Maps each element's current identity back to the identity it had at the
/// base revision.
#[derive(Debug, Clone, Default)]
pub struct IdentityMap {
    members: HashMap<SemanticPath, SemanticPath>,
    params: HashMap<(SemanticPath, String), String>,
}

impl IdentityMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty() && self.params.is_empty()
    }

    fn member_canonical(&self, member_path: &SemanticPath) -> SemanticPath {
        self.members.get(member_path).cloned().unwrap_or_else(|| member_path.clone())
    }

    /// Base-revision identity for a path given in current identity.
    pub fn canonical(&self, path: &SemanticPath) -> SemanticPath {
        if path.member.is_none() {
            return path.clone();
        }
        let member = self.member_canonical(&path.member_path());
        match &path.param {
            None => member,
            Some(name) => {
                let canonical_param = self.params.get(&(member.clone(), name.clone())).cloned().unwrap_or_else(|| name.clone());
                member.param(&canonical_param)
            }
        }
    }

    /// Rewrites one burst (paths in pre-burst identity) to base identity and
    /// then records the identities the burst's renames and arity changes
    /// introduce.
    pub fn canonicalize(&mut self, burst: &ChangeSet) -> ChangeSet {
        let mut out = burst.clone();
        for change in &mut out.changes {
            if change.kind != ChangeKind::ElementAdded {
                change.path = self.canonical(&change.path);
            }
        }

        // New member identities: old identity -> (new name, arity delta).
        let mut renamed: HashMap<SemanticPath, (Option<String>, isize)> = HashMap::new();
        for change in &burst.changes {
            let member_path = change.path.member_path();
            match change.kind {
                ChangeKind::MethodRenamed | ChangeKind::FieldRenamed => {
                    renamed.entry(member_path).or_default().0 = change.new_value.clone();
                }
                ChangeKind::ParamAdded => renamed.entry(member_path).or_default().1 += 1,
                ChangeKind::ParamRemoved => renamed.entry(member_path).or_default().1 -= 1,
                _ => {}
            }
        }
        let mut updates = Vec::new();
        for (old_identity, (new_name, delta)) in renamed {
            let Some(member) = &old_identity.member else { continue };
            let name = new_name.as_deref().unwrap_or(member.name());
            let new_member = match member {
                MemberRef::Field { .. } => MemberRef::Field { name: name.to_string() },
                MemberRef::Method { arity, .. } => MemberRef::Method {
                    name: name.to_string(),
                    arity: (*arity as isize + delta).max(0) as usize,
                },
            };
            let new_identity = SemanticPath { member: Some(new_member), ..old_identity.clone() };
            let canonical = self.member_canonical(&old_identity);
            updates.push((old_identity, new_identity, canonical));
        }
        for (old_identity, _, _) in &updates {
            self.members.remove(old_identity);
        }
        for (_, new_identity, canonical) in updates {
            if new_identity != canonical {
                self.members.insert(new_identity, canonical);
            }
        }

        for (raw, translated) in burst.changes.iter().zip(&out.changes) {
            if raw.kind != ChangeKind::ParamRenamed {
                continue;
            }
            let (Some(old_name), Some(canonical_param), Some(new_name)) =
                (&raw.path.param, &translated.path.param, &raw.new_value)
            else {
                continue;
            };
            let member = translated.path.member_path();
            self.params.remove(&(member.clone(), old_name.clone()));
            if new_name != canonical_param {
                self.params.insert((member, new_name.clone()), canonical_param.clone());
            }
        }
        out
    }

    /// Drops identities recorded for `file`.
    pub fn forget_file(&mut self, file: &str) {
        self.members.retain(|k, _| k.file != file);
        self.params.retain(|(k, _), _| k.file != file);
    }
}

/// An author's accumulated change set on a replica, with the sequence
/// high-water mark used to ignore re-delivered changes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MemberChanges {
    pub change_set: ChangeSet,
    pub high_water: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldOutcome {
    Applied,
    /// Every change in the delta was already folded.
    Duplicate,
    /// The delta moved the author to a newer base revision.
    Rebased,
    /// The delta is based on an older revision than the stored set.
    Stale,
}

impl MemberChanges {
    pub fn new(author: MemberId, base_revision: RevisionStamp) -> Self {
        MemberChanges { change_set: ChangeSet::new(author, base_revision), high_water: None }
    }

    /// Folds a delta: drops changes at or below the high-water mark, appends
    /// the rest and consolidates. A delta on a newer base revision replaces
    /// the stored set.
    pub fn fold(&mut self, delta: &ChangeSet) -> FoldOutcome {
        if delta.base_revision < self.change_set.base_revision {
            return FoldOutcome::Stale;
        }
        let fresh: Vec<SemanticChange> =
            delta.changes.iter().filter(|c| self.high_water.is_none_or(|hw| c.seq > hw)).cloned().collect();
        let outcome = if delta.base_revision > self.change_set.base_revision {
            self.change_set = ChangeSet::new(delta.author.clone(), delta.base_revision);
            FoldOutcome::Rebased
        } else if fresh.is_empty() && !delta.changes.is_empty() {
            return FoldOutcome::Duplicate;
        } else {
            FoldOutcome::Applied
        };
        if let Some(max) = fresh.iter().map(|c| c.seq).max() {
            self.high_water = Some(self.high_water.map_or(max, |hw| hw.max(max)));
        }
        self.change_set.changes.extend(fresh);
        self.change_set = consolidate(&self.change_set);
        outcome
    }

    /// Removes every change recorded for `file`.
    pub fn purge_file(&mut self, file: &str) {
        self.change_set.changes.retain(|c| c.path.file != file);
    }
}

/// Span of the attribute a change of `kind` at `path` decorates in `tree`.
/// Falls back to the nearest enclosing element that still exists.
pub fn locate(tree: &ElementTree, path: &SemanticPath, kind: ChangeKind) -> Option<Span> {
    if tree.file_path != path.file {
        return None;
    }
    let class = match tree.class(&path.class_chain) {
        Some(c) => c,
        None => {
            let parent = path.class_chain.split_last().and_then(|(_, rest)| tree.class(rest));
            return parent.map(|c| c.name_span);
        }
    };
    let Some(member) = &path.member else { return Some(class.name_span) };
    match member {
        MemberRef::Field { name } => {
            let Some(f) = class.field(name) else { return Some(class.name_span) };
            Some(match kind {
                ChangeKind::FieldTypeChanged => f.type_span,
                ChangeKind::FieldValueChanged => f.initializer_span.unwrap_or(f.name_span),
                ChangeKind::FieldAccessibilityChanged | ChangeKind::ModifierSetChanged => {
                    access_or_modifier_span(f.modifiers_span, f.name_span)
                }
                _ => f.name_span,
            })
        }
        MemberRef::Method { name, arity } => {
            let Some(m) = class.method(name, *arity) else { return Some(class.name_span) };
            if let Some(param_name) = &path.param {
                let Some(p) = m.params.iter().find(|p| &p.name == param_name) else { return Some(m.params_span) };
                return Some(match kind {
                    ChangeKind::ParamRenamed => p.name_span,
                    ChangeKind::ParamTypeChanged => p.type_span,
                    _ => p.span,
                });
            }
            Some(match kind {
                ChangeKind::MethodBodyChanged => m.body_span.unwrap_or(m.name_span),
                ChangeKind::MethodReturnTypeChanged => m.return_type_span.unwrap_or(m.name_span),
                ChangeKind::MethodAccessibilityChanged | ChangeKind::ModifierSetChanged => {
                    access_or_modifier_span(m.modifiers_span, m.name_span)
                }
                _ => m.name_span,
            })
        }
    }
}
