//! Semantic paths, change records and conflict reports.
//!
//! Changes are lightweight metadata entries rather than tree diffs: every
//! change names the element it touched by a [`SemanticPath`] and carries
//! only the attribute values that kind of change needs.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::{Fingerprint, Span};

/// Self-declared workspace member identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MemberId(pub String);

impl MemberId {
    pub fn new(id: impl Into<String>) -> Self {
        MemberId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for MemberId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<String> for MemberId {
    fn from(s: String) -> Self {
        MemberId(s)
    }
}

impl From<&str> for MemberId {
    fn from(s: &str) -> Self {
        MemberId(s.to_string())
    }
}

/// SCM revision a workspace was synchronized to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RevisionStamp(pub u64);

impl fmt::Display for RevisionStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MemberRef {
    Field { name: String },
    Method { name: String, arity: usize },
}

impl MemberRef {
    pub fn name(&self) -> &str {
        match self {
            MemberRef::Field { name } | MemberRef::Method { name, .. } => name,
        }
    }

    pub fn with_name(&self, new_name: &str) -> MemberRef {
        match self {
            MemberRef::Field { .. } => MemberRef::Field { name: new_name.to_string() },
            MemberRef::Method { arity, .. } => MemberRef::Method { name: new_name.to_string(), arity: *arity },
        }
    }
}

/// Structured name of a project element. Structural equality is the
/// identity used for matching; [`SemanticPath::id`] is for display.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SemanticPath {
    pub project: String,
    pub file: String,
    pub class_chain: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub member: Option<MemberRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
}

impl SemanticPath {
    pub fn class(project: impl Into<String>, file: impl Into<String>, chain: &[&str]) -> Self {
        SemanticPath {
            project: project.into(),
            file: file.into(),
            class_chain: chain.iter().map(|s| s.to_string()).collect(),
            member: None,
            param: None,
        }
    }

    pub fn field(&self, name: &str) -> Self {
        SemanticPath { member: Some(MemberRef::Field { name: name.into() }), param: None, ..self.class_only() }
    }

    pub fn method(&self, name: &str, arity: usize) -> Self {
        SemanticPath { member: Some(MemberRef::Method { name: name.into(), arity }), param: None, ..self.class_only() }
    }

    pub fn nested(&self, class: &str) -> Self {
        let mut path = self.class_only();
        path.class_chain.push(class.into());
        path
    }

    /// Parameter path under this method path.
    pub fn param(&self, name: &str) -> Self {
        debug_assert!(matches!(self.member, Some(MemberRef::Method { .. })));
        SemanticPath { param: Some(name.into()), ..self.clone() }
    }

    pub fn class_only(&self) -> Self {
        SemanticPath { member: None, param: None, ..self.clone() }
    }

    /// The member-level path, dropping any parameter segment.
    pub fn member_path(&self) -> Self {
        SemanticPath { param: None, ..self.clone() }
    }

    pub fn is_well_formed(&self) -> bool {
        !self.class_chain.is_empty()
            && (self.param.is_none() || matches!(self.member, Some(MemberRef::Method { .. })))
    }

    /// True when `self` equals `ancestor` or lies underneath it.
    pub fn is_within(&self, ancestor: &SemanticPath) -> bool {
        if self.project != ancestor.project || self.file != ancestor.file {
            return false;
        }
        if !self.class_chain.starts_with(&ancestor.class_chain) {
            return false;
        }
        match (&ancestor.member, &ancestor.param) {
            (None, _) => true,
            (Some(m), None) => self.class_chain.len() == ancestor.class_chain.len() && self.member.as_ref() == Some(m),
            (Some(_), Some(_)) => self == ancestor,
        }
    }

    /// Rendered path id: segments joined by '/', arity omitted.
    pub fn id(&self) -> String {
        render_path_id(self)
    }
}

impl fmt::Display for SemanticPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_path_id(self))
    }
}

pub fn render_path_id(path: &SemanticPath) -> String {
    let mut segments: Vec<&str> = vec![path.project.as_str(), path.file.as_str()];
    segments.extend(path.class_chain.iter().map(String::as_str));
    if let Some(member) = &path.member {
        segments.push(member.name());
    }
    if let Some(param) = &path.param {
        segments.push(param);
    }
    segments.join("/")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChangeKind {
    MethodBodyChanged,
    MethodRenamed,
    MethodReturnTypeChanged,
    MethodAccessibilityChanged,
    ParamRenamed,
    ParamTypeChanged,
    ParamAdded,
    ParamRemoved,
    FieldRenamed,
    FieldTypeChanged,
    FieldValueChanged,
    FieldAccessibilityChanged,
    ElementAdded,
    ElementRemoved,
    ModifierSetChanged,
}

/// Which attribute of an element a change touches. Consolidation keeps one
/// net change per (path, group).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttributeGroup {
    Existence,
    Name,
    Type,
    Value,
    Access,
    Modifiers,
    Body,
}

impl ChangeKind {
    pub const ALL: [ChangeKind; 15] = [
        ChangeKind::MethodBodyChanged,
        ChangeKind::MethodRenamed,
        ChangeKind::MethodReturnTypeChanged,
        ChangeKind::MethodAccessibilityChanged,
        ChangeKind::ParamRenamed,
        ChangeKind::ParamTypeChanged,
        ChangeKind::ParamAdded,
        ChangeKind::ParamRemoved,
        ChangeKind::FieldRenamed,
        ChangeKind::FieldTypeChanged,
        ChangeKind::FieldValueChanged,
        ChangeKind::FieldAccessibilityChanged,
        ChangeKind::ElementAdded,
        ChangeKind::ElementRemoved,
        ChangeKind::ModifierSetChanged,
    ];

    /// The twelve fine-grained method/field conflict kinds.
    pub const TAXONOMY: [ChangeKind; 12] = [
        ChangeKind::MethodBodyChanged,
        ChangeKind::MethodRenamed,
        ChangeKind::MethodReturnTypeChanged,
        ChangeKind::MethodAccessibilityChanged,
        ChangeKind::ParamRenamed,
        ChangeKind::ParamTypeChanged,
        ChangeKind::ParamAdded,
        ChangeKind::ParamRemoved,
        ChangeKind::FieldRenamed,
        ChangeKind::FieldTypeChanged,
        ChangeKind::FieldValueChanged,
        ChangeKind::FieldAccessibilityChanged,
    ];

    pub fn is_plumbing(self) -> bool {
        matches!(self, ChangeKind::ElementAdded | ChangeKind::ElementRemoved | ChangeKind::ModifierSetChanged)
    }

    pub fn is_rename(self) -> bool {
        matches!(self, ChangeKind::MethodRenamed | ChangeKind::FieldRenamed | ChangeKind::ParamRenamed)
    }

    pub fn group(self) -> AttributeGroup {
        use ChangeKind::*;
        match self {
            ElementAdded | ElementRemoved | ParamAdded | ParamRemoved => AttributeGroup::Existence,
            MethodRenamed | FieldRenamed | ParamRenamed => AttributeGroup::Name,
            MethodReturnTypeChanged | FieldTypeChanged | ParamTypeChanged => AttributeGroup::Type,
            FieldValueChanged => AttributeGroup::Value,
            MethodAccessibilityChanged | FieldAccessibilityChanged => AttributeGroup::Access,
            ModifierSetChanged => AttributeGroup::Modifiers,
            MethodBodyChanged => AttributeGroup::Body,
        }
    }

    pub fn name(self) -> &'static str {
        use ChangeKind::*;
        match self {
            MethodBodyChanged => "MethodBodyChanged",
            MethodRenamed => "MethodRenamed",
            MethodReturnTypeChanged => "MethodReturnTypeChanged",
            MethodAccessibilityChanged => "MethodAccessibilityChanged",
            ParamRenamed => "ParamRenamed",
            ParamTypeChanged => "ParamTypeChanged",
            ParamAdded => "ParamAdded",
            ParamRemoved => "ParamRemoved",
            FieldRenamed => "FieldRenamed",
            FieldTypeChanged => "FieldTypeChanged",
            FieldValueChanged => "FieldValueChanged",
            FieldAccessibilityChanged => "FieldAccessibilityChanged",
            ElementAdded => "ElementAdded",
            ElementRemoved => "ElementRemoved",
            ModifierSetChanged => "ModifierSetChanged",
        }
    }
}

impl fmt::Display for ChangeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One edit to one attribute of one semantic element.
///
/// Rename kinds carry the old and new name in `old_value`/`new_value`.
/// `MethodBodyChanged` carries no values; its before/after fingerprints
/// live in `old_fingerprint`/`new_fingerprint`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SemanticChange {
    pub kind: ChangeKind,
    pub path: SemanticPath,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_fingerprint: Option<Fingerprint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_fingerprint: Option<Fingerprint>,
    pub author: MemberId,
    pub base_revision: RevisionStamp,
    pub seq: u64,
    pub at_millis: u64,
    pub decoration_span: Span,
}

impl SemanticChange {
    /// The attribute value before the change, with body fingerprints
    /// standing in for the value of body changes.
    pub fn before(&self) -> Option<String> {
        match self.kind {
            ChangeKind::MethodBodyChanged => self.old_fingerprint.map(|f| f.to_string()),
            _ => self.old_value.clone(),
        }
    }

    pub fn after(&self) -> Option<String> {
        match self.kind {
            ChangeKind::MethodBodyChanged => self.new_fingerprint.map(|f| f.to_string()),
            _ => self.new_value.clone(),
        }
    }
}

/// An author's ordered collection of changes since `base_revision`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChangeSet {
    pub author: MemberId,
    pub base_revision: RevisionStamp,
    pub changes: Vec<SemanticChange>,
}

impl ChangeSet {
    pub fn new(author: MemberId, base_revision: RevisionStamp) -> Self {
        ChangeSet { author, base_revision, changes: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.changes.len()
    }

    pub fn max_seq(&self) -> Option<u64> {
        self.changes.iter().map(|c| c.seq).max()
    }

    /// Canonical JSON (stable key order, compact).
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("change sets always serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    /// Changed remotely only.
    Awareness,
    /// Changed concurrently on both sides.
    Conflict,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Awareness => "Awareness",
            Severity::Conflict => "Conflict",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConflictReport {
    pub path_id: String,
    pub path: SemanticPath,
    pub severity: Severity,
    pub local_kinds: BTreeSet<ChangeKind>,
    pub remote_authors: BTreeSet<MemberId>,
    pub remote_kinds: BTreeSet<ChangeKind>,
    /// Every involved kind is a plumbing kind (added/removed/modifier set).
    pub plumbing: bool,
    pub decoration_span: Span,
}

impl ConflictReport {
    pub fn is_consistent(&self) -> bool {
        match self.severity {
            Severity::Awareness => self.local_kinds.is_empty() && !self.remote_authors.is_empty(),
            Severity::Conflict => !self.local_kinds.is_empty() && !self.remote_authors.is_empty(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zoo_zebra_path_id() {
        let path = SemanticPath::class("Zoo", "Zebra.java", &["Zebra"]).field("stripeCount");
        assert_eq!(render_path_id(&path), "Zoo/Zebra.java/Zebra/stripeCount");
    }

    #[test]
    fn param_path_drops_outer_slashes() {
        let path = SemanticPath::class("project", "fileName", &["className"]).method("methodName", 1).param("paramName");
        assert_eq!(path.id(), "project/fileName/className/methodName/paramName");
    }

    #[test]
    fn nested_class_method_keeps_file_directories() {
        let path = SemanticPath::class("P", "a/B.java", &["B", "Inner"]).method("m", 1);
        // Oracle: the join rule applied by hand.
        let expected = ["P", "a/B.java", "B", "Inner", "m"].join("/");
        assert_eq!(path.id(), expected);
        assert_eq!(path.id(), "P/a/B.java/B/Inner/m");
    }

    #[test]
    fn overloads_share_rendered_id_but_not_identity() {
        let class = SemanticPath::class("P", "A.java", &["A"]);
        let (m0, m1) = (class.method("m", 0), class.method("m", 1));
        assert_eq!(m0.id(), m1.id());
        assert_ne!(m0, m1);
    }

    #[test]
    fn containment() {
        let class = SemanticPath::class("P", "A.java", &["A"]);
        let m = class.method("m", 1);
        assert!(m.param("x").is_within(&m));
        assert!(m.is_within(&class));
        assert!(!class.is_within(&m));
        assert!(!class.method("n", 1).is_within(&m));
        assert!(class.nested("B").method("m", 1).is_within(&class));
        assert!(!class.nested("B").method("m", 1).is_within(&m));
    }

    #[test]
    fn well_formedness() {
        let class = SemanticPath::class("P", "A.java", &["A"]);
        assert!(class.method("m", 1).param("x").is_well_formed());
        let bad = SemanticPath { param: Some("x".into()), ..class.field("f") };
        assert!(!bad.is_well_formed());
        assert!(!SemanticPath::class("P", "A.java", &[]).is_well_formed());
    }

    #[test]
    fn json_field_names() {
        let path = SemanticPath::class("Zoo", "Zebra.java", &["Zebra"]).method("run", 2);
        let json = serde_json::to_string(&path).unwrap();
        assert_eq!(
            json,
            r#"{"project":"Zoo","file":"Zebra.java","classChain":["Zebra"],"member":{"kind":"method","name":"run","arity":2}}"#
        );
    }

    fn arb_path() -> impl Strategy<Value = SemanticPath> {
        (
            "[A-Z][a-z]{0,4}",
            "[a-z]{1,3}(/[a-z]{1,3}){0,2}\\.java",
            prop::collection::vec("[A-Z][a-z]{0,3}", 1..3),
            prop::option::of(prop_oneof![
                "[a-z]{1,4}".prop_map(|name| MemberRef::Field { name }),
                ("[a-z]{1,4}", 0usize..4).prop_map(|(name, arity)| MemberRef::Method { name, arity }),
            ]),
            prop::option::of("[a-z]{1,3}"),
        )
            .prop_map(|(project, file, class_chain, member, param)| {
                let param = param.filter(|_| matches!(member, Some(MemberRef::Method { .. })));
                SemanticPath { project, file, class_chain, member, param }
            })
    }

    fn arb_change() -> impl Strategy<Value = SemanticChange> {
        (
            prop::sample::select(ChangeKind::ALL.to_vec()),
            arb_path(),
            prop::option::of("[a-z ]{0,6}"),
            prop::option::of("[a-z ]{0,6}"),
            prop::option::of(any::<u64>()),
            (any::<u64>(), any::<u64>(), 0u64..1_000_000, 0usize..1000),
        )
            .prop_map(|(kind, path, old_value, new_value, fp, (base, seq, at, off))| SemanticChange {
                kind,
                path,
                old_value,
                new_value,
                old_fingerprint: fp.map(Fingerprint),
                new_fingerprint: fp.map(|f| Fingerprint(f ^ 1)),
                author: MemberId::new("alice"),
                base_revision: RevisionStamp(base),
                seq,
                at_millis: at,
                decoration_span: Span { start_byte: off, end_byte: off + 3, start_line: 1, start_col: 1 + off as u32, end_line: 1, end_col: 4 + off as u32 },
            })
    }

    proptest! {
        #[test]
        fn change_set_round_trips(changes in prop::collection::vec(arb_change(), 0..8), base in any::<u64>()) {
            let set = ChangeSet { author: MemberId::new("alice"), base_revision: RevisionStamp(base), changes };
            let json = set.to_canonical_json();
            let back: ChangeSet = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(&back, &set);
            prop_assert_eq!(back.to_canonical_json(), json);
        }

        #[test]
        fn rendered_ids_agree_with_structure_up_to_member_kind(a in arb_path(), b in arb_path()) {
            // Class names never end in ".java" or start lowercase here, so the
            // rendered form only loses the member kind and arity.
            let same_id = a.id() == b.id();
            let same_names = a.project == b.project
                && a.file == b.file
                && a.class_chain == b.class_chain
                && a.member.as_ref().map(MemberRef::name) == b.member.as_ref().map(MemberRef::name)
                && a.param == b.param;
            prop_assert_eq!(same_id, same_names);
            if a == b {
                prop_assert!(same_id);
            }
        }
    }
}
