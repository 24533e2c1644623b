//! Random detection inputs over a deliberately small path universe, so that
//! local and remote changes collide often.

use conflict_radar_core::distill::{rename_aliases, RenameAlias};
use conflict_radar_core::model::{ChangeKind, ChangeSet, MemberId, RevisionStamp, SemanticChange, SemanticPath};
use conflict_radar_core::syntax::{Fingerprint, Position, Span};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct DetectionInstance {
    pub local: ChangeSet,
    pub remotes: Vec<ChangeSet>,
    pub aliases: Vec<RenameAlias>,
}

const FIELDS: &[&str] = &["x", "y", "z"];
const METHODS: &[(&str, usize)] = &[("m", 0), ("m", 1), ("n", 1), ("k", 2)];
const PARAMS: &[&str] = &["a", "b"];
const VALUES: &[&str] = &["0", "1", "int", "long", "public", "private", "x", "y", "m", "n", "a", "b"];

fn random_path(rng: &mut impl Rng) -> SemanticPath {
    let file = *["A.java", "B.java"].choose(rng).unwrap();
    let class = SemanticPath::class("P", file, &[&file[..1]]);
    match rng.gen_range(0..10) {
        0 => class,
        1 => class.nested("Inner").field(FIELDS.choose(rng).unwrap()),
        2..=4 => class.field(FIELDS.choose(rng).unwrap()),
        5..=7 => {
            let (name, arity) = METHODS.choose(rng).unwrap();
            class.method(name, *arity)
        }
        _ => {
            let (name, arity) = METHODS.choose(rng).unwrap();
            class.method(name, *arity).param(PARAMS.choose(rng).unwrap())
        }
    }
}

fn kind_for(rng: &mut impl Rng, path: &SemanticPath) -> ChangeKind {
    use conflict_radar_core::model::MemberRef;
    use ChangeKind::*;
    let pool: &[ChangeKind] = match (&path.member, &path.param) {
        (None, _) => &[ElementAdded, ElementRemoved],
        (Some(_), Some(_)) => &[ParamRenamed, ParamTypeChanged, ParamAdded, ParamRemoved],
        (Some(MemberRef::Field { .. }), None) => &[
            FieldRenamed,
            FieldTypeChanged,
            FieldValueChanged,
            FieldAccessibilityChanged,
            ElementAdded,
            ElementRemoved,
            ModifierSetChanged,
        ],
        (Some(MemberRef::Method { .. }), None) => &[
            MethodBodyChanged,
            MethodRenamed,
            MethodReturnTypeChanged,
            MethodAccessibilityChanged,
            ElementAdded,
            ElementRemoved,
            ModifierSetChanged,
        ],
    };
    *pool.choose(rng).unwrap()
}

fn random_span(rng: &mut impl Rng) -> Span {
    let line: u32 = rng.gen_range(1..50);
    let col: u32 = rng.gen_range(1..40);
    let start = Position { byte: (line * 40 + col) as usize, line, col };
    let len: u32 = rng.gen_range(0..10);
    Span::new(start, Position { byte: start.byte + len as usize, line, col: col + len })
}

fn random_change(rng: &mut impl Rng, author: &MemberId, base: RevisionStamp, seq: u64) -> SemanticChange {
    let path = random_path(rng);
    let kind = kind_for(rng, &path);
    let value = |rng: &mut _| Some(VALUES.choose(rng).unwrap().to_string());
    let (old_value, new_value) = match kind {
        ChangeKind::MethodBodyChanged => (None, None),
        ChangeKind::ElementAdded | ChangeKind::ParamAdded => (None, value(rng)),
        ChangeKind::ElementRemoved | ChangeKind::ParamRemoved => (value(rng), None),
        _ => (value(rng), value(rng)),
    };
    let (old_fingerprint, new_fingerprint) = match kind {
        ChangeKind::MethodBodyChanged => (Some(Fingerprint(rng.gen_range(0..3))), Some(Fingerprint(rng.gen_range(0..3)))),
        _ => (None, None),
    };
    SemanticChange {
        kind,
        path,
        old_value,
        new_value,
        old_fingerprint,
        new_fingerprint,
        author: author.clone(),
        base_revision: base,
        seq,
        at_millis: rng.gen_range(0..20),
        decoration_span: random_span(rng),
    }
}

/// Up to `max_members` authors with up to `max_changes` changes each. The
/// first author is local; the local set sometimes also appears among the
/// remotes to exercise self-filtering.
pub fn random_instance(rng: &mut impl Rng, max_members: usize, max_changes: usize) -> DetectionInstance {
    let members = rng.gen_range(1..=max_members.max(1));
    let base = RevisionStamp(rng.gen_range(1..4));
    let sets: Vec<ChangeSet> = (0..members)
        .map(|i| {
            let author = MemberId::new(format!("dev{i}"));
            let n = rng.gen_range(0..=max_changes);
            let changes = (0..n as u64).map(|seq| random_change(rng, &author, base, seq)).collect();
            ChangeSet { author, base_revision: base, changes }
        })
        .collect();
    let local = sets[0].clone();
    let mut remotes: Vec<ChangeSet> = sets[1..].to_vec();
    if rng.gen_bool(0.2) {
        remotes.push(local.clone());
    }
    remotes.shuffle(rng);
    let aliases = remotes.iter().flat_map(rename_aliases).collect();
    DetectionInstance { local, remotes, aliases }
}

/// `members` authors with exactly `changes` changes each, for timing runs.
pub fn sized_instance(rng: &mut impl Rng, members: usize, changes: usize) -> DetectionInstance {
    let base = RevisionStamp(1);
    let sets: Vec<ChangeSet> = (0..members)
        .map(|i| {
            let author = MemberId::new(format!("dev{i}"));
            let changes = (0..changes as u64)
                .map(|seq| {
                    let mut c = random_change(rng, &author, base, seq);
                    // Spread over a realistic number of distinct elements.
                    c.path.class_chain = vec![format!("C{}", rng.gen_range(0..changes.max(1) / 4 + 1))];
                    c
                })
                .collect();
            ChangeSet { author, base_revision: base, changes }
        })
        .collect();
    let local = sets[0].clone();
    let remotes = sets[1..].to_vec();
    let aliases = remotes.iter().flat_map(rename_aliases).collect();
    DetectionInstance { local, remotes, aliases }
}
