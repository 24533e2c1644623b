#![allow(dead_code)]

use std::path::{Path, PathBuf};

use conflict_radar_core::distill::{extract_changes, ChangeContext};
use conflict_radar_core::model::{ChangeKind, MemberId, RevisionStamp};
use conflict_radar_core::syntax::parse_unit;
use serde::Deserialize;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn demos() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("demos")
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Expected {
    pub kind: String,
    pub path_id: String,
    pub before: Option<String>,
    pub after: Option<String>,
    pub span_text: String,
    pub span_start: (u32, u32),
}

pub fn expected(kind: ChangeKind) -> Expected {
    let dir = fixtures().join("taxonomy").join(kind.name());
    serde_json::from_str(&std::fs::read_to_string(dir.join("expected.json")).unwrap()).unwrap()
}

/// Diffs one golden pair and checks it yields exactly the expected change.
pub fn check_taxonomy_case(kind: ChangeKind) -> Result<(), String> {
    let dir = fixtures().join("taxonomy").join(kind.name());
    let before = std::fs::read_to_string(dir.join("before.java")).map_err(|e| e.to_string())?;
    let after = std::fs::read_to_string(dir.join("after.java")).map_err(|e| e.to_string())?;
    let want = expected(kind);
    let old = parse_unit(&before, "Zebra.java").map_err(|e| format!("before: {e}"))?;
    let new = parse_unit(&after, "Zebra.java").map_err(|e| format!("after: {e}"))?;
    let ctx = ChangeContext::new("Zoo", MemberId::new("alice"), RevisionStamp(1));
    let set = extract_changes(&old, &new, &ctx).map_err(|e| e.to_string())?;
    let [change] = set.changes.as_slice() else {
        return Err(format!("expected one change, got {:?}", set.changes.iter().map(|c| c.kind).collect::<Vec<_>>()));
    };
    let span = change.decoration_span;
    let got = (
        change.kind.name().to_string(),
        change.path.id(),
        change.before(),
        change.after(),
        span.slice(&after).to_string(),
        (span.start_line, span.start_col),
    );
    let want = (want.kind, want.path_id, want.before, want.after, want.span_text, want.span_start);
    if got == want {
        Ok(())
    } else {
        Err(format!("got {got:?}, want {want:?}"))
    }
}
