mod common;

use std::process::Command;

use conflict_radar_core::model::{ChangeKind, ChangeSet};

#[test]
fn each_golden_pair_yields_its_kind() {
    let failures: Vec<String> = ChangeKind::TAXONOMY
        .iter()
        .filter_map(|&k| common::check_taxonomy_case(k).err().map(|e| format!("{k}: {e}")))
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn diff_command_agrees_with_the_library() {
    for kind in ChangeKind::TAXONOMY {
        let dir = common::fixtures().join("taxonomy").join(kind.name());
        let out = Command::new(env!("CARGO_BIN_EXE_conflict-radar"))
            .args(["diff", "--json", "--project", "Zoo", "--as", "Zebra.java"])
            .arg(dir.join("before.java"))
            .arg(dir.join("after.java"))
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let set: ChangeSet = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(set.changes.len(), 1, "{kind}");
        assert_eq!(set.changes[0].kind, kind);
        assert_eq!(set.changes[0].path.id(), common::expected(kind).path_id);
    }
}

#[test]
fn diff_command_prints_one_line_per_change() {
    let dir = common::fixtures().join("taxonomy").join("FieldRenamed");
    let out = Command::new(env!("CARGO_BIN_EXE_conflict-radar"))
        .args(["diff", "--project", "Zoo", "--as", "Zebra.java"])
        .arg(dir.join("before.java"))
        .arg(dir.join("after.java"))
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.trim(), "FieldRenamed Zoo/Zebra.java/Zebra/name name -> title at 5:22");
}
