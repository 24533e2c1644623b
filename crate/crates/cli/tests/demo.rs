mod common;

use std::process::{Command, Output};

fn demo(script: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conflict-radar")).arg("demo").arg(script).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn overlapping_pair_passes() {
    let out = demo(&common::demos().join("javadoc_pair.json"));
    let text = stdout(&out);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("demo passed: 7 steps, 7 checks"));
    // Awareness at bob first, then conflict at both.
    let aware = text.find("bob: Awareness Zoo/JavadocMethodCheck.java/JavadocMethodCheck/checkComment").unwrap();
    let conflict = text.find("alice: Conflict Zoo/JavadocMethodCheck.java/JavadocMethodCheck/checkComment").unwrap();
    assert!(aware < conflict);
}

#[test]
fn disjoint_edits_stay_awareness() {
    let out = demo(&common::demos().join("disjoint.json"));
    let text = stdout(&out);
    assert!(out.status.success(), "{text}");
    assert!(!text.contains("Conflict"));
}

#[test]
fn stale_member_is_rejected() {
    let out = demo(&common::demos().join("stale.json"));
    let text = stdout(&out);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("bob: publish rejected as stale"));
}

#[test]
fn failed_expectation_names_the_step() {
    let out = demo(&common::fixtures().join("demos/wrong_expectation.json"));
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(1), "{text}");
    assert!(text.contains("demo failed at step 2 (bob edits checkThrowsTag)"), "{text}");
}
