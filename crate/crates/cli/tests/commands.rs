mod common;

use std::path::Path;
use std::process::{Command, Output};

use conflict_radar::config::RevisionProvider;
use conflict_radar::revision::current_revision;
use conflict_radar_core::model::{ChangeSet, MemberId, RevisionStamp};
use conflict_radar_sync::{FileSnapshot, GateResult, PublishGate};
use conflict_radar_testkit::sim::{connect, expect, start_relay};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conflict-radar")).args(args).output().unwrap()
}

const ZEBRA: &str = "class Zebra {\n    int stripeCount = 40;\n    void run() { step(); }\n}\n";

#[test]
fn parse_emits_the_tree() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("Zebra.java");
    std::fs::write(&file, ZEBRA).unwrap();
    let out = cli(&["parse", file.to_str().unwrap(), "--emit-tree"]);
    assert!(out.status.success());
    let tree: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(tree["filePath"], "Zebra.java");
    assert_eq!(tree["classes"][0]["fields"][0]["name"], "stripeCount");
    // Stable output.
    assert_eq!(out.stdout, cli(&["parse", file.to_str().unwrap(), "--emit-tree"]).stdout);

    std::fs::write(&file, "class Zebra {").unwrap();
    let out = cli(&["parse", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

fn delta(author: &str, new: &str) -> ChangeSet {
    let mut gate = PublishGate::new("Zoo", MemberId::new(author), RevisionStamp(1));
    gate.set_baseline(conflict_radar_core::syntax::parse_unit(ZEBRA, "Zebra.java").unwrap());
    match gate.publish_if_error_free(&[FileSnapshot::new("Zebra.java", new)], 1) {
        GateResult::Published(d) => d,
        other => panic!("{other:?}"),
    }
}

fn input(dir: &Path, local: &ChangeSet, remotes: &[ChangeSet]) -> String {
    let path = dir.join("input.json");
    std::fs::write(&path, serde_json::json!({"local": local, "remotes": remotes}).to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn conflicts_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = ChangeSet::new(MemberId::new("alice"), RevisionStamp(1));
    let mine = delta("alice", &ZEBRA.replace("step();", "hop();"));
    let theirs = delta("bob", &ZEBRA.replace("step();", "skip();"));

    let none = cli(&["conflicts", "--from", &input(dir.path(), &empty, &[])]);
    assert_eq!(none.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&none.stdout), "no conflicts\n");

    let aware = cli(&["conflicts", "--from", &input(dir.path(), &empty, &[theirs.clone()])]);
    assert_eq!(aware.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&aware.stdout).contains("Awareness  Zoo/Zebra.java/Zebra/run"));

    let both = cli(&["conflicts", "--json", "--from", &input(dir.path(), &mine, &[theirs])]);
    assert_eq!(both.status.code(), Some(2));
    let reports: serde_json::Value = serde_json::from_slice(&both.stdout).unwrap();
    assert_eq!(reports[0]["severity"], "Conflict");
    assert_eq!(reports[0]["pathId"], "Zoo/Zebra.java/Zebra/run");

    let broken = cli(&["conflicts", "--from", "/nonexistent/input.json"]);
    assert_eq!(broken.status.code(), Some(3));
}

#[tokio::test]
async fn conflicts_asks_the_relay() {
    let relay = start_relay().await;
    let mut a = connect(&relay, "alice", 1);
    let mut b = connect(&relay, "bob", 1);
    expect(&mut a, "WELCOME").await;
    expect(&mut b, "WELCOME").await;
    a.publish(delta("alice", &ZEBRA.replace("step();", "hop();")));
    expect(&mut b, "BROADCAST").await;
    let server = relay.tcp_addr().to_string();
    let out = tokio::task::spawn_blocking(move || cli(&["conflicts", "--server", &server, "--author", "bob"]))
        .await
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    relay.shutdown().await;
}

fn git(dir: &Path, args: &[&str]) -> String {
    let out = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(["-c", "user.name=t", "-c", "user.email=t@example.com"])
        .args(args)
        .output()
        .unwrap();
    assert!(out.status.success(), "git {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn git_revision_counts_first_parent_commits() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    git(root, &["init", "-q", "-b", "main"]);
    for i in 0..9 {
        std::fs::write(root.join("Zebra.java"), format!("class Zebra {{ int n = {i}; }}\n")).unwrap();
        git(root, &["add", "."]);
        git(root, &["commit", "-q", "-m", &format!("c{i}")]);
    }
    // A side branch with two commits merged back adds one first-parent commit.
    git(root, &["checkout", "-q", "-b", "side"]);
    for i in 0..2 {
        std::fs::write(root.join(format!("Side{i}.java")), "class S {}\n").unwrap();
        git(root, &["add", "."]);
        git(root, &["commit", "-q", "-m", &format!("s{i}")]);
    }
    git(root, &["checkout", "-q", "main"]);
    git(root, &["commit", "-q", "--allow-empty", "-m", "c9"]);
    git(root, &["merge", "-q", "--no-ff", "side", "-m", "merge"]);
    git(root, &["commit", "-q", "--allow-empty", "-m", "c11"]);

    // Independent count: walk the first-parent log.
    let walked = git(root, &["log", "--first-parent", "--format=%H"]).lines().count() as u64;
    assert_eq!(walked, 12);
    assert_eq!(current_revision(RevisionProvider::Git, root), RevisionStamp(walked));
}
