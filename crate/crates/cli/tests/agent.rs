use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::Duration;

use conflict_radar::agent::{Agent, AgentOptions, AgentView};
use conflict_radar::config::{RevisionProvider, WorkspaceConfig, META_DIR};
use conflict_radar::revision::REVISION_FILE;
use conflict_radar_core::distill::{extract_changes, ChangeContext};
use conflict_radar_core::model::{ChangeKind, ChangeSet, MemberId, RevisionStamp, Severity};
use conflict_radar_core::syntax::parse_unit;
use conflict_radar_sync::RelayHandle;
use conflict_radar_testkit::gen::{mutate, rich_unit};
use conflict_radar_testkit::seeded;
use conflict_radar_testkit::sim::start_relay;
use rand::seq::SliceRandom;
use tempfile::TempDir;
use tokio::time::Instant;

const ZEBRA: &str = "class Zebra {\n    int aField = 1;\n    void run() { step(); }\n}\n";

fn workspace(revision: u64, files: &[(&str, &str)]) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join(META_DIR)).unwrap();
    std::fs::write(dir.path().join(META_DIR).join(REVISION_FILE), revision.to_string()).unwrap();
    for (name, text) in files {
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    dir
}

fn config(dir: &Path, relay: &RelayHandle, author: &str, debounce: u64) -> WorkspaceConfig {
    WorkspaceConfig {
        project: "Zoo".into(),
        author: author.into(),
        server: relay.tcp_addr().to_string(),
        debounce_millis: debounce,
        ..WorkspaceConfig::new(dir)
    }
}

async fn eventually(what: &str, timeout: Duration, mut check: impl FnMut() -> bool) {
    let deadline = Instant::now() + timeout;
    while !check() {
        assert!(Instant::now() < deadline, "timed out waiting for {what}");
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
}

async fn connected(agent: &Agent) {
    eventually("connection", Duration::from_secs(5), || agent.view().connected).await;
}

fn stored(relay: &RelayHandle, author: &str) -> ChangeSet {
    relay
        .snapshot()
        .into_iter()
        .find(|m| m.change_set.author.as_str() == author)
        .map(|m| m.change_set)
        .unwrap_or_else(|| ChangeSet::new(MemberId::new(author), RevisionStamp(0)))
}

type Row = (ChangeKind, String, Option<String>, Option<String>);

fn rows(set: &ChangeSet) -> BTreeSet<Row> {
    set.changes.iter().map(|c| (c.kind, c.path.id(), c.before(), c.after())).collect()
}

fn from_scratch(old: &str, new: &str) -> ChangeSet {
    let ctx = ChangeContext::new("Zoo", MemberId::new("alice"), RevisionStamp(1));
    extract_changes(&parse_unit(old, "Zebra.java").unwrap(), &parse_unit(new, "Zebra.java").unwrap(), &ctx).unwrap()
}

#[tokio::test]
async fn renamed_field_is_published_after_the_debounce() {
    let relay = start_relay().await;
    let dir = workspace(1, &[("Zebra.java", ZEBRA)]);
    let agent = Agent::start(config(dir.path(), &relay, "alice", 300), AgentOptions::default()).unwrap();
    connected(&agent).await;

    let saved = Instant::now();
    std::fs::write(dir.path().join("Zebra.java"), ZEBRA.replace("aField", "theField")).unwrap();
    eventually("publish", Duration::from_secs(3), || !relay.history().is_empty()).await;
    assert!(saved.elapsed() >= Duration::from_millis(300));
    let set = stored(&relay, "alice");
    assert_eq!(set.changes.len(), 1);
    let c = &set.changes[0];
    assert_eq!(c.kind, ChangeKind::FieldRenamed);
    assert_eq!(c.path.id(), "Zoo/Zebra.java/Zebra/aField");
    assert_eq!((c.old_value.as_deref(), c.new_value.as_deref()), (Some("aField"), Some("theField")));
    agent.stop().await;
    relay.shutdown().await;
}

#[tokio::test]
async fn syntax_errors_hold_everything() {
    let relay = start_relay().await;
    let dir = workspace(1, &[("Zebra.java", ZEBRA)]);
    let agent = Agent::start(config(dir.path(), &relay, "alice", 50), AgentOptions::default()).unwrap();
    connected(&agent).await;

    std::fs::write(dir.path().join("Zebra.java"), ZEBRA.replace("step();", "step(; int a;")).unwrap();
    eventually("held status", Duration::from_secs(3), || agent.view().status.starts_with("held: parse error")).await;
    tokio::time::sleep(Duration::from_millis(200)).await;
    assert!(relay.history().is_empty());
    assert_eq!(agent.view().published, 0);

    // A second, valid file does not sneak out while the first is broken.
    std::fs::write(dir.path().join("Lion.java"), "class Lion { int mane; }\n").unwrap();
    tokio::time::sleep(Duration::from_millis(300)).await;
    assert!(relay.history().is_empty());

    let fixed = ZEBRA.replace("step();", "step(); int a;");
    std::fs::write(dir.path().join("Zebra.java"), &fixed).unwrap();
    eventually("publish after the fix", Duration::from_secs(3), || relay.history().len() == 1).await;
    let set = stored(&relay, "alice");
    let kinds: BTreeSet<_> = set.changes.iter().map(|c| c.kind).collect();
    assert_eq!(kinds, [ChangeKind::MethodBodyChanged, ChangeKind::ElementAdded].into());
    assert_eq!(agent.view().status, "idle");
    agent.stop().await;
    relay.shutdown().await;
}

#[tokio::test]
async fn rapid_saves_make_one_publish() {
    let relay = start_relay().await;
    let dir = workspace(1, &[("Zebra.java", ZEBRA)]);
    let agent = Agent::start(config(dir.path(), &relay, "alice", 300), AgentOptions::default()).unwrap();
    connected(&agent).await;

    let first = ZEBRA.replace("aField", "theField");
    let second = first.replace("= 1", "= 2").replace("step();", "leap();");
    std::fs::write(dir.path().join("Zebra.java"), &first).unwrap();
    tokio::time::sleep(Duration::from_millis(60)).await;
    std::fs::write(dir.path().join("Zebra.java"), &second).unwrap();
    eventually("publish", Duration::from_secs(3), || !relay.history().is_empty()).await;
    tokio::time::sleep(Duration::from_millis(400)).await;
    let history = relay.history();
    assert_eq!(history.len(), 1);
    assert_eq!(rows(&history[0].delta), rows(&from_scratch(ZEBRA, &second)));
    agent.stop().await;
    relay.shutdown().await;
}

#[tokio::test]
async fn polling_fallback_picks_up_edits() {
    let relay = start_relay().await;
    let dir = workspace(1, &[("Zebra.java", ZEBRA)]);
    let agent =
        Agent::start(config(dir.path(), &relay, "alice", 0), AgentOptions { force_poll: true, ..Default::default() })
            .unwrap();
    connected(&agent).await;
    assert!(agent.view().polling);
    std::fs::write(dir.path().join("Zebra.java"), ZEBRA.replace("= 1", "= 7")).unwrap();
    eventually("polled publish", Duration::from_secs(3), || !relay.history().is_empty()).await;
    assert_eq!(stored(&relay, "alice").changes[0].kind, ChangeKind::FieldValueChanged);
    agent.stop().await;
    relay.shutdown().await;
}

#[tokio::test]
async fn restoring_the_base_bytes_reverts() {
    let relay = start_relay().await;
    let dir = workspace(1, &[("Zebra.java", ZEBRA)]);
    let alice = Agent::start(config(dir.path(), &relay, "alice", 30), AgentOptions::default()).unwrap();
    let bob_dir = workspace(1, &[("Zebra.java", ZEBRA)]);
    let bob = Agent::start(config(bob_dir.path(), &relay, "bob", 30), AgentOptions::default()).unwrap();
    connected(&alice).await;
    connected(&bob).await;

    std::fs::write(dir.path().join("Zebra.java"), ZEBRA.replace("step();", "hop();")).unwrap();
    eventually("awareness at bob", Duration::from_secs(3), || bob.view().reports.len() == 1).await;
    assert_eq!(bob.view().reports[0].severity, Severity::Awareness);

    // Whitespace differs from the base: not a revert, and nothing to publish.
    let spaced = ZEBRA.replace("void run()", "void  run()");
    std::fs::write(dir.path().join("Zebra.java"), &spaced).unwrap();
    eventually("body restored", Duration::from_secs(3), || stored(&relay, "alice").is_empty()).await;
    assert!(rows(&from_scratch(ZEBRA, &spaced)).is_empty());
    assert!(!relay.history().is_empty());

    std::fs::write(dir.path().join("Zebra.java"), ZEBRA.replace("step();", "hop();")).unwrap();
    eventually("edited again", Duration::from_secs(3), || bob.view().reports.len() == 1).await;
    std::fs::write(dir.path().join("Zebra.java"), ZEBRA).unwrap();
    eventually("revert reaches bob", Duration::from_secs(3), || bob.view().reports.is_empty()).await;
    assert!(stored(&relay, "alice").is_empty());
    alice.stop().await;
    bob.stop().await;
    relay.shutdown().await;
}

#[tokio::test]
async fn revision_bump_rebases() {
    let relay = start_relay().await;
    let dir = workspace(1, &[("Zebra.java", ZEBRA)]);
    let agent = Agent::start(config(dir.path(), &relay, "alice", 30), AgentOptions::default()).unwrap();
    connected(&agent).await;
    std::fs::write(dir.path().join("Zebra.java"), ZEBRA.replace("step();", "hop();")).unwrap();
    eventually("publish", Duration::from_secs(3), || !stored(&relay, "alice").is_empty()).await;

    std::fs::write(dir.path().join(META_DIR).join(REVISION_FILE), "2").unwrap();
    eventually("rebase", Duration::from_secs(3), || agent.view().base == RevisionStamp(2)).await;
    eventually("server moves on", Duration::from_secs(3), || {
        let set = stored(&relay, "alice");
        set.base_revision == RevisionStamp(2) && set.is_empty()
    })
    .await;
    assert_eq!(relay.session_base(), RevisionStamp(2));
    agent.stop().await;
    relay.shutdown().await;
}

fn git(dir: &Path, args: &[&str]) {
    let ok = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(["-c", "user.name=t", "-c", "user.email=t@example.com"])
        .args(args)
        .output()
        .unwrap()
        .status
        .success();
    assert!(ok, "git {args:?}");
}

#[tokio::test]
async fn git_baseline_comes_from_head() {
    let relay = start_relay().await;
    let dir = tempfile::tempdir().unwrap();
    git(dir.path(), &["init", "-q"]);
    std::fs::write(dir.path().join("Zebra.java"), ZEBRA).unwrap();
    git(dir.path(), &["add", "."]);
    git(dir.path(), &["commit", "-q", "-m", "zebra"]);
    // Uncommitted work present at start-up is published straight away.
    std::fs::write(dir.path().join("Zebra.java"), ZEBRA.replace("= 1", "= 3")).unwrap();
    let cfg = WorkspaceConfig { revision_provider: RevisionProvider::Git, ..config(dir.path(), &relay, "alice", 30) };
    let agent = Agent::start(cfg, AgentOptions::default()).unwrap();
    eventually("startup publish", Duration::from_secs(3), || !stored(&relay, "alice").is_empty()).await;
    let set = stored(&relay, "alice");
    assert_eq!(set.base_revision, RevisionStamp(1));
    assert_eq!(set.changes[0].kind, ChangeKind::FieldValueChanged);

    std::fs::write(dir.path().join("Zebra.java"), ZEBRA).unwrap();
    eventually("revert to HEAD", Duration::from_secs(3), || stored(&relay, "alice").is_empty()).await;
    agent.stop().await;
    relay.shutdown().await;
}

/// Edits that keep every element's identity: the stored set must equal a
/// from-scratch diff of the base against the current file.
#[tokio::test]
async fn published_state_matches_a_from_scratch_diff() {
    let relay = start_relay().await;
    let mut rng = seeded(41);
    let mut unit = rich_unit(&mut rng, "Zebra.java");
    let base = unit.render();
    let dir = workspace(1, &[("Zebra.java", &base)]);
    let agent = Agent::start(config(dir.path(), &relay, "alice", 20), AgentOptions::default()).unwrap();
    connected(&agent).await;
    let kinds = [
        ChangeKind::MethodBodyChanged,
        ChangeKind::FieldValueChanged,
        ChangeKind::FieldTypeChanged,
        ChangeKind::MethodReturnTypeChanged,
        ChangeKind::MethodAccessibilityChanged,
        ChangeKind::FieldAccessibilityChanged,
        ChangeKind::ParamTypeChanged,
    ];
    for round in 0..8 {
        for _ in 0..3 {
            mutate(&mut unit, *kinds.choose(&mut rng).unwrap(), "Zoo", &mut rng);
        }
        let current = unit.render();
        std::fs::write(dir.path().join("Zebra.java"), &current).unwrap();
        let want = rows(&from_scratch(&base, &current));
        let deadline = Instant::now() + Duration::from_secs(3);
        loop {
            let got = rows(&stored(&relay, "alice"));
            if got == want {
                break;
            }
            assert!(Instant::now() < deadline, "round {round}: stored {got:#?}\nwant {want:#?}");
            tokio::time::sleep(Duration::from_millis(10)).await;
        }
    }
    let view: AgentView = agent.view();
    assert_eq!(view.held, 0);
    agent.stop().await;
    relay.shutdown().await;
}
