//! Scripted multi-member scenarios: an in-process relay, one agent per
//! member over a temporary directory, timed file writes and expected
//! reports after each step.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use conflict_radar_core::model::Severity;
use conflict_radar_sync::{serve, ServerConfig};
use serde::Deserialize;
use tokio::time::Instant;

use crate::agent::{Agent, AgentOptions};
use crate::config::{RevisionProvider, WorkspaceConfig, DEFAULT_DEBOUNCE_MILLIS, META_DIR};
use crate::revision::REVISION_FILE;

/// Upper bound on edit-to-report latency at the peer.
pub const LATENCY_BOUND: Duration = Duration::from_secs(2);
/// How long a satisfied expectation must keep holding.
const SETTLE: Duration = Duration::from_millis(150);

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DemoScript {
    #[serde(default = "default_project")]
    pub project: String,
    #[serde(default)]
    pub members: Vec<DemoMember>,
    /// Initial content shared by every member.
    #[serde(default)]
    pub files: BTreeMap<String, String>,
    #[serde(default)]
    pub debounce_millis: Option<u64>,
    pub steps: Vec<DemoStep>,
}

fn default_project() -> String {
    "Zoo".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DemoMember {
    pub name: String,
    #[serde(default = "first_revision")]
    pub revision: u64,
}

fn first_revision() -> u64 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DemoStep {
    pub member: String,
    #[serde(default)]
    pub delay_millis: u64,
    pub file_path: String,
    pub new_content: String,
    #[serde(default)]
    pub label: Option<String>,
    /// Exact report set each listed member must show after this step.
    #[serde(default)]
    pub expect: BTreeMap<String, Vec<Expected>>,
    /// Members whose publish must be turned away as stale.
    #[serde(default)]
    pub expect_rejected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Expected {
    pub path_id: String,
    pub severity: Severity,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScriptFile {
    Full(DemoScript),
    Steps(Vec<DemoStep>),
}

impl DemoScript {
    /// Accepts either a full script object or a bare list of steps.
    pub fn from_json(text: &str) -> Result<DemoScript, serde_json::Error> {
        Ok(match serde_json::from_str(text)? {
            ScriptFile::Full(s) => s,
            ScriptFile::Steps(steps) => DemoScript {
                project: default_project(),
                members: Vec::new(),
                files: BTreeMap::new(),
                debounce_millis: None,
                steps,
            },
        })
    }

    fn member_names(&self) -> Vec<DemoMember> {
        let mut members = self.members.clone();
        for step in &self.steps {
            if !members.iter().any(|m| m.name == step.member) {
                members.push(DemoMember { name: step.member.clone(), revision: first_revision() });
            }
        }
        members
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error("step {step} ({label}): {detail}")]
    Step { step: usize, label: String, detail: String },
    #[error("setup: {0}")]
    Setup(String),
}

#[derive(Debug, Clone, Default)]
pub struct DemoSummary {
    pub steps: usize,
    pub checked: usize,
    pub max_latency: Duration,
}

fn write_file(root: &Path, rel: &str, content: &str) -> std::io::Result<()> {
    let path = root.join(rel);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, content)
}

fn shown(agent: &Agent) -> BTreeSet<Expected> {
    agent
        .view()
        .reports
        .iter()
        .map(|r| Expected { path_id: r.path_id.clone(), severity: r.severity })
        .collect()
}

fn render(set: &BTreeSet<Expected>) -> String {
    if set.is_empty() {
        return "nothing".into();
    }
    set.iter().map(|e| format!("{} {}", e.severity, e.path_id)).collect::<Vec<_>>().join(", ")
}

/// Runs the scenario, printing a timeline to `out`.
pub async fn run(script: &DemoScript, out: &mut dyn Write) -> Result<DemoSummary, DemoError> {
    let setup = |e: &dyn std::fmt::Display| DemoError::Setup(e.to_string());
    let relay = serve(ServerConfig { port: 0, ..ServerConfig::default() }).await.map_err(|e| setup(&e))?;
    let debounce = script.debounce_millis.unwrap_or(DEFAULT_DEBOUNCE_MILLIS);
    let start = Instant::now();
    let stamp = |out: &mut dyn Write, line: String| {
        let _ = writeln!(out, "[{:>7.3}s] {line}", start.elapsed().as_secs_f64());
    };

    let mut dirs = Vec::new();
    let mut agents: BTreeMap<String, Agent> = BTreeMap::new();
    for member in script.member_names() {
        let dir = tempfile::tempdir().map_err(|e| setup(&e))?;
        for (rel, content) in &script.files {
            write_file(dir.path(), rel, content).map_err(|e| setup(&e))?;
        }
        write_file(dir.path(), &format!("{META_DIR}/{REVISION_FILE}"), &member.revision.to_string())
            .map_err(|e| setup(&e))?;
        let config = WorkspaceConfig {
            project: script.project.clone(),
            author: member.name.clone(),
            server: relay.tcp_addr().to_string(),
            debounce_millis: debounce,
            revision_provider: RevisionProvider::File,
            ..WorkspaceConfig::new(dir.path())
        };
        let agent = Agent::start(config, AgentOptions::default()).map_err(|e| setup(&e))?;
        stamp(out, format!("{} joins at revision {}", member.name, member.revision));
        agents.insert(member.name.clone(), agent);
        dirs.push((member.name, dir));
    }
    let deadline = Instant::now() + Duration::from_secs(10);
    while !agents.values().all(|a| a.view().connected) {
        if Instant::now() > deadline {
            return Err(DemoError::Setup("agents did not connect to the relay".into()));
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }

    let mut summary = DemoSummary { steps: script.steps.len(), ..DemoSummary::default() };
    let mut result = Ok(());
    for (i, step) in script.steps.iter().enumerate() {
        let n = i + 1;
        let label = step.label.clone().unwrap_or_else(|| format!("{} edits {}", step.member, step.file_path));
        let fail = |detail: String| DemoError::Step { step: n, label: label.clone(), detail };
        tokio::time::sleep(Duration::from_millis(step.delay_millis)).await;
        let Some((_, dir)) = dirs.iter().find(|(m, _)| *m == step.member) else {
            result = Err(fail(format!("unknown member {}", step.member)));
            break;
        };
        for name in step.expect.keys().chain(&step.expect_rejected) {
            if !agents.contains_key(name) {
                result = Err(fail(format!("unknown member {name}")));
                break;
            }
        }
        if result.is_err() {
            break;
        }
        let rejected_before: BTreeMap<&String, usize> =
            step.expect_rejected.iter().map(|m| (m, agents[m].view().rejected)).collect();
        if let Err(e) = write_file(dir.path(), &step.file_path, &step.new_content) {
            result = Err(fail(e.to_string()));
            break;
        }
        let written = Instant::now();
        stamp(out, format!("step {n}: {label}"));
        if step.expect.is_empty() && step.expect_rejected.is_empty() {
            continue;
        }

        let expected: BTreeMap<&String, BTreeSet<Expected>> =
            step.expect.iter().map(|(m, e)| (m, e.iter().cloned().collect())).collect();
        let holds = |agents: &BTreeMap<String, Agent>| {
            expected.iter().all(|(m, e)| shown(&agents[*m]) == *e)
                && rejected_before.iter().all(|(m, before)| agents[*m].view().rejected > *before)
        };
        let bound = LATENCY_BOUND.max(Duration::from_millis(debounce + 500));
        let mut satisfied_at = None;
        loop {
            if holds(&agents) {
                let at = *satisfied_at.get_or_insert_with(Instant::now);
                if at.elapsed() >= SETTLE {
                    break;
                }
            } else {
                satisfied_at = None;
            }
            if written.elapsed() > bound + SETTLE {
                break;
            }
            tokio::time::sleep(Duration::from_millis(5)).await;
        }
        let Some(at) = satisfied_at.filter(|at| at.elapsed() >= SETTLE) else {
            let mut detail = Vec::new();
            for (m, e) in &expected {
                let saw = shown(&agents[*m]);
                if saw != *e {
                    detail.push(format!("{m} expected [{}] but shows [{}]", render(e), render(&saw)));
                }
            }
            for (m, before) in &rejected_before {
                if agents[*m].view().rejected <= *before {
                    detail.push(format!("{m} was not rejected"));
                }
            }
            result = Err(fail(format!("after {:?}: {}", bound, detail.join("; "))));
            break;
        };
        let latency = at.duration_since(written);
        summary.max_latency = summary.max_latency.max(latency);
        summary.checked += 1;
        for (m, e) in &expected {
            stamp(out, format!("  {m}: {} ({} ms)", render(e), latency.as_millis()));
        }
        for m in rejected_before.keys() {
            stamp(out, format!("  {m}: publish rejected as stale"));
        }
    }

    for (_, agent) in agents {
        agent.stop().await;
    }
    relay.shutdown().await;
    result.map(|_| summary)
}
