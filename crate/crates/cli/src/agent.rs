//! The workspace agent: watches files, publishes error-free snapshots and
//! keeps reports current as remote changes arrive.
//!
//! A single coordinator task owns all state. The file watcher and the relay
//! client only feed it through channels.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use conflict_radar_core::detect::{anchor_reports, DetectOptions};
use conflict_radar_core::model::{ChangeSet, ConflictReport, MemberId, RevisionStamp};
use conflict_radar_core::syntax::{parse_unit, ElementTree};
use conflict_radar_sync::{
    ClientConfig, ClientEvent, FileSnapshot, GateResult, PublishGate, RelayClient, RemoteState, Role, WireMessage,
};
use globset::GlobSet;
use notify::{RecursiveMode, Watcher};
use tokio::sync::{mpsc, oneshot};
use tokio::task::JoinHandle;
use tokio::time::Instant;

use crate::config::{ConfigError, WorkspaceConfig};
use crate::report;
use crate::revision::{base_content, current_revision, detect_revert};
use crate::scan::{matcher, scan};

pub const POLL_INTERVAL: Duration = Duration::from_secs(1);

#[derive(Debug, Clone, Default)]
pub struct AgentOptions {
    pub detect: DetectOptions,
    /// Skip the native watcher and poll instead.
    pub force_poll: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentEvent {
    Connected,
    Disconnected(String),
    Published(ChangeSet),
    Held { file: String, error: String },
    Reverted(String),
    Rebased(RevisionStamp),
    Rejected(String),
    Reports { added: Vec<ConflictReport>, removed: Vec<ConflictReport>, current: Vec<ConflictReport> },
    Warning(String),
}

impl AgentEvent {
    pub fn lines(&self) -> Vec<String> {
        match self {
            AgentEvent::Connected => vec!["connected".into()],
            AgentEvent::Disconnected(why) => vec![format!("disconnected: {why}")],
            AgentEvent::Published(delta) => {
                let mut out = vec![format!("published {} change(s)", delta.len())];
                out.extend(delta.changes.iter().map(|c| format!("  {} {}", c.kind, c.path.id())));
                out
            }
            AgentEvent::Held { file, error } => vec![format!("held: parse error in {file}: {error}")],
            AgentEvent::Reverted(file) => vec![format!("reverted {file}")],
            AgentEvent::Rebased(base) => vec![format!("rebased on revision {}", base.0)],
            AgentEvent::Rejected(reason) => vec![format!("rejected: {reason}")],
            AgentEvent::Reports { added, removed, .. } => removed
                .iter()
                .map(|r| format!("- {}", report::describe(r)))
                .chain(added.iter().map(|r| format!("+ {}", report::describe(r))))
                .collect(),
            AgentEvent::Warning(w) => vec![format!("warning: {w}")],
        }
    }
}

/// What the agent currently shows its user.
#[derive(Debug, Clone, Default)]
pub struct AgentView {
    pub status: String,
    pub connected: bool,
    pub base: RevisionStamp,
    pub reports: Vec<ConflictReport>,
    pub local: Option<ChangeSet>,
    pub published: usize,
    pub held: usize,
    pub rejected: usize,
    pub polling: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("workspace root {0} does not exist")]
    NoRoot(String),
    #[error("bad include pattern: {0}")]
    Include(#[from] globset::Error),
}

pub struct Agent {
    view: Arc<Mutex<AgentView>>,
    events: mpsc::UnboundedReceiver<AgentEvent>,
    stop: Option<oneshot::Sender<()>>,
    task: JoinHandle<()>,
}

impl Agent {
    /// Captures baselines and starts watching. Must be called inside a Tokio
    /// runtime.
    pub fn start(config: WorkspaceConfig, options: AgentOptions) -> Result<Agent, AgentError> {
        config.validate()?;
        if !config.root.is_dir() {
            return Err(AgentError::NoRoot(config.root.display().to_string()));
        }
        let include = matcher(&config.include)?;
        let view = Arc::new(Mutex::new(AgentView::default()));
        let (ev_tx, ev_rx) = mpsc::unbounded_channel();
        let (stop_tx, stop_rx) = oneshot::channel();
        let coordinator = Coordinator::new(config, options, include, view.clone(), ev_tx);
        let task = tokio::spawn(coordinator.run(stop_rx));
        Ok(Agent { view, events: ev_rx, stop: Some(stop_tx), task })
    }

    pub fn view(&self) -> AgentView {
        self.view.lock().unwrap().clone()
    }

    pub async fn next_event(&mut self) -> Option<AgentEvent> {
        self.events.recv().await
    }

    pub fn try_next_event(&mut self) -> Option<AgentEvent> {
        self.events.try_recv().ok()
    }

    pub async fn stop(mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        let _ = self.task.await;
    }
}

fn now_millis() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

struct Coordinator {
    config: WorkspaceConfig,
    options: AgentOptions,
    include: GlobSet,
    gate: PublishGate,
    remote: RemoteState,
    client: RelayClient,
    /// Last content seen on disk.
    seen: BTreeMap<String, String>,
    /// Content at the base revision.
    baseline: BTreeMap<String, String>,
    /// Files changed since the last successful publish.
    pending: BTreeMap<String, Option<String>>,
    reports: Vec<ConflictReport>,
    connected_before: bool,
    view: Arc<Mutex<AgentView>>,
    events: mpsc::UnboundedSender<AgentEvent>,
}

impl Coordinator {
    fn new(
        config: WorkspaceConfig,
        options: AgentOptions,
        include: GlobSet,
        view: Arc<Mutex<AgentView>>,
        events: mpsc::UnboundedSender<AgentEvent>,
    ) -> Self {
        let author = MemberId::new(config.author.clone());
        let base = current_revision(config.revision_provider, &config.root);
        let on_disk = scan(&config.root, &include);
        let baseline = capture_baseline(&config, &on_disk);
        let mut gate = PublishGate::new(config.project.clone(), author.clone(), base);
        for tree in parse_all(&baseline, &events) {
            gate.set_baseline(tree);
        }
        let mut pending = BTreeMap::new();
        for (path, text) in &on_disk {
            if baseline.get(path) != Some(text) {
                pending.insert(path.clone(), Some(text.clone()));
            }
        }
        let client = RelayClient::connect(ClientConfig {
            server: config.server.clone(),
            author: author.clone(),
            project: config.project.clone(),
            base_revision: base,
            role: Role::Member,
        });
        {
            let mut v = view.lock().unwrap();
            v.base = base;
            v.status = "idle".into();
        }
        Coordinator {
            remote: RemoteState::new(author, base),
            config,
            options,
            include,
            gate,
            client,
            seen: on_disk,
            baseline,
            pending,
            reports: Vec::new(),
            connected_before: false,
            view,
            events,
        }
    }

    fn emit(&self, event: AgentEvent) {
        let _ = self.events.send(event);
    }

    fn status(&self, status: impl Into<String>) {
        self.view.lock().unwrap().status = status.into();
    }

    async fn run(mut self, mut stop: oneshot::Receiver<()>) {
        let (fs_tx, mut fs_rx) = mpsc::unbounded_channel::<()>();
        let _watcher = if self.options.force_poll { None } else { self.watch(fs_tx) };
        let polling = _watcher.is_none();
        self.view.lock().unwrap().polling = polling;
        let debounce = Duration::from_millis(self.config.debounce_millis);
        let mut poll = tokio::time::interval(POLL_INTERVAL);
        poll.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        let mut deadline: Option<Instant> = None;
        if !self.pending.is_empty() {
            self.on_burst();
        }
        loop {
            tokio::select! {
                _ = &mut stop => break,
                Some(()) = fs_rx.recv() => deadline = Some(Instant::now() + debounce),
                _ = poll.tick(), if polling => {
                    if scan(&self.config.root, &self.include) != self.seen || self.revision_moved() {
                        deadline = Some(Instant::now() + debounce);
                    }
                }
                _ = tokio::time::sleep_until(deadline.unwrap_or_else(Instant::now)), if deadline.is_some() => {
                    deadline = None;
                    self.on_burst();
                }
                event = self.client.next_event() => match event {
                    Some(event) => self.on_client(event),
                    None => break,
                },
            }
        }
        self.client.close().await;
    }

    fn watch(&self, tx: mpsc::UnboundedSender<()>) -> Option<notify::RecommendedWatcher> {
        let handler = move |res: notify::Result<notify::Event>| match res {
            Ok(_) => {
                let _ = tx.send(());
            }
            Err(e) => tracing::warn!("watch error: {e}"),
        };
        let started = notify::recommended_watcher(handler)
            .and_then(|mut w| w.watch(&self.config.root, RecursiveMode::Recursive).map(|_| w));
        match started {
            Ok(w) => Some(w),
            Err(e) => {
                let msg = format!("file watcher unavailable ({e}); polling every {}s", POLL_INTERVAL.as_secs());
                tracing::warn!("{msg}");
                self.emit(AgentEvent::Warning(msg));
                None
            }
        }
    }

    fn revision_moved(&self) -> bool {
        current_revision(self.config.revision_provider, &self.config.root) != self.gate.base_revision()
    }

    fn on_burst(&mut self) {
        let on_disk = scan(&self.config.root, &self.include);
        if self.revision_moved() {
            self.rebase(on_disk);
            return;
        }
        let mut touched: BTreeMap<String, Option<String>> = BTreeMap::new();
        for (path, text) in &on_disk {
            if self.seen.get(path) != Some(text) {
                touched.insert(path.clone(), Some(text.clone()));
            }
        }
        for path in self.seen.keys().filter(|p| !on_disk.contains_key(*p)) {
            touched.insert(path.clone(), None);
        }
        self.seen = on_disk;

        for (path, text) in touched {
            if detect_revert(self.baseline.get(&path).map(String::as_str), text.as_deref()) {
                self.pending.remove(&path);
                match parse_unit(&self.baseline[&path], &path) {
                    Ok(tree) => {
                        self.gate.revert_file(tree);
                        self.client.revert(path.clone());
                        self.emit(AgentEvent::Reverted(path));
                    }
                    Err(e) => self.emit(AgentEvent::Warning(format!("baseline of {path} does not parse: {e}"))),
                }
            } else {
                self.pending.insert(path, text);
            }
        }

        if !self.pending.is_empty() {
            let burst: Vec<FileSnapshot> = self
                .pending
                .iter()
                .map(|(p, t)| match t {
                    Some(t) => FileSnapshot::new(p.clone(), t.clone()),
                    None => FileSnapshot::deleted(p.clone()),
                })
                .collect();
            match self.gate.publish_if_error_free(&burst, now_millis()) {
                GateResult::Held { file, error } => {
                    self.status(format!("held: parse error in {file}"));
                    self.view.lock().unwrap().held += 1;
                    self.emit(AgentEvent::Held { file, error: error.to_string() });
                }
                GateResult::Published(delta) => {
                    self.pending.clear();
                    if !delta.is_empty() {
                        self.client.publish(delta.clone());
                        self.view.lock().unwrap().published += 1;
                        self.emit(AgentEvent::Published(delta));
                    }
                    self.status("idle");
                }
            }
        }
        self.refresh();
    }

    fn rebase(&mut self, on_disk: BTreeMap<String, String>) {
        let base = current_revision(self.config.revision_provider, &self.config.root);
        self.baseline = capture_baseline(&self.config, &on_disk);
        let trees = parse_all(&self.baseline, &self.events);
        let announce = self.gate.rebase(base, trees);
        self.pending = on_disk
            .iter()
            .filter(|(p, t)| self.baseline.get(*p) != Some(*t))
            .map(|(p, t)| (p.clone(), Some(t.clone())))
            .collect();
        self.seen = on_disk;
        self.client.set_base_revision(base);
        self.remote.set_local_base(base);
        self.client.publish(announce);
        self.view.lock().unwrap().base = base;
        self.emit(AgentEvent::Rebased(base));
        if !self.pending.is_empty() {
            self.on_burst();
        } else {
            self.refresh();
        }
    }

    fn on_client(&mut self, event: ClientEvent) {
        match event {
            ClientEvent::Connected => {
                self.view.lock().unwrap().connected = true;
                // The relay may have restarted and lost our set; resending is
                // idempotent otherwise.
                if self.connected_before && !self.gate.local_changes().is_empty() {
                    self.client.publish(self.gate.local_changes().clone());
                }
                self.connected_before = true;
                self.emit(AgentEvent::Connected);
            }
            ClientEvent::Disconnected(why) => {
                let was = std::mem::replace(&mut self.view.lock().unwrap().connected, false);
                if was {
                    self.emit(AgentEvent::Disconnected(why));
                }
            }
            ClientEvent::Message(WireMessage::Rejected { reason, .. }) => {
                self.view.lock().unwrap().rejected += 1;
                self.status(format!("rejected: {reason}"));
                self.emit(AgentEvent::Rejected(reason));
            }
            ClientEvent::Message(WireMessage::Error { message }) => {
                self.emit(AgentEvent::Warning(format!("relay error: {message}")));
            }
            ClientEvent::Message(m) => {
                if self.remote.apply(&m).changed() {
                    self.refresh();
                }
            }
        }
    }

    /// Reruns detection and reports what changed.
    fn refresh(&mut self) {
        let mut reports = self.remote.detect(self.gate.local_changes(), self.options.detect);
        let trees: HashMap<String, ElementTree> =
            self.gate.published_trees().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        anchor_reports(&mut reports, &trees);
        {
            let mut v = self.view.lock().unwrap();
            v.local = Some(self.gate.local_changes().clone());
            v.reports = reports.clone();
        }
        if reports != self.reports {
            let (added, removed) = report::changed(&self.reports, &reports);
            self.reports = reports.clone();
            self.emit(AgentEvent::Reports { added, removed, current: reports });
        }
    }
}

fn capture_baseline(config: &WorkspaceConfig, on_disk: &BTreeMap<String, String>) -> BTreeMap<String, String> {
    match config.revision_provider {
        crate::config::RevisionProvider::File => on_disk.clone(),
        provider => on_disk
            .keys()
            .filter_map(|p| base_content(provider, &config.root, p).map(|t| (p.clone(), t)))
            .collect(),
    }
}

fn parse_all(files: &BTreeMap<String, String>, events: &mpsc::UnboundedSender<AgentEvent>) -> Vec<ElementTree> {
    files
        .iter()
        .filter_map(|(path, text)| match parse_unit(text, path) {
            Ok(tree) => Some(tree),
            Err(e) => {
                let _ = events.send(AgentEvent::Warning(format!("baseline of {path} does not parse: {e}")));
                None
            }
        })
        .collect()
}
