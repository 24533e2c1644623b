//! Relay server: newline-delimited JSON over TCP for workspaces, the same
//! vocabulary over WebSocket at `/ws` on the next port, plus the `/actions`
//! log and optional static dashboard assets.

use std::collections::BTreeMap;
use std::io;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::Response;
use axum::routing::get;
use axum::{Json, Router};
use conflict_radar_core::detect::{detect_with, version_gate, DetectOptions, GateDecision};
use conflict_radar_core::distill::{rename_aliases, FoldOutcome, MemberChanges};
use conflict_radar_core::model::{ChangeSet, ConflictReport, MemberId, RevisionStamp};
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, watch};
use tokio::task::{JoinHandle, JoinSet};
use tower_http::services::ServeDir;

use crate::protocol::{decode, encode, Role, WireMessage, DEFAULT_PORT};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: IpAddr,
    /// TCP port for workspaces; 0 picks a free one.
    pub port: u16,
    /// HTTP port for `/ws` and `/actions`; defaults to `port + 1`.
    pub http_port: Option<u16>,
    pub dashboard_dir: Option<PathBuf>,
    pub detect: DetectOptions,
    /// Keep every received PUBLISH for inspection.
    pub record_history: bool,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: DEFAULT_PORT,
            http_port: None,
            dashboard_dir: None,
            detect: DetectOptions::default(),
            record_history: false,
        }
    }
}

/// A choice made in a dashboard action prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ActionRecord {
    pub member: MemberId,
    pub path_id: String,
    pub action: String,
    pub at_millis: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PublishRecord {
    pub delta: ChangeSet,
    pub accepted: bool,
}

type ConnId = u64;

struct Conn {
    tx: mpsc::UnboundedSender<String>,
    author: Option<MemberId>,
    role: Option<Role>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flow {
    Continue,
    Close,
}

struct Session {
    id: String,
    base: RevisionStamp,
    members: BTreeMap<MemberId, MemberChanges>,
    conns: BTreeMap<ConnId, Conn>,
    next_conn: ConnId,
    actions: Vec<ActionRecord>,
    history: Option<Vec<PublishRecord>>,
    detect: DetectOptions,
}

impl Session {
    fn new(config: &ServerConfig) -> Self {
        let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or_default();
        Session {
            id: format!("{nanos:x}"),
            base: RevisionStamp(0),
            members: BTreeMap::new(),
            conns: BTreeMap::new(),
            next_conn: 0,
            actions: Vec::new(),
            history: config.record_history.then(Vec::new),
            detect: config.detect,
        }
    }

    fn register(&mut self, tx: mpsc::UnboundedSender<String>, role: Option<Role>) -> ConnId {
        let id = self.next_conn;
        self.next_conn += 1;
        self.conns.insert(id, Conn { tx, author: None, role });
        id
    }

    fn send(&self, conn: ConnId, message: &WireMessage) {
        if let Some(c) = self.conns.get(&conn) {
            let _ = c.tx.send(encode(message));
        }
    }

    /// Sends to every greeted connection except `except`.
    fn fan_out(&self, except: ConnId, message: &WireMessage) {
        let line = encode(message);
        for (id, c) in &self.conns {
            if *id != except && c.role.is_some() {
                let _ = c.tx.send(line.clone());
            }
        }
    }

    fn welcome(&self) -> WireMessage {
        WireMessage::Welcome {
            session_id: self.id.clone(),
            base_revision: self.base,
            snapshot: self.members.values().cloned().collect(),
        }
    }

    fn conflicts(&self) -> BTreeMap<MemberId, Vec<ConflictReport>> {
        let sets: Vec<ChangeSet> = self.members.values().map(|m| m.change_set.clone()).collect();
        self.members
            .iter()
            .map(|(author, m)| {
                let aliases: Vec<_> =
                    self.members.iter().filter(|(a, _)| *a != author).flat_map(|(_, o)| rename_aliases(&o.change_set)).collect();
                (author.clone(), detect_with(&m.change_set, &sets, &aliases, self.detect))
            })
            .collect()
    }

    fn push_conflicts(&self) {
        let observers: Vec<&Conn> = self.conns.values().filter(|c| c.role == Some(Role::Observer)).collect();
        if observers.is_empty() {
            return;
        }
        let line = encode(&WireMessage::Conflicts { reports: self.conflicts() });
        for c in observers {
            let _ = c.tx.send(line.clone());
        }
    }

    fn greet_observer(&mut self, conn: ConnId) {
        self.send(conn, &self.welcome());
        self.send(conn, &WireMessage::Conflicts { reports: self.conflicts() });
    }

    fn handle(&mut self, conn: ConnId, line: &str) -> Flow {
        let message = match decode(line) {
            Ok(m) => m,
            Err(e) => {
                tracing::warn!(conn, error = %e, "closing client after protocol error");
                self.send(conn, &WireMessage::Error { message: e.to_string() });
                return Flow::Close;
            }
        };
        let author = self.conns.get(&conn).filter(|c| c.role == Some(Role::Member)).and_then(|c| c.author.clone());
        match message {
            WireMessage::Hello { author, base_revision, role, .. } => {
                self.base = self.base.max(base_revision);
                if let Some(c) = self.conns.get_mut(&conn) {
                    c.author = Some(author.clone());
                    c.role = Some(role);
                }
                match role {
                    Role::Member => {
                        self.members.entry(author.clone()).or_insert_with(|| MemberChanges::new(author, base_revision));
                        self.send(conn, &self.welcome());
                    }
                    Role::Observer => self.greet_observer(conn),
                }
            }
            WireMessage::Publish { change_set_delta: delta } => {
                let Some(author) = author else {
                    self.send(conn, &WireMessage::Error { message: "PUBLISH requires a member HELLO".into() });
                    return Flow::Continue;
                };
                if delta.author != author {
                    self.send(conn, &WireMessage::Error { message: format!("delta author {} is not {author}", delta.author) });
                    return Flow::Continue;
                }
                let accepted = self.publish(conn, &author, &delta);
                if let Some(h) = &mut self.history {
                    h.push(PublishRecord { delta, accepted });
                }
            }
            WireMessage::Revert { file_path, .. } => {
                let Some(author) = author else {
                    self.send(conn, &WireMessage::Error { message: "REVERT requires a member HELLO".into() });
                    return Flow::Continue;
                };
                if let Some(m) = self.members.get_mut(&author) {
                    m.purge_file(&file_path);
                }
                self.fan_out(conn, &WireMessage::Revert { author, file_path });
                self.push_conflicts();
            }
            WireMessage::Bye { .. } => {
                if let Some(author) = author {
                    self.fan_out(conn, &WireMessage::Bye { author });
                }
                if let Some(c) = self.conns.get_mut(&conn) {
                    c.author = None;
                }
                return Flow::Close;
            }
            other => {
                self.send(conn, &WireMessage::Error { message: format!("unexpected {} from client", other.kind()) });
            }
        }
        Flow::Continue
    }

    fn publish(&mut self, conn: ConnId, author: &MemberId, delta: &ChangeSet) -> bool {
        let reject = |s: &Self, reason: &str| {
            tracing::info!(%author, base = %delta.base_revision, session = %s.base, "rejected publish");
            s.send(conn, &WireMessage::Rejected {
                reason: reason.to_string(),
                base_revision: delta.base_revision,
                session_base_revision: s.base,
            });
            false
        };
        if version_gate(delta, self.base) == GateDecision::Rejected {
            return reject(self, "base revision is older than the session's");
        }
        self.base = self.base.max(delta.base_revision);
        let entry = self.members.entry(author.clone()).or_insert_with(|| MemberChanges::new(author.clone(), delta.base_revision));
        match entry.fold(delta) {
            FoldOutcome::Stale => reject(self, "base revision is older than the stored change set"),
            FoldOutcome::Duplicate => true,
            FoldOutcome::Applied | FoldOutcome::Rebased => {
                self.fan_out(conn, &WireMessage::Broadcast { author: author.clone(), change_set_delta: delta.clone() });
                self.push_conflicts();
                true
            }
        }
    }

    fn disconnect(&mut self, conn: ConnId) {
        if let Some(Conn { author: Some(author), role: Some(Role::Member), .. }) = self.conns.remove(&conn) {
            self.fan_out(conn, &WireMessage::Bye { author });
        }
    }
}

#[derive(Clone)]
struct Shared(Arc<Mutex<Session>>);

impl Shared {
    fn lock(&self) -> MutexGuard<'_, Session> {
        self.0.lock().unwrap_or_else(|e| e.into_inner())
    }
}

pub struct RelayHandle {
    tcp_addr: SocketAddr,
    http_addr: SocketAddr,
    shared: Shared,
    stop: watch::Sender<bool>,
    tasks: Vec<JoinHandle<()>>,
}

impl RelayHandle {
    pub fn tcp_addr(&self) -> SocketAddr {
        self.tcp_addr
    }

    pub fn http_addr(&self) -> SocketAddr {
        self.http_addr
    }

    pub fn session_id(&self) -> String {
        self.shared.lock().id.clone()
    }

    pub fn session_base(&self) -> RevisionStamp {
        self.shared.lock().base
    }

    /// Every member's stored change set, ordered by author.
    pub fn snapshot(&self) -> Vec<MemberChanges> {
        self.shared.lock().members.values().cloned().collect()
    }

    pub fn conflicts(&self) -> BTreeMap<MemberId, Vec<ConflictReport>> {
        self.shared.lock().conflicts()
    }

    pub fn actions(&self) -> Vec<ActionRecord> {
        self.shared.lock().actions.clone()
    }

    /// Received PUBLISH messages in arrival order; empty unless
    /// `record_history` was set.
    pub fn history(&self) -> Vec<PublishRecord> {
        self.shared.lock().history.clone().unwrap_or_default()
    }

    pub async fn shutdown(self) {
        let _ = self.stop.send(true);
        for t in self.tasks {
            let _ = t.await;
        }
    }

    /// Runs until the process is interrupted.
    pub async fn run_until_ctrl_c(self) -> io::Result<()> {
        tokio::signal::ctrl_c().await?;
        self.shutdown().await;
        Ok(())
    }
}

async fn bind_pair(config: &ServerConfig) -> io::Result<(TcpListener, TcpListener)> {
    let bind = |port| TcpListener::bind(SocketAddr::new(config.bind, port));
    if config.port != 0 {
        let tcp = bind(config.port).await?;
        let http = bind(config.http_port.unwrap_or(config.port.wrapping_add(1))).await?;
        return Ok((tcp, http));
    }
    let mut last = io::Error::other("no free port pair");
    for _ in 0..50 {
        let tcp = bind(0).await?;
        let port = tcp.local_addr()?.port();
        let http_port = match config.http_port {
            Some(p) => p,
            None if port == u16::MAX => continue,
            None => port + 1,
        };
        match bind(http_port).await {
            Ok(http) => return Ok((tcp, http)),
            Err(e) => last = e,
        }
    }
    Err(last)
}

pub async fn serve(config: ServerConfig) -> io::Result<RelayHandle> {
    let (tcp, http) = bind_pair(&config).await?;
    let tcp_addr = tcp.local_addr()?;
    let http_addr = http.local_addr()?;
    let shared = Shared(Arc::new(Mutex::new(Session::new(&config))));
    let (stop, stopped) = watch::channel(false);

    let accept = {
        let shared = shared.clone();
        let mut stopped = stopped.clone();
        tokio::spawn(async move {
            let mut conns = JoinSet::new();
            loop {
                tokio::select! {
                    _ = stopped.changed() => break,
                    accepted = tcp.accept() => match accepted {
                        Ok((stream, peer)) => {
                            tracing::debug!(%peer, "workspace connected");
                            conns.spawn(tcp_connection(stream, shared.clone()));
                        }
                        Err(e) => tracing::warn!(error = %e, "accept failed"),
                    },
                    Some(_) = conns.join_next(), if !conns.is_empty() => {}
                }
            }
        })
    };

    let mut app = Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/actions", get(list_actions).post(post_action))
        .with_state(shared.clone());
    if let Some(dir) = &config.dashboard_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    let web = {
        let mut stopped = stopped.clone();
        tokio::spawn(async move {
            let shutdown = async move {
                let _ = stopped.changed().await;
            };
            if let Err(e) = axum::serve(http, app).with_graceful_shutdown(shutdown).await {
                tracing::warn!(error = %e, "http endpoint failed");
            }
        })
    };
    tracing::info!(%tcp_addr, %http_addr, "relay listening");
    Ok(RelayHandle { tcp_addr, http_addr, shared, stop, tasks: vec![accept, web] })
}

async fn tcp_connection(stream: TcpStream, shared: Shared) {
    let (read, mut write) = stream.into_split();
    let (tx, mut rx) = mpsc::unbounded_channel::<String>();
    let id = shared.lock().register(tx, None);
    let writer = tokio::spawn(async move {
        while let Some(mut line) = rx.recv().await {
            line.push('\n');
            if write.write_all(line.as_bytes()).await.is_err() {
                break;
            }
        }
        let _ = write.shutdown().await;
    });
    let mut lines = BufReader::new(read).lines();
    loop {
        match lines.next_line().await {
            Ok(Some(line)) if line.trim().is_empty() => continue,
            Ok(Some(line)) => {
                if shared.lock().handle(id, &line) == Flow::Close {
                    break;
                }
            }
            Ok(None) => break,
            Err(e) => {
                shared.lock().send(id, &WireMessage::Error { message: e.to_string() });
                break;
            }
        }
    }
    shared.lock().disconnect(id);
    let _ = writer.await;
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(shared): State<Shared>) -> Response {
    ws.on_upgrade(move |socket| ws_connection(socket, shared))
}

async fn ws_connection(socket: WebSocket, shared: Shared) {
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<String>();
    let id = {
        let mut s = shared.lock();
        let id = s.register(tx, Some(Role::Observer));
        s.greet_observer(id);
        id
    };
    let writer = tokio::spawn(async move {
        while let Some(line) = rx.recv().await {
            if sink.send(Message::Text(line.into())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });
    while let Some(Ok(message)) = stream.next().await {
        match message {
            Message::Text(text) => {
                if shared.lock().handle(id, text.as_str()) == Flow::Close {
                    break;
                }
            }
            Message::Close(_) => break,
            _ => {}
        }
    }
    shared.lock().disconnect(id);
    let _ = writer.await;
}

async fn post_action(State(shared): State<Shared>, Json(record): Json<ActionRecord>) -> StatusCode {
    tracing::info!(member = %record.member, path = %record.path_id, action = %record.action, "action chosen");
    shared.lock().actions.push(record);
    StatusCode::NO_CONTENT
}

async fn list_actions(State(shared): State<Shared>) -> Json<Vec<ActionRecord>> {
    Json(shared.lock().actions.clone())
}
