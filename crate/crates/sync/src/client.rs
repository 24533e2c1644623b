//! Workspace-side relay connection. Reconnects with backoff and keeps
//! unsent messages queued until a connection accepts them.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use conflict_radar_core::model::{ChangeSet, MemberId, RevisionStamp};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::TcpStream;
use tokio::sync::mpsc;
use tokio::task::JoinHandle;

use crate::gate::Backoff;
use crate::protocol::{decode, encode, Role, WireMessage};

#[derive(Debug, Clone)]
pub struct ClientConfig {
    /// `host:port` of the relay's TCP endpoint.
    pub server: String,
    pub author: MemberId,
    pub project: String,
    pub base_revision: RevisionStamp,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClientEvent {
    Connected,
    Message(WireMessage),
    Disconnected(String),
}

pub struct RelayClient {
    outbound: Option<mpsc::UnboundedSender<WireMessage>>,
    events: mpsc::UnboundedReceiver<ClientEvent>,
    base: Arc<AtomicU64>,
    author: MemberId,
    task: JoinHandle<()>,
}

impl RelayClient {
    /// Starts the connection loop. Must be called inside a Tokio runtime.
    pub fn connect(config: ClientConfig) -> Self {
        let (out_tx, out_rx) = mpsc::unbounded_channel();
        let (ev_tx, ev_rx) = mpsc::unbounded_channel();
        let base = Arc::new(AtomicU64::new(config.base_revision.0));
        let author = config.author.clone();
        let task = tokio::spawn(run(config, base.clone(), out_rx, ev_tx));
        RelayClient { outbound: Some(out_tx), events: ev_rx, base, author, task }
    }

    pub fn author(&self) -> &MemberId {
        &self.author
    }

    pub fn send(&self, message: WireMessage) {
        if let Some(tx) = &self.outbound {
            let _ = tx.send(message);
        }
    }

    pub fn publish(&self, delta: ChangeSet) {
        self.send(WireMessage::Publish { change_set_delta: delta });
    }

    pub fn revert(&self, file_path: impl Into<String>) {
        self.send(WireMessage::Revert { author: self.author.clone(), file_path: file_path.into() });
    }

    /// Base revision announced in HELLO on the next (re)connect.
    pub fn set_base_revision(&self, base: RevisionStamp) {
        self.base.store(base.0, Ordering::SeqCst);
    }

    pub async fn next_event(&mut self) -> Option<ClientEvent> {
        self.events.recv().await
    }

    pub fn try_next_event(&mut self) -> Option<ClientEvent> {
        self.events.try_recv().ok()
    }

    /// Sends BYE after flushing queued messages, then closes.
    pub async fn close(mut self) {
        self.outbound.take();
        let _ = self.task.await;
    }
}

enum Exit {
    Reconnect(String),
    Done,
}

async fn run(
    config: ClientConfig,
    base: Arc<AtomicU64>,
    mut outbound: mpsc::UnboundedReceiver<WireMessage>,
    events: mpsc::UnboundedSender<ClientEvent>,
) {
    let mut backoff = Backoff::new();
    let mut pending: VecDeque<WireMessage> = VecDeque::new();
    let mut closing = false;
    loop {
        let stream = match TcpStream::connect(&config.server).await {
            Ok(s) => s,
            Err(e) => {
                let _ = events.send(ClientEvent::Disconnected(e.to_string()));
                if closing {
                    return;
                }
                let delay = backoff.next_delay();
                tracing::debug!(?delay, error = %e, "relay unreachable, retrying");
                // Keep accepting messages while waiting so nothing is lost.
                let sleep = tokio::time::sleep(delay);
                tokio::pin!(sleep);
                loop {
                    tokio::select! {
                        _ = &mut sleep => break,
                        m = outbound.recv(), if !closing => match m {
                            Some(m) => pending.push_back(m),
                            None => closing = true,
                        },
                    }
                }
                continue;
            }
        };
        backoff.reset();
        match session(&config, &base, stream, &mut outbound, &mut pending, &events, &mut closing).await {
            Exit::Done => return,
            Exit::Reconnect(reason) => {
                let _ = events.send(ClientEvent::Disconnected(reason));
                if closing && pending.is_empty() {
                    return;
                }
            }
        }
    }
}

async fn session(
    config: &ClientConfig,
    base: &AtomicU64,
    stream: TcpStream,
    outbound: &mut mpsc::UnboundedReceiver<WireMessage>,
    pending: &mut VecDeque<WireMessage>,
    events: &mpsc::UnboundedSender<ClientEvent>,
    closing: &mut bool,
) -> Exit {
    let (read, mut write) = stream.into_split();
    let mut lines = BufReader::new(read).lines();
    let hello = WireMessage::Hello {
        author: config.author.clone(),
        project: config.project.clone(),
        base_revision: RevisionStamp(base.load(Ordering::SeqCst)),
        role: config.role,
    };
    if let Err(e) = write_line(&mut write, &hello).await {
        return Exit::Reconnect(e.to_string());
    }
    let _ = events.send(ClientEvent::Connected);
    loop {
        while let Some(m) = pending.front() {
            if let Err(e) = write_line(&mut write, m).await {
                return Exit::Reconnect(e.to_string());
            }
            pending.pop_front();
        }
        if *closing {
            let _ = write_line(&mut write, &WireMessage::Bye { author: config.author.clone() }).await;
            let _ = write.shutdown().await;
            return Exit::Done;
        }
        tokio::select! {
            line = lines.next_line() => match line {
                Ok(Some(line)) if line.trim().is_empty() => {}
                Ok(Some(line)) => match decode(&line) {
                    Ok(m) => {
                        let _ = events.send(ClientEvent::Message(m));
                    }
                    Err(e) => tracing::warn!(error = %e, "ignoring malformed line from relay"),
                },
                Ok(None) => return Exit::Reconnect("relay closed the connection".into()),
                Err(e) => return Exit::Reconnect(e.to_string()),
            },
            m = outbound.recv() => match m {
                Some(m) => pending.push_back(m),
                None => *closing = true,
            },
        }
    }
}

async fn write_line(write: &mut tokio::net::tcp::OwnedWriteHalf, message: &WireMessage) -> std::io::Result<()> {
    let mut line = encode(message);
    line.push('\n');
    write.write_all(line.as_bytes()).await
}
