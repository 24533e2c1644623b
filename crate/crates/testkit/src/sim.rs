//! In-process relay simulations: a real server on an ephemeral port and
//! members that edit generated units, publish through the gate and fold
//! what they receive.

use std::time::Duration;

use conflict_radar_core::model::{ChangeKind, ChangeSet, MemberId, RevisionStamp};
use conflict_radar_core::syntax::parse_unit;
use conflict_radar_sync::{
    serve, ClientConfig, ClientEvent, FileSnapshot, GateResult, PublishGate, RelayClient, RelayHandle, RemoteState, Role,
    ServerConfig, WireMessage,
};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::gen::{mutate, rich_unit, UnitModel};
use crate::{seeded, TestRng};

pub const PROJECT: &str = "Zoo";
pub const FILE: &str = "Zebra.java";
const WAIT: Duration = Duration::from_secs(10);

pub async fn start_relay() -> RelayHandle {
    serve(ServerConfig { port: 0, record_history: true, ..ServerConfig::default() }).await.expect("relay starts")
}

pub fn connect(relay: &RelayHandle, author: &str, base: u64) -> RelayClient {
    RelayClient::connect(ClientConfig {
        server: relay.tcp_addr().to_string(),
        author: MemberId::new(author),
        project: PROJECT.into(),
        base_revision: RevisionStamp(base),
        role: Role::Member,
    })
}

/// Next relay message, skipping connection events.
pub async fn next_message(client: &mut RelayClient) -> Option<WireMessage> {
    let deadline = tokio::time::Instant::now() + WAIT;
    loop {
        match tokio::time::timeout_at(deadline, client.next_event()).await {
            Ok(Some(ClientEvent::Message(m))) => return Some(m),
            Ok(Some(_)) => continue,
            Ok(None) | Err(_) => return None,
        }
    }
}

/// Waits for the first message of the given type, discarding others.
pub async fn expect(client: &mut RelayClient, kind: &str) -> WireMessage {
    loop {
        match next_message(client).await {
            Some(m) if m.kind() == kind => return m,
            Some(_) => continue,
            None => panic!("timed out waiting for {kind}"),
        }
    }
}

struct Member {
    id: MemberId,
    unit: UnitModel,
    gate: PublishGate,
    client: RelayClient,
    remote: RemoteState,
}

impl Member {
    async fn join(relay: &RelayHandle, name: &str, unit: &UnitModel) -> Member {
        let id = MemberId::new(name);
        let mut gate = PublishGate::new(PROJECT, id.clone(), RevisionStamp(1));
        gate.set_baseline(parse_unit(&unit.render(), FILE).expect("generated units parse"));
        let mut client = connect(relay, name, 1);
        let mut remote = RemoteState::new(id.clone(), RevisionStamp(1));
        remote.apply(&expect(&mut client, "WELCOME").await);
        Member { id, unit: unit.clone(), gate, client, remote }
    }

    fn pump(&mut self) {
        while let Some(event) = self.client.try_next_event() {
            if let ClientEvent::Message(m) = event {
                self.remote.apply(&m);
            }
        }
    }

    fn edit(&mut self, rng: &mut TestRng) -> Option<ChangeSet> {
        let kind = *ChangeKind::ALL.choose(rng).unwrap();
        mutate(&mut self.unit, kind, PROJECT, rng)?;
        match self.gate.publish_if_error_free(&[FileSnapshot::new(FILE, self.unit.render())], 0) {
            GateResult::Published(delta) if !delta.is_empty() => Some(delta),
            _ => None,
        }
    }

    /// Every remote set equals the relay's stored copy, byte for byte.
    fn agrees_with(&self, relay: &RelayHandle) -> Result<(), String> {
        for stored in relay.snapshot() {
            let author = &stored.change_set.author;
            if *author == self.id {
                continue;
            }
            let mine = match self.remote.member(author) {
                Some(m) => m.change_set.to_canonical_json(),
                None => ChangeSet::new(author.clone(), stored.change_set.base_revision).to_canonical_json(),
            };
            if mine != stored.change_set.to_canonical_json() {
                return Err(format!("{} disagrees with the relay about {author}", self.id));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceOutcome {
    pub members: usize,
    pub publishes: usize,
    pub duplicates: usize,
    pub disagreements: Vec<String>,
}

impl ConvergenceOutcome {
    pub fn converged(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// `members` workspaces each make `steps` random edits to a shared file,
/// with occasional duplicate deliveries; afterwards every view must match
/// the relay.
pub async fn convergence(members: usize, steps: usize, seed: u64) -> ConvergenceOutcome {
    let mut rng = seeded(seed);
    let relay = start_relay().await;
    let base = rich_unit(&mut rng, FILE);
    let mut team = Vec::new();
    for i in 0..members {
        team.push(Member::join(&relay, &format!("dev{i}"), &base).await);
    }
    let (mut publishes, mut duplicates) = (0, 0);
    for _ in 0..steps {
        for m in team.iter_mut() {
            if let Some(delta) = m.edit(&mut rng) {
                m.client.publish(delta.clone());
                publishes += 1;
                if rng.gen_bool(0.15) {
                    m.client.publish(delta);
                    duplicates += 1;
                }
            }
            m.pump();
        }
    }
    let expected = publishes + duplicates;
    let mut disagreements: Vec<String>;
    let deadline = tokio::time::Instant::now() + WAIT;
    loop {
        for m in team.iter_mut() {
            m.pump();
        }
        disagreements = team.iter().filter_map(|m| m.agrees_with(&relay).err()).collect();
        if relay.history().len() == expected && disagreements.is_empty() {
            break;
        }
        if tokio::time::Instant::now() > deadline {
            if relay.history().len() != expected {
                disagreements.push(format!("relay received {} of {expected} publishes", relay.history().len()));
            }
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    for m in team {
        m.client.close().await;
    }
    relay.shutdown().await;
    ConvergenceOutcome { members, publishes, duplicates, disagreements }
}

/// Breaks `source` so that it no longer parses, or returns `None` if the
/// chosen corruption happened to leave it parseable.
pub fn corrupt(source: &str, rng: &mut TestRng) -> Option<String> {
    let broken = match rng.gen_range(0..5) {
        0 => {
            let cut = source.rfind('}')?;
            format!("{}{}", &source[..cut], &source[cut + 1..])
        }
        1 => format!("{source}\nvoid ("),
        2 => format!("{source}\n\"unterminated"),
        3 => format!("{source}\n/* open comment"),
        _ => {
            let lines: Vec<&str> = source.lines().collect();
            let at = rng.gen_range(0..=lines.len());
            let mut out: Vec<&str> = lines[..at].to_vec();
            out.push("int int = ;");
            out.extend(&lines[at..]);
            out.join("\n")
        }
    };
    parse_unit(&broken, FILE).is_err().then_some(broken)
}

#[derive(Debug, Clone)]
pub struct FaultOutcome {
    pub faults: usize,
    /// Publishes sent while the workspace held an unparseable file.
    pub leaked: usize,
    pub sent: usize,
    pub received: usize,
}

/// Alternates valid edits with injected unparseable states and checks that
/// the relay receives exactly the publishes sent from error-free states.
pub async fn gate_faults(faults: usize, seed: u64) -> FaultOutcome {
    let mut rng = seeded(seed);
    let relay = start_relay().await;
    let base = rich_unit(&mut rng, FILE);
    let mut member = Member::join(&relay, "dev0", &base).await;
    let (mut injected, mut leaked, mut sent) = (0, 0, 0);
    while injected < faults {
        if let Some(delta) = member.edit(&mut rng) {
            member.client.publish(delta);
            sent += 1;
        }
        let Some(broken) = corrupt(&member.unit.render(), &mut rng) else { continue };
        injected += 1;
        if let GateResult::Published(delta) = member.gate.publish_if_error_free(&[FileSnapshot::new(FILE, broken)], 0) {
            leaked += 1;
            member.client.publish(delta);
            sent += 1;
        }
    }
    let deadline = tokio::time::Instant::now() + WAIT;
    while relay.history().len() < sent && tokio::time::Instant::now() < deadline {
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    let received = relay.history().len();
    member.client.close().await;
    relay.shutdown().await;
    FaultOutcome { faults: injected, leaked, sent, received }
}
