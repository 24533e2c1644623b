//! Exchanging change sets between workspaces through a relay.

pub mod client;
pub mod gate;
pub mod protocol;
pub mod remote;
pub mod server;

pub use client::{ClientConfig, ClientEvent, RelayClient};
pub use gate::{Backoff, FileSnapshot, GateResult, PublishGate};
pub use protocol::{decode, encode, ProtocolError, Role, WireMessage, DEFAULT_PORT};
pub use remote::{client_apply, Applied, RemoteState};
pub use server::{serve, ActionRecord, PublishRecord, RelayHandle, ServerConfig};
