//! Relay wire messages. One message per line, encoded as JSON with a
//! `type` discriminator and camelCase fields.

use std::collections::BTreeMap;

use conflict_radar_core::distill::MemberChanges;
use conflict_radar_core::model::{ChangeSet, ConflictReport, MemberId, RevisionStamp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_PORT: u16 = 7341;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    #[default]
    Member,
    Observer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE", rename_all_fields = "camelCase")]
pub enum WireMessage {
    Hello {
        author: MemberId,
        project: String,
        base_revision: RevisionStamp,
        #[serde(default)]
        role: Role,
    },
    Welcome {
        session_id: String,
        base_revision: RevisionStamp,
        snapshot: Vec<MemberChanges>,
    },
    Publish {
        change_set_delta: ChangeSet,
    },
    Broadcast {
        author: MemberId,
        change_set_delta: ChangeSet,
    },
    Revert {
        author: MemberId,
        file_path: String,
    },
    Bye {
        author: MemberId,
    },
    Conflicts {
        reports: BTreeMap<MemberId, Vec<ConflictReport>>,
    },
    Rejected {
        reason: String,
        base_revision: RevisionStamp,
        session_base_revision: RevisionStamp,
    },
    Error {
        message: String,
    },
}

impl WireMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            WireMessage::Hello { .. } => "HELLO",
            WireMessage::Welcome { .. } => "WELCOME",
            WireMessage::Publish { .. } => "PUBLISH",
            WireMessage::Broadcast { .. } => "BROADCAST",
            WireMessage::Revert { .. } => "REVERT",
            WireMessage::Bye { .. } => "BYE",
            WireMessage::Conflicts { .. } => "CONFLICTS",
            WireMessage::Rejected { .. } => "REJECTED",
            WireMessage::Error { .. } => "ERROR",
        }
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("message spans more than one line")]
    Multiline,
}

/// Encodes a message as a single line without the trailing newline.
pub fn encode(message: &WireMessage) -> String {
    serde_json::to_string(message).expect("wire messages always serialize")
}

pub fn decode(line: &str) -> Result<WireMessage, ProtocolError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    if line.contains('\n') {
        return Err(ProtocolError::Multiline);
    }
    Ok(serde_json::from_str(line)?)
}
