//! TTP, RSU and OBU as single-threaded state machines.
//!
//! Roles never share state: everything crosses between them as an
//! [`Envelope`], delivered by whoever drives the machines (the simulator or
//! a test). Node ids are `u32`; the TTP is [`TTP_ID`] and [`BROADCAST`]
//! addresses every node.

mod messages;
mod obu;
mod rsu;
mod ttp;

pub use messages::{
    read_replay_log, write_replay_log, Answer, Delta, Envelope, Impeachment, Payload,
};
pub use obu::{CacheChange, Obu, ObuAction, PendingOk, Precheck, ReliableEntry, TrustCache};
pub use rsu::{Rsu, RsuBehaviour};
pub use ttp::{ImpeachmentReject, PseudonymGroup, Ttp};

use crate::tree::TreeError;
use crate::wire::WireError;

pub type NodeId = u32;

pub const TTP_ID: NodeId = 0;
pub const BROADCAST: NodeId = NodeId::MAX;
pub const DEFAULT_TRUST_THRESHOLD: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("unknown OBU {0}")]
    UnknownObu(NodeId),
    #[error("unknown RSU {0}")]
    UnknownRsu(NodeId),
    #[error("OBU {0} is already registered")]
    DuplicateObu(NodeId),
    #[error("pseudonym already belongs to a group")]
    DuplicatePseudonym,
    #[error("signed root does not verify under the TTP key")]
    BadRootSignature,
    #[error("tree after update does not match the signed root")]
    RootMismatch,
    #[error("unexpected message: {0}")]
    Unexpected(&'static str),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Wire(#[from] WireError),
}

#[cfg(test)]
mod tests;
