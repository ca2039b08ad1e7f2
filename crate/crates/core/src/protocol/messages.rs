//! Typed messages, the envelope format and replay logs.
//!
//! Envelope: type u8 ∥ sender u32 ∥ receiver u32 ∥ time u64 ∥ payload.
//! A replay log is a sequence of (length u32 ∥ envelope).

use super::NodeId;
use crate::auth::{OkResponse, RevocationProof, SignedRoot};
use crate::tree::{encode_delta, read_delta, MutationReport};
use crate::wire::{Put, Reader, WireError};

/// Tree update for one RSU.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Delta {
    /// Reports to apply in order, then the root they lead to.
    Incremental {
        reports: Vec<MutationReport>,
        root: SignedRoot,
    },
    /// Full `KREV` tree file plus the tombstoned slots it cannot express.
    Reload {
        tree: Vec<u8>,
        tombstones: Vec<u64>,
        root: SignedRoot,
    },
}

impl Delta {
    pub fn root(&self) -> &SignedRoot {
        match self {
            Delta::Incremental { root, .. } | Delta::Reload { root, .. } => root,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    Proof(RevocationProof),
    Ok(OkResponse),
}

impl Answer {
    pub fn serial(&self) -> &[u8] {
        match self {
            Answer::Proof(p) => &p.serial,
            Answer::Ok(ok) => &ok.queried_serial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Impeachment {
    pub accused_rsu_id: NodeId,
    pub reporter_obu_id: NodeId,
    pub ok: OkResponse,
    pub proof: RevocationProof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Delta(Delta),
    Query { serial: Vec<u8> },
    Answer(Answer),
    Impeachment(Impeachment),
    RsuRevoked { rsu_id: NodeId },
}

impl Payload {
    pub fn type_code(&self) -> u8 {
        match self {
            Payload::Delta(Delta::Incremental { .. }) => 1,
            Payload::Delta(Delta::Reload { .. }) => 2,
            Payload::Query { .. } => 3,
            Payload::Answer(Answer::Proof(_)) => 4,
            Payload::Answer(Answer::Ok(_)) => 5,
            Payload::Impeachment(_) => 6,
            Payload::RsuRevoked { .. } => 7,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Payload::Delta(Delta::Incremental { reports, root }) => {
                out.put(&root.to_bytes());
                out.put_u32(reports.len() as u32);
                for r in reports {
                    out.put(&encode_delta(r));
                }
            }
            Payload::Delta(Delta::Reload { tree, tombstones, root }) => {
                out.put(&root.to_bytes());
                out.put_u32(tree.len() as u32);
                out.put(tree);
                out.put_u32(tombstones.len() as u32);
                for &slot in tombstones {
                    out.put_u64(slot);
                }
            }
            Payload::Query { serial } => {
                out.put_u16(serial.len() as u16);
                out.put(serial);
            }
            Payload::Answer(Answer::Proof(p)) => out.put(&p.to_bytes()),
            Payload::Answer(Answer::Ok(ok)) => out.put(&ok.to_bytes()),
            Payload::Impeachment(imp) => {
                out.put_u32(imp.accused_rsu_id);
                out.put_u32(imp.reporter_obu_id);
                out.put(&imp.ok.to_bytes());
                out.put(&imp.proof.to_bytes());
            }
            Payload::RsuRevoked { rsu_id } => out.put_u32(*rsu_id),
        }
        out
    }

    fn read(type_code: u8, r: &mut Reader<'_>) -> Result<Self, WireError> {
        Ok(match type_code {
            1 => {
                let root = SignedRoot::read(r)?;
                let count = r.u32()? as usize;
                let mut reports = Vec::with_capacity(count.min(1024));
                for _ in 0..count {
                    reports.push(read_delta(r)?);
                }
                Payload::Delta(Delta::Incremental { reports, root })
            }
            2 => {
                let root = SignedRoot::read(r)?;
                let len = r.u32()? as usize;
                let tree = r.bytes(len)?.to_vec();
                let count = r.u32()? as usize;
                let mut tombstones = Vec::with_capacity(count.min(1 << 16));
                for _ in 0..count {
                    tombstones.push(r.u64()?);
                }
                Payload::Delta(Delta::Reload { tree, tombstones, root })
            }
            3 => {
                let len = usize::from(r.u16()?);
                Payload::Query { serial: r.bytes(len)?.to_vec() }
            }
            4 => Payload::Answer(Answer::Proof(RevocationProof::read(r)?)),
            5 => Payload::Answer(Answer::Ok(OkResponse::read(r)?)),
            6 => {
                let accused_rsu_id = r.u32()?;
                let reporter_obu_id = r.u32()?;
                let ok = OkResponse::read(r)?;
                let proof = RevocationProof::read(r)?;
                Payload::Impeachment(Impeachment { accused_rsu_id, reporter_obu_id, ok, proof })
            }
            7 => Payload::RsuRevoked { rsu_id: r.u32()? },
            t => return Err(WireError::Invalid(format!("message type {t}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub sender: NodeId,
    pub receiver: NodeId,
    pub time: u64,
    pub payload: Payload,
}

impl Envelope {
    pub fn new(sender: NodeId, receiver: NodeId, time: u64, payload: Payload) -> Self {
        Self { sender, receiver, time, payload }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let payload = self.payload.to_bytes();
        let mut out = Vec::with_capacity(17 + payload.len());
        out.put_u8(self.payload.type_code());
        out.put_u32(self.sender);
        out.put_u32(self.receiver);
        out.put_u64(self.time);
        out.put(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        let type_code = r.u8()?;
        let sender = r.u32()?;
        let receiver = r.u32()?;
        let time = r.u64()?;
        let payload = Payload::read(type_code, &mut r)?;
        r.finish()?;
        Ok(Self { sender, receiver, time, payload })
    }
}

pub fn write_replay_log<'a>(envelopes: impl IntoIterator<Item = &'a Envelope>) -> Vec<u8> {
    let mut out = Vec::new();
    for env in envelopes {
        let bytes = env.to_bytes();
        out.put_u32(bytes.len() as u32);
        out.put(&bytes);
    }
    out
}

pub fn read_replay_log(bytes: &[u8]) -> Result<Vec<Envelope>, WireError> {
    let mut r = Reader::new(bytes);
    let mut out = Vec::new();
    while !r.is_empty() {
        let len = r.u32()? as usize;
        out.push(Envelope::from_bytes(r.bytes(len)?)?);
    }
    Ok(out)
}
