use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Delta, Envelope, Impeachment, NodeId, Payload, ProtocolError, BROADCAST, TTP_ID};
use crate::auth::{sign_root, verify_proof, ProofReject, SignatureScheme, SignedRoot};
use crate::keccak::Digest;
use crate::tree::{MutationReport, RevocationTree, SerialNumber, TreeParams};

/// All pseudonyms issued to one OBU.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudonymGroup {
    pub obu_id: NodeId,
    pub pseudonyms: Vec<SerialNumber>,
    /// Opaque references to the pseudonyms' private keys, held by the OBU.
    pub key_handles: Vec<u64>,
}

impl PseudonymGroup {
    pub fn new(obu_id: NodeId, pseudonyms: Vec<SerialNumber>) -> Self {
        let key_handles = (0..pseudonyms.len() as u64).map(|i| (u64::from(obu_id) << 32) | i).collect();
        Self { obu_id, pseudonyms, key_handles }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImpeachmentReject {
    #[error("accused RSU is unknown")]
    UnknownRsu,
    #[error("accused RSU is already revoked")]
    AlreadyRevoked,
    #[error("OK was not issued by the accused RSU")]
    RsuMismatch,
    #[error("OK signature does not verify")]
    BadOkSignature,
    #[error("contradicting proof rejected: {0}")]
    BadProof(ProofReject),
    #[error("proof and OK concern different serials")]
    SerialMismatch,
    #[error("OK is newer than the proof")]
    VersionOrder,
    #[error("serial was not yet revoked at the OK's tree version")]
    NotYetRevoked,
}

#[derive(Debug, Clone)]
struct RsuRecord<V> {
    key: V,
    revoked: bool,
}

/// Tree owner. Registers pseudonym groups and RSUs, revokes OBUs, expires
/// entries, and judges impeachments.
#[derive(Debug, Clone)]
pub struct Ttp<S: SignatureScheme> {
    scheme: S,
    key: S::SigningKey,
    signer_id: u16,
    tree: RevocationTree,
    root: SignedRoot,
    groups: BTreeMap<NodeId, PseudonymGroup>,
    owner: HashMap<Digest, NodeId>,
    revoked_obus: BTreeSet<NodeId>,
    rsus: BTreeMap<NodeId, RsuRecord<S::VerifyingKey>>,
    inserted_at: HashMap<Digest, u64>,
}

impl<S: SignatureScheme> Ttp<S> {
    pub fn new(scheme: S, key: S::SigningKey, signer_id: u16, params: TreeParams, now: u64) -> Self {
        let tree = RevocationTree::new(params);
        let root = sign_root(&tree, &scheme, &key, signer_id, now);
        Self {
            scheme,
            key,
            signer_id,
            tree,
            root,
            groups: BTreeMap::new(),
            owner: HashMap::new(),
            revoked_obus: BTreeSet::new(),
            rsus: BTreeMap::new(),
            inserted_at: HashMap::new(),
        }
    }

    pub fn verifying_key(&self) -> S::VerifyingKey {
        self.scheme.verifying_key(&self.key)
    }

    pub fn tree(&self) -> &RevocationTree {
        &self.tree
    }

    pub fn signed_root(&self) -> &SignedRoot {
        &self.root
    }

    pub fn group(&self, obu_id: NodeId) -> Option<&PseudonymGroup> {
        self.groups.get(&obu_id)
    }

    pub fn is_obu_revoked(&self, obu_id: NodeId) -> bool {
        self.revoked_obus.contains(&obu_id)
    }

    pub fn is_rsu_revoked(&self, rsu_id: NodeId) -> bool {
        self.rsus.get(&rsu_id).is_some_and(|r| r.revoked)
    }

    pub fn revoked_rsus(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.rsus.iter().filter(|(_, r)| r.revoked).map(|(&id, _)| id)
    }

    pub fn register_group(&mut self, group: PseudonymGroup) -> Result<(), ProtocolError> {
        if self.groups.contains_key(&group.obu_id) {
            return Err(ProtocolError::DuplicateObu(group.obu_id));
        }
        let digests: Vec<Digest> = group.pseudonyms.iter().map(SerialNumber::digest).collect();
        let distinct: BTreeSet<&Digest> = digests.iter().collect();
        if distinct.len() != digests.len() || digests.iter().any(|d| self.owner.contains_key(d)) {
            return Err(ProtocolError::DuplicatePseudonym);
        }
        for d in digests {
            self.owner.insert(d, group.obu_id);
        }
        self.groups.insert(group.obu_id, group);
        Ok(())
    }

    /// Registers an RSU and returns the full-tree message that bootstraps it.
    pub fn register_rsu(&mut self, rsu_id: NodeId, key: S::VerifyingKey, now: u64) -> Envelope {
        self.rsus.insert(rsu_id, RsuRecord { key, revoked: false });
        Envelope::new(TTP_ID, rsu_id, now, Payload::Delta(self.reload_delta()))
    }

    /// Inserts every pseudonym of the OBU, re-signs the root and returns one
    /// delta per active RSU. Revoking twice is a no-op.
    pub fn revoke_obu(&mut self, obu_id: NodeId, now: u64) -> Result<Vec<Envelope>, ProtocolError> {
        let group = self.groups.get(&obu_id).ok_or(ProtocolError::UnknownObu(obu_id))?;
        if self.revoked_obus.contains(&obu_id) {
            return Ok(Vec::new());
        }
        let mut reports = Vec::with_capacity(group.pseudonyms.len());
        for serial in group.pseudonyms.clone() {
            let digest = serial.digest();
            let report = self.tree.insert(serial)?;
            self.inserted_at.insert(digest, report.version);
            reports.push(report);
        }
        self.revoked_obus.insert(obu_id);
        Ok(self.publish(reports, now))
    }

    /// Runs the expiry sweep; returns deltas only if the tree changed.
    pub fn periodic_update(&mut self, now: u64) -> Vec<Envelope> {
        let report = self.tree.expire_sweep(now);
        if report.is_empty() {
            return Vec::new();
        }
        if report.is_reconstruction() {
            let live: BTreeSet<Digest> = self.tree.leaves().iter().map(|l| l.digest).collect();
            self.inserted_at.retain(|d, _| live.contains(d));
        }
        self.publish(vec![report], now)
    }

    fn publish(&mut self, reports: Vec<MutationReport>, now: u64) -> Vec<Envelope> {
        self.root = sign_root(&self.tree, &self.scheme, &self.key, self.signer_id, now);
        let delta = if reports.iter().any(MutationReport::is_reconstruction) {
            self.reload_delta()
        } else {
            Delta::Incremental { reports, root: self.root.clone() }
        };
        self.rsus
            .iter()
            .filter(|(_, r)| !r.revoked)
            .map(|(&id, _)| Envelope::new(TTP_ID, id, now, Payload::Delta(delta.clone())))
            .collect()
    }

    fn reload_delta(&self) -> Delta {
        let tombstones = self
            .tree
            .leaves()
            .iter()
            .enumerate()
            .filter(|(_, l)| l.tombstoned)
            .map(|(slot, _)| slot as u64)
            .collect();
        Delta::Reload {
            tree: self.tree.to_bytes().expect("TTP leaves carry serials"),
            tombstones,
            root: self.root.clone(),
        }
    }

    /// Validates an impeachment. On success the RSU is revoked and a
    /// broadcast notice is returned; on failure nothing changes.
    pub fn handle_impeachment(
        &mut self,
        imp: &Impeachment,
        now: u64,
    ) -> Result<Vec<Envelope>, ImpeachmentReject> {
        let record = self.rsus.get(&imp.accused_rsu_id).ok_or(ImpeachmentReject::UnknownRsu)?;
        if record.revoked {
            return Err(ImpeachmentReject::AlreadyRevoked);
        }
        if imp.ok.rsu_id != imp.accused_rsu_id {
            return Err(ImpeachmentReject::RsuMismatch);
        }
        if !self.scheme.verify(&record.key, &imp.ok.signed_message(), &imp.ok.signature) {
            return Err(ImpeachmentReject::BadOkSignature);
        }
        verify_proof(&imp.proof, &self.scheme, &self.verifying_key())
            .map_err(ImpeachmentReject::BadProof)?;
        if imp.proof.serial != imp.ok.queried_serial {
            return Err(ImpeachmentReject::SerialMismatch);
        }
        if imp.proof.signed_root.tree_version < imp.ok.tree_version {
            return Err(ImpeachmentReject::VersionOrder);
        }
        let digest = crate::keccak::hash(&imp.proof.serial);
        match self.inserted_at.get(&digest) {
            Some(&v) if v <= imp.ok.tree_version => {}
            _ => return Err(ImpeachmentReject::NotYetRevoked),
        }
        self.rsus.get_mut(&imp.accused_rsu_id).expect("checked above").revoked = true;
        Ok(vec![Envelope::new(
            TTP_ID,
            BROADCAST,
            now,
            Payload::RsuRevoked { rsu_id: imp.accused_rsu_id },
        )])
    }
}
