use super::{Answer, Delta, Envelope, Impeachment, NodeId, Payload, ProtocolError, TTP_ID};
use crate::auth::{build_proof, sign_ok, SignatureScheme, SignedRoot};
use crate::tree::{RevocationStatus, RevocationTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RsuBehaviour {
    #[default]
    Honest,
    /// Answers OK for every serial, revoked or not.
    OkForRevoked,
}

/// Road-side unit: a replica of the TTP tree kept current by deltas.
#[derive(Debug, Clone)]
pub struct Rsu<S: SignatureScheme> {
    id: NodeId,
    scheme: S,
    key: S::SigningKey,
    ttp_key: S::VerifyingKey,
    behaviour: RsuBehaviour,
    tree: RevocationTree,
    root: Option<SignedRoot>,
    revoked: bool,
}

impl<S: SignatureScheme> Rsu<S> {
    /// Starts with an empty replica; the TTP's registration message fills it.
    pub fn new(
        id: NodeId,
        scheme: S,
        key: S::SigningKey,
        ttp_key: S::VerifyingKey,
        params: TreeParams,
        behaviour: RsuBehaviour,
    ) -> Self {
        Self {
            id,
            scheme,
            key,
            ttp_key,
            behaviour,
            tree: RevocationTree::new(params),
            root: None,
            revoked: false,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn behaviour(&self) -> RsuBehaviour {
        self.behaviour
    }

    pub fn verifying_key(&self) -> S::VerifyingKey {
        self.scheme.verifying_key(&self.key)
    }

    pub fn tree(&self) -> &RevocationTree {
        &self.tree
    }

    pub fn signed_root(&self) -> Option<&SignedRoot> {
        self.root.as_ref()
    }

    pub fn tree_version(&self) -> u64 {
        self.tree.version()
    }

    pub fn is_revoked(&self) -> bool {
        self.revoked
    }

    /// Applies a TTP delta. The resulting tree must match the signed root,
    /// otherwise the replica is left unchanged.
    pub fn apply_delta(&mut self, delta: &Delta) -> Result<(), ProtocolError> {
        let root = delta.root();
        if !root.verify(&self.scheme, &self.ttp_key) {
            return Err(ProtocolError::BadRootSignature);
        }
        let mut next = match delta {
            Delta::Incremental { reports, .. } => {
                let mut t = self.tree.clone();
                for r in reports {
                    t.apply_report(r)?;
                }
                t
            }
            Delta::Reload { tree, tombstones, .. } => {
                let mut t = RevocationTree::from_bytes(tree)?;
                for &slot in tombstones {
                    if !t.mark_tombstoned(slot as usize) {
                        return Err(ProtocolError::Unexpected("tombstone slot out of range"));
                    }
                }
                t
            }
        };
        if next.root_digest() != root.root_digest || next.version() != root.tree_version {
            return Err(ProtocolError::RootMismatch);
        }
        std::mem::swap(&mut self.tree, &mut next);
        self.root = Some(root.clone());
        Ok(())
    }

    /// A proof for a live leaf, a signed OK otherwise.
    pub fn answer_query(&self, serial: &[u8], now: u64) -> Answer {
        let root = self.root.as_ref().expect("RSU answers only after bootstrap");
        let revoked = self.tree.status(serial) == RevocationStatus::Revoked;
        if revoked && self.behaviour == RsuBehaviour::Honest {
            if let Ok(proof) = build_proof(&self.tree, serial, root) {
                return Answer::Proof(proof);
            }
        }
        Answer::Ok(sign_ok(&self.scheme, &self.key, self.id, serial, self.tree.version(), now))
    }

    /// Consumes one message; returns the messages it causes.
    pub fn handle(&mut self, env: &Envelope) -> Result<Vec<Envelope>, ProtocolError> {
        match &env.payload {
            Payload::Delta(delta) => {
                if env.sender != TTP_ID {
                    return Err(ProtocolError::Unexpected("delta not from the TTP"));
                }
                self.apply_delta(delta)?;
                Ok(Vec::new())
            }
            Payload::Query { serial } => Ok(vec![Envelope::new(
                self.id,
                env.sender,
                env.time,
                Payload::Answer(self.answer_query(serial, env.time)),
            )]),
            Payload::Impeachment(imp) => Ok(self.relay(imp, env.time).into_iter().collect()),
            Payload::RsuRevoked { rsu_id } => {
                if *rsu_id == self.id {
                    self.revoked = true;
                }
                Ok(Vec::new())
            }
            Payload::Answer(_) => Err(ProtocolError::Unexpected("answer sent to an RSU")),
        }
    }

    /// Forwards an OBU's impeachment to the TTP, unless this RSU is the
    /// accused.
    pub fn relay(&self, imp: &Impeachment, now: u64) -> Option<Envelope> {
        (imp.accused_rsu_id != self.id)
            .then(|| Envelope::new(self.id, TTP_ID, now, Payload::Impeachment(imp.clone())))
    }
}
