use std::collections::{BTreeMap, BTreeSet};

use super::{Answer, Envelope, Impeachment, NodeId, Payload, DEFAULT_TRUST_THRESHOLD};
use crate::auth::{verify_ok, verify_proof, OkResponse, RevocationProof, SignatureScheme, DEFAULT_OK_MAX_AGE};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReliableEntry {
    pub tree_version: u64,
    pub cached_at: u64,
    pub oks: Vec<OkResponse>,
}

/// Local knowledge about other vehicles' serials. A serial is never in
/// both maps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrustCache {
    pub unreliable: BTreeMap<Vec<u8>, RevocationProof>,
    pub reliable: BTreeMap<Vec<u8>, ReliableEntry>,
}

/// OKs collected for a serial that has not reached the threshold.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PendingOk {
    pub oks: Vec<OkResponse>,
}

impl PendingOk {
    /// Distinct RSUs whose OK is at least as new as `version`.
    pub fn count(&self, version: u64) -> usize {
        self.oks
            .iter()
            .filter(|ok| ok.tree_version >= version)
            .map(|ok| ok.rsu_id)
            .collect::<BTreeSet<_>>()
            .len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precheck {
    KnownRevoked,
    KnownReliable,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheChange {
    Unreliable(Vec<u8>),
    Reliable(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObuAction {
    /// Nothing further to do.
    None,
    /// Query the serial again at an RSU that has not answered it yet.
    AskAgain { serial: Vec<u8> },
    /// Send this message (an impeachment) to the RSU that supplied the proof.
    Send(Envelope),
    CacheUpdate(CacheChange),
    /// The answer failed verification and was discarded.
    Dropped(&'static str),
}

/// On-board unit: queries RSUs about the serials it meets and keeps the
/// results in a [`TrustCache`].
#[derive(Debug, Clone)]
pub struct Obu<S: SignatureScheme> {
    id: NodeId,
    scheme: S,
    ttp_key: S::VerifyingKey,
    rsu_keys: BTreeMap<NodeId, S::VerifyingKey>,
    revoked_rsus: BTreeSet<NodeId>,
    threshold: usize,
    max_age: u64,
    known_version: u64,
    cache: TrustCache,
    pending: BTreeMap<Vec<u8>, PendingOk>,
}

impl<S: SignatureScheme> Obu<S> {
    pub fn new(
        id: NodeId,
        scheme: S,
        ttp_key: S::VerifyingKey,
        rsu_keys: BTreeMap<NodeId, S::VerifyingKey>,
    ) -> Self {
        Self {
            id,
            scheme,
            ttp_key,
            rsu_keys,
            revoked_rsus: BTreeSet::new(),
            threshold: DEFAULT_TRUST_THRESHOLD,
            max_age: DEFAULT_OK_MAX_AGE,
            known_version: 0,
            cache: TrustCache::default(),
            pending: BTreeMap::new(),
        }
    }

    pub fn with_threshold(mut self, threshold: usize) -> Self {
        assert!(threshold >= 1, "trust threshold must be positive");
        self.threshold = threshold;
        self
    }

    pub fn with_max_age(mut self, max_age: u64) -> Self {
        self.max_age = max_age;
        self
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn cache(&self) -> &TrustCache {
        &self.cache
    }

    pub fn pending(&self) -> &BTreeMap<Vec<u8>, PendingOk> {
        &self.pending
    }

    pub fn known_version(&self) -> u64 {
        self.known_version
    }

    /// Records the newest tree version seen (from a verified answer or an
    /// RSU in range). Reliable entries from older versions fall back to
    /// pending, keeping their OKs.
    pub fn observe_version(&mut self, version: u64) {
        if version <= self.known_version {
            return;
        }
        self.known_version = version;
        let stale: Vec<Vec<u8>> = self
            .cache
            .reliable
            .iter()
            .filter(|(_, e)| e.tree_version < version)
            .map(|(s, _)| s.clone())
            .collect();
        for serial in stale {
            let entry = self.cache.reliable.remove(&serial).expect("listed above");
            self.pending.entry(serial).or_default().oks.extend(entry.oks);
        }
    }

    pub fn precheck(&self, serial: &[u8]) -> Precheck {
        if self.cache.unreliable.contains_key(serial) {
            Precheck::KnownRevoked
        } else if self
            .cache
            .reliable
            .get(serial)
            .is_some_and(|e| e.tree_version >= self.known_version)
        {
            Precheck::KnownReliable
        } else {
            Precheck::Unknown
        }
    }

    /// Whether to contact the serial's owner: known-reliable only; unknown
    /// serials are refused until an RSU has been asked.
    pub fn accepts(&self, serial: &[u8]) -> bool {
        self.precheck(serial) == Precheck::KnownReliable
    }

    /// Whether `rsu` should be asked about `serial` now. An RSU that already
    /// answered OK for it is skipped, as are revoked RSUs.
    pub fn should_query(&self, serial: &[u8], rsu: NodeId) -> bool {
        self.precheck(serial) == Precheck::Unknown
            && self.rsu_keys.contains_key(&rsu)
            && !self.revoked_rsus.contains(&rsu)
            && !self.pending.get(serial).is_some_and(|p| {
                p.oks.iter().any(|ok| ok.rsu_id == rsu && ok.tree_version >= self.known_version)
            })
    }

    pub fn query(&self, serial: &[u8], rsu: NodeId, now: u64) -> Envelope {
        Envelope::new(self.id, rsu, now, Payload::Query { serial: serial.to_vec() })
    }

    /// Verifies an answer and updates the cache. Unverifiable answers are
    /// dropped without any state change.
    pub fn receive_answer(&mut self, answer: &Answer, responding_rsu: NodeId, now: u64) -> Vec<ObuAction> {
        match answer {
            Answer::Proof(p) => {
                if verify_proof(p, &self.scheme, &self.ttp_key).is_err() {
                    return vec![ObuAction::Dropped("proof rejected")];
                }
            }
            Answer::Ok(ok) => {
                if ok.rsu_id != responding_rsu || self.revoked_rsus.contains(&responding_rsu) {
                    return vec![ObuAction::Dropped("OK from wrong or revoked RSU")];
                }
                if verify_ok(ok, &self.scheme, self.rsu_keys.get(&responding_rsu), now, self.max_age).is_err() {
                    return vec![ObuAction::Dropped("OK rejected")];
                }
            }
        }
        self.handle_answer(answer, responding_rsu, now)
    }

    /// Cache transition for an already verified answer.
    pub fn handle_answer(&mut self, answer: &Answer, responding_rsu: NodeId, now: u64) -> Vec<ObuAction> {
        match answer {
            Answer::Proof(proof) => self.on_proof(proof, responding_rsu, now),
            Answer::Ok(ok) => self.on_ok(ok, now),
        }
    }

    fn on_proof(&mut self, proof: &RevocationProof, via: NodeId, now: u64) -> Vec<ObuAction> {
        let serial = proof.serial.clone();
        let version = proof.signed_root.tree_version;
        self.observe_version(version);
        let mut oks = self.pending.remove(&serial).map(|p| p.oks).unwrap_or_default();
        if let Some(entry) = self.cache.reliable.remove(&serial) {
            oks.extend(entry.oks);
        }
        let mut actions = Vec::new();
        if !self.cache.unreliable.contains_key(&serial) {
            actions.push(ObuAction::CacheUpdate(CacheChange::Unreliable(serial.clone())));
        }
        self.cache.unreliable.insert(serial, proof.clone());
        let mut accused = BTreeSet::new();
        for ok in oks {
            // Only an OK at the proof's own version contradicts it; older
            // OKs may predate the revocation.
            if ok.tree_version == version && ok.rsu_id != via && accused.insert(ok.rsu_id) {
                actions.push(ObuAction::Send(Envelope::new(
                    self.id,
                    via,
                    now,
                    Payload::Impeachment(Impeachment {
                        accused_rsu_id: ok.rsu_id,
                        reporter_obu_id: self.id,
                        ok,
                        proof: proof.clone(),
                    }),
                )));
            }
        }
        actions
    }

    fn on_ok(&mut self, ok: &OkResponse, now: u64) -> Vec<ObuAction> {
        let serial = &ok.queried_serial;
        self.observe_version(ok.tree_version);
        if self.cache.unreliable.contains_key(serial) {
            return vec![ObuAction::None];
        }
        if self.precheck(serial) == Precheck::KnownReliable {
            return vec![ObuAction::None];
        }
        let pending = self.pending.entry(serial.clone()).or_default();
        pending.oks.retain(|o| o.rsu_id != ok.rsu_id);
        pending.oks.push(ok.clone());
        if pending.count(self.known_version) >= self.threshold {
            let pending = self.pending.remove(serial).expect("present");
            self.cache.reliable.insert(
                serial.clone(),
                ReliableEntry { tree_version: self.known_version, cached_at: now, oks: pending.oks },
            );
            vec![ObuAction::CacheUpdate(CacheChange::Reliable(serial.clone()))]
        } else {
            vec![ObuAction::AskAgain { serial: serial.clone() }]
        }
    }

    /// Forgets an RSU's key; its OKs stop counting toward the threshold.
    pub fn handle_rsu_revoked(&mut self, rsu_id: NodeId) {
        self.revoked_rsus.insert(rsu_id);
        for p in self.pending.values_mut() {
            p.oks.retain(|ok| ok.rsu_id != rsu_id);
        }
        let tainted: Vec<Vec<u8>> = self
            .cache
            .reliable
            .iter()
            .filter(|(_, e)| e.oks.iter().any(|ok| ok.rsu_id == rsu_id))
            .map(|(s, _)| s.clone())
            .collect();
        for serial in tainted {
            let mut entry = self.cache.reliable.remove(&serial).expect("listed above");
            entry.oks.retain(|ok| ok.rsu_id != rsu_id);
            self.pending.insert(serial, PendingOk { oks: entry.oks });
        }
    }

    /// Consumes one message addressed to this OBU.
    pub fn handle(&mut self, env: &Envelope) -> Vec<ObuAction> {
        match &env.payload {
            Payload::Answer(a) => self.receive_answer(a, env.sender, env.time),
            Payload::RsuRevoked { rsu_id } => {
                self.handle_rsu_revoked(*rsu_id);
                vec![ObuAction::None]
            }
            _ => vec![ObuAction::Dropped("unexpected message")],
        }
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        if let Some(s) = self.cache.unreliable.keys().find(|s| self.cache.reliable.contains_key(*s)) {
            return Err(format!("serial {} both reliable and unreliable", hex::encode(s)));
        }
        for (s, p) in &self.pending {
            if self.cache.unreliable.contains_key(s) || self.cache.reliable.contains_key(s) {
                return Err(format!("pending serial {} is also cached", hex::encode(s)));
            }
            if p.count(self.known_version) >= self.threshold {
                return Err(format!("pending serial {} reached the threshold", hex::encode(s)));
            }
        }
        for proof in self.cache.unreliable.values() {
            if verify_proof(proof, &self.scheme, &self.ttp_key).is_err() {
                return Err("unreliable entry without a verifying proof".into());
            }
        }
        Ok(())
    }
}
