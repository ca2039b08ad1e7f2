//! Signed roots, revocation proofs and "OK" answers.
//!
//! The TTP signs the tree root. An RSU answers a query for a revoked serial
//! with the root-to-leaf path and every sibling digest on it, plus the
//! signed root; a verifier needs nothing but the proof and the TTP key. For
//! serials that are not revoked the RSU signs an OK with its own key.

mod codec;
mod scheme;

pub use codec::{proof_wire_len, OK_MAGIC, PROOF_FORMAT_VERSION, PROOF_MAGIC};
pub use scheme::{KeyedDigestScheme, SharedSecret, SignatureScheme};

use crate::keccak::{hash, Digest, DIGEST_BITS, RATE_BITS};
use crate::tree::{node_digest, RevocationTree, TreeParams, TreePath, MAX_K};

/// Default OK freshness window, in simulated seconds.
pub const DEFAULT_OK_MAX_AGE: u64 = 60;

const ROOT_DOMAIN: &[u8] = b"KREV-ROOT";
const OK_DOMAIN: &[u8] = b"KREV-OK";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedRoot {
    pub root_digest: Digest,
    pub tree_version: u64,
    pub issued_at: u64,
    pub signer_id: u16,
    /// Tree shape the root was computed with; covered by the signature.
    pub k: u16,
    pub l_bits: u16,
    pub signature: Vec<u8>,
}

impl SignedRoot {
    /// Bytes covered by the TTP signature.
    pub fn signed_message(&self) -> Vec<u8> {
        let mut m = Vec::with_capacity(ROOT_DOMAIN.len() + 28 + 22);
        m.extend_from_slice(ROOT_DOMAIN);
        m.extend_from_slice(self.root_digest.as_bytes());
        m.extend_from_slice(&self.tree_version.to_be_bytes());
        m.extend_from_slice(&self.issued_at.to_be_bytes());
        m.extend_from_slice(&self.signer_id.to_be_bytes());
        m.extend_from_slice(&self.k.to_be_bytes());
        m.extend_from_slice(&self.l_bits.to_be_bytes());
        m
    }

    pub fn verify<S: SignatureScheme>(&self, scheme: &S, ttp_key: &S::VerifyingKey) -> bool {
        scheme.verify(ttp_key, &self.signed_message(), &self.signature)
    }
}

pub fn sign_root<S: SignatureScheme>(
    tree: &RevocationTree,
    scheme: &S,
    ttp_key: &S::SigningKey,
    signer_id: u16,
    issued_at: u64,
) -> SignedRoot {
    let mut root = SignedRoot {
        root_digest: tree.root_digest(),
        tree_version: tree.version(),
        issued_at,
        signer_id,
        k: tree.k() as u16,
        l_bits: tree.params().l_bits() as u16,
        signature: Vec::new(),
    };
    root.signature = scheme.sign(ttp_key, &root.signed_message());
    root
}

/// Self-contained evidence that a serial is a leaf of the signed tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevocationProof {
    pub signed_root: SignedRoot,
    pub k: u16,
    pub depth: u16,
    pub n_bits: u16,
    pub l_bits: u16,
    pub serial: Vec<u8>,
    pub path: TreePath,
    /// Top-down. Each level lists `(child index, child digest)` for every
    /// child of the path node at that depth; the last level is the leaves.
    pub levels: Vec<Vec<(u8, Digest)>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuildProofError {
    #[error("serial is not revoked")]
    NotFound,
    #[error("signed root is for version {signed}, tree is at {tree}")]
    VersionMismatch { signed: u64, tree: u64 },
}

/// Assembles the search path for `serial_value` and the signed root into a
/// proof. Expired (tombstoned) leaves are reported as not found.
pub fn build_proof(
    tree: &RevocationTree,
    serial_value: &[u8],
    signed_root: &SignedRoot,
) -> Result<RevocationProof, BuildProofError> {
    if signed_root.tree_version != tree.version() || signed_root.root_digest != tree.root_digest() {
        return Err(BuildProofError::VersionMismatch {
            signed: signed_root.tree_version,
            tree: tree.version(),
        });
    }
    let bundle = tree.search(serial_value).ok_or(BuildProofError::NotFound)?;
    if bundle.tombstoned {
        return Err(BuildProofError::NotFound);
    }
    Ok(RevocationProof {
        signed_root: signed_root.clone(),
        k: tree.k() as u16,
        depth: tree.depth() as u16,
        n_bits: DIGEST_BITS as u16,
        l_bits: tree.params().l_bits() as u16,
        serial: serial_value.to_vec(),
        path: bundle.path,
        levels: bundle
            .levels
            .into_iter()
            .map(|level| level.into_iter().enumerate().map(|(i, d)| (i as u8, d)).collect())
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProofReject {
    #[error("no leaf digest matches h(serial)")]
    BadLeafDigest,
    #[error("folding the path does not reproduce the signed root")]
    BadPathFold,
    #[error("TTP signature does not verify")]
    BadSignature,
    #[error("malformed proof: {0}")]
    MalformedProof(String),
}

impl RevocationProof {
    pub fn params(&self) -> Result<TreeParams, ProofReject> {
        if usize::from(self.n_bits) != DIGEST_BITS {
            return Err(malformed(format!("n = {}", self.n_bits)));
        }
        if !(2..=MAX_K).contains(&usize::from(self.k))
            || !(DIGEST_BITS..RATE_BITS).contains(&usize::from(self.l_bits))
        {
            return Err(malformed(format!("k = {}, l = {}", self.k, self.l_bits)));
        }
        if self.signed_root.k != self.k || self.signed_root.l_bits != self.l_bits {
            return Err(malformed("tree parameters differ from the signed root".into()));
        }
        TreeParams::new(usize::from(self.k), usize::from(self.l_bits))
            .map_err(|e| malformed(e.to_string()))
    }

    fn check_shape(&self) -> Result<TreeParams, ProofReject> {
        let params = self.params()?;
        let depth = usize::from(self.depth);
        if depth == 0 || self.path.len() != depth || self.levels.len() != depth {
            return Err(malformed(format!(
                "depth {depth}, {} digits, {} levels",
                self.path.len(),
                self.levels.len()
            )));
        }
        if self.serial.is_empty() {
            return Err(malformed("empty serial".into()));
        }
        for (level, &digit) in self.levels.iter().zip(self.path.digits()) {
            if level.is_empty() || level.len() > params.k() {
                return Err(malformed(format!("level with {} children", level.len())));
            }
            if level.iter().enumerate().any(|(i, (idx, _))| usize::from(*idx) != i) {
                return Err(malformed("child indices out of order".into()));
            }
            if usize::from(digit) >= level.len() {
                return Err(malformed(format!("path digit {digit} has no child")));
            }
        }
        Ok(params)
    }

    /// Payload bits: the root digest plus every child digest carried, plus
    /// the signature. Framing (header, indices, counts) is excluded.
    pub fn payload_bits(&self) -> usize {
        let n = usize::from(self.n_bits);
        let children: usize = self.levels.iter().map(Vec::len).sum();
        n + children * n + self.signed_root.signature.len() * 8
    }
}

fn malformed(msg: String) -> ProofReject {
    ProofReject::MalformedProof(msg)
}

/// Checks, in order: (a) some bottom-level child equals `h(serial)`;
/// (b) folding node digests upward along the path digits reproduces the
/// signed root; (c) the TTP signature verifies. Only the proof and the key
/// are consulted.
pub fn verify_proof<S: SignatureScheme>(
    proof: &RevocationProof,
    scheme: &S,
    ttp_key: &S::VerifyingKey,
) -> Result<(), ProofReject> {
    let params = proof.check_shape()?;
    let leaf = hash(&proof.serial);
    let bottom = proof.levels.last().expect("depth >= 1");
    if !bottom.iter().any(|(_, d)| *d == leaf) {
        return Err(ProofReject::BadLeafDigest);
    }
    let mut expected = leaf;
    for (level, &digit) in proof.levels.iter().zip(proof.path.digits()).rev() {
        if level[usize::from(digit)].1 != expected {
            return Err(ProofReject::BadPathFold);
        }
        let children: Vec<Digest> = level.iter().map(|(_, d)| *d).collect();
        expected = node_digest(&children, &params);
    }
    if expected != proof.signed_root.root_digest {
        return Err(ProofReject::BadPathFold);
    }
    if !proof.signed_root.verify(scheme, ttp_key) {
        return Err(ProofReject::BadSignature);
    }
    Ok(())
}

/// Parses and verifies a serialized proof; parse failures are
/// `MalformedProof`.
pub fn verify_proof_bytes<S: SignatureScheme>(
    bytes: &[u8],
    scheme: &S,
    ttp_key: &S::VerifyingKey,
) -> Result<RevocationProof, ProofReject> {
    let proof = RevocationProof::from_bytes(bytes).map_err(|e| malformed(e.to_string()))?;
    verify_proof(&proof, scheme, ttp_key)?;
    Ok(proof)
}

/// Signed statement by an RSU that a serial is not revoked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OkResponse {
    pub queried_serial: Vec<u8>,
    pub tree_version: u64,
    pub issued_at: u64,
    pub rsu_id: u32,
    pub signature: Vec<u8>,
}

impl OkResponse {
    pub fn signed_message(&self) -> Vec<u8> {
        let mut m = Vec::with_capacity(OK_DOMAIN.len() + self.queried_serial.len() + 22);
        m.extend_from_slice(OK_DOMAIN);
        m.extend_from_slice(&(self.queried_serial.len() as u16).to_be_bytes());
        m.extend_from_slice(&self.queried_serial);
        m.extend_from_slice(&self.tree_version.to_be_bytes());
        m.extend_from_slice(&self.issued_at.to_be_bytes());
        m.extend_from_slice(&self.rsu_id.to_be_bytes());
        m
    }
}

pub fn sign_ok<S: SignatureScheme>(
    scheme: &S,
    rsu_key: &S::SigningKey,
    rsu_id: u32,
    serial: &[u8],
    tree_version: u64,
    issued_at: u64,
) -> OkResponse {
    let mut ok = OkResponse {
        queried_serial: serial.to_vec(),
        tree_version,
        issued_at,
        rsu_id,
        signature: Vec::new(),
    };
    ok.signature = scheme.sign(rsu_key, &ok.signed_message());
    ok
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum OkReject {
    #[error("RSU signature does not verify")]
    BadSignature,
    #[error("OK is older than the freshness window")]
    Stale,
}

/// Accepts a fresh, correctly signed OK. Passing `None` as the key (an
/// unknown or revoked RSU) always fails with `BadSignature`. Acceptance is
/// provisional: the OBU keeps asking until its trust threshold is met.
pub fn verify_ok<S: SignatureScheme>(
    ok: &OkResponse,
    scheme: &S,
    rsu_key: Option<&S::VerifyingKey>,
    now: u64,
    max_age: u64,
) -> Result<(), OkReject> {
    let key = rsu_key.ok_or(OkReject::BadSignature)?;
    if !scheme.verify(key, &ok.signed_message(), &ok.signature) {
        return Err(OkReject::BadSignature);
    }
    if now.saturating_sub(ok.issued_at) > max_age {
        return Err(OkReject::Stale);
    }
    Ok(())
}
