use rand::RngCore;

use crate::keccak::hash;

/// A signature algorithm. Signers and verifiers in this crate only see
/// this trait, so real schemes (e.g. ECDSA) can be dropped in.
pub trait SignatureScheme: Clone + Send + Sync {
    type SigningKey: Clone + Send + Sync;
    type VerifyingKey: Clone + Send + Sync + PartialEq + std::fmt::Debug;

    fn generate_keypair<R: RngCore>(&self, rng: &mut R) -> (Self::SigningKey, Self::VerifyingKey);
    fn verifying_key(&self, key: &Self::SigningKey) -> Self::VerifyingKey;
    fn sign(&self, key: &Self::SigningKey, message: &[u8]) -> Vec<u8>;
    fn verify(&self, key: &Self::VerifyingKey, message: &[u8], signature: &[u8]) -> bool;
}

/// 32-byte secret shared by signer and verifier.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SharedSecret(pub [u8; 32]);

impl SharedSecret {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        hex::decode(s.trim()).ok()?.try_into().ok().map(SharedSecret)
    }
}

impl std::fmt::Debug for SharedSecret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SharedSecret({}..)", &self.to_hex()[..8])
    }
}

/// Deterministic test scheme: `sig = h(secret ∥ message)`, verified by
/// recomputation. It is a MAC, not a public-key signature; the verifying
/// key is the secret itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KeyedDigestScheme;

impl SignatureScheme for KeyedDigestScheme {
    type SigningKey = SharedSecret;
    type VerifyingKey = SharedSecret;

    fn generate_keypair<R: RngCore>(&self, rng: &mut R) -> (SharedSecret, SharedSecret) {
        let mut secret = [0u8; 32];
        rng.fill_bytes(&mut secret);
        (SharedSecret(secret), SharedSecret(secret))
    }

    fn verifying_key(&self, key: &SharedSecret) -> SharedSecret {
        key.clone()
    }

    fn sign(&self, key: &SharedSecret, message: &[u8]) -> Vec<u8> {
        let mut input = Vec::with_capacity(32 + message.len());
        input.extend_from_slice(&key.0);
        input.extend_from_slice(message);
        hash(&input).0.to_vec()
    }

    fn verify(&self, key: &SharedSecret, message: &[u8], signature: &[u8]) -> bool {
        self.sign(key, message) == signature
    }
}
