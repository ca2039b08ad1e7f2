//! `KPRF` proof and OK answer encodings. Big-endian throughout.

use super::{OkResponse, RevocationProof, SignedRoot};
use crate::keccak::DIGEST_BYTES;
use crate::tree::TreePath;
use crate::wire::{Put, Reader, WireError};

pub const PROOF_MAGIC: &[u8; 4] = b"KPRF";
pub const PROOF_FORMAT_VERSION: u8 = 1;
pub const OK_MAGIC: &[u8; 4] = b"KROK";

const HEADER_BYTES: usize = 4 + 1 + 2 * 5;
const SIGNED_ROOT_FIXED_BYTES: usize = DIGEST_BYTES + 8 + 8 + 2 + 2;

/// Serialized proof length for the given shape.
pub fn proof_wire_len(serial_len: usize, child_counts: &[usize], signature_len: usize) -> usize {
    HEADER_BYTES
        + serial_len
        + 1
        + child_counts.len()
        + child_counts.iter().map(|m| 1 + m * (1 + DIGEST_BYTES)).sum::<usize>()
        + SIGNED_ROOT_FIXED_BYTES
        + signature_len
}

fn put_signed_root(out: &mut Vec<u8>, root: &SignedRoot) {
    out.put(root.root_digest.as_bytes());
    out.put_u64(root.tree_version);
    out.put_u64(root.issued_at);
    out.put_u16(root.signer_id);
    out.put_u16(root.signature.len() as u16);
    out.put(&root.signature);
}

fn read_signed_root(r: &mut Reader<'_>, k: u16, l_bits: u16) -> Result<SignedRoot, WireError> {
    let root_digest = r.digest()?;
    let tree_version = r.u64()?;
    let issued_at = r.u64()?;
    let signer_id = r.u16()?;
    let sig_len = usize::from(r.u16()?);
    let signature = r.bytes(sig_len)?.to_vec();
    Ok(SignedRoot { root_digest, tree_version, issued_at, signer_id, k, l_bits, signature })
}

impl SignedRoot {
    /// Standalone record: k u16, l u16, then the proof-embedded layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + SIGNED_ROOT_FIXED_BYTES + self.signature.len());
        out.put_u16(self.k);
        out.put_u16(self.l_bits);
        put_signed_root(&mut out, self);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        let root = Self::read(&mut r)?;
        r.finish()?;
        Ok(root)
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self, WireError> {
        let k = r.u16()?;
        let l = r.u16()?;
        read_signed_root(r, k, l)
    }
}

impl RevocationProof {
    pub fn to_bytes(&self) -> Vec<u8> {
        let counts: Vec<usize> = self.levels.iter().map(Vec::len).collect();
        let mut out = Vec::with_capacity(proof_wire_len(
            self.serial.len(),
            &counts,
            self.signed_root.signature.len(),
        ));
        out.put(PROOF_MAGIC);
        out.put_u8(PROOF_FORMAT_VERSION);
        out.put_u16(self.k);
        out.put_u16(self.depth);
        out.put_u16(self.n_bits);
        out.put_u16(self.l_bits);
        out.put_u16(self.serial.len() as u16);
        out.put(&self.serial);
        out.put_u8(self.path.len() as u8);
        out.put(self.path.digits());
        for level in &self.levels {
            out.put_u8(level.len() as u8);
            for (idx, digest) in level {
                out.put_u8(*idx);
                out.put(digest.as_bytes());
            }
        }
        put_signed_root(&mut out, &self.signed_root);
        out
    }

    /// Parses the byte layout only; semantic checks happen in verification.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        let proof = Self::read(&mut r)?;
        r.finish()?;
        Ok(proof)
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self, WireError> {
        r.magic(PROOF_MAGIC)?;
        let version = r.u8()?;
        if version != PROOF_FORMAT_VERSION {
            return Err(WireError::UnsupportedVersion(version));
        }
        let k = r.u16()?;
        let depth = r.u16()?;
        let n_bits = r.u16()?;
        let l_bits = r.u16()?;
        let serial_len = usize::from(r.u16()?);
        let serial = r.bytes(serial_len)?.to_vec();
        let digit_count = usize::from(r.u8()?);
        if digit_count != usize::from(depth) {
            return Err(WireError::Invalid(format!("{digit_count} path digits for depth {depth}")));
        }
        let path = TreePath::new(r.bytes(digit_count)?.to_vec());
        let mut levels = Vec::with_capacity(digit_count);
        for _ in 0..digit_count {
            let count = usize::from(r.u8()?);
            let mut level = Vec::with_capacity(count);
            for _ in 0..count {
                let idx = r.u8()?;
                level.push((idx, r.digest()?));
            }
            levels.push(level);
        }
        let signed_root = read_signed_root(r, k, l_bits)?;
        Ok(RevocationProof { signed_root, k, depth, n_bits, l_bits, serial, path, levels })
    }
}

impl OkResponse {
    /// magic ∥ serial length u16 ∥ serial ∥ version u64 ∥ issued_at u64 ∥
    /// rsu id u32 ∥ signature length u16 ∥ signature.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 2 + self.queried_serial.len() + 22 + self.signature.len());
        out.put(OK_MAGIC);
        out.put_u16(self.queried_serial.len() as u16);
        out.put(&self.queried_serial);
        out.put_u64(self.tree_version);
        out.put_u64(self.issued_at);
        out.put_u32(self.rsu_id);
        out.put_u16(self.signature.len() as u16);
        out.put(&self.signature);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        let ok = Self::read(&mut r)?;
        r.finish()?;
        Ok(ok)
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self, WireError> {
        r.magic(OK_MAGIC)?;
        let len = usize::from(r.u16()?);
        let queried_serial = r.bytes(len)?.to_vec();
        let tree_version = r.u64()?;
        let issued_at = r.u64()?;
        let rsu_id = r.u32()?;
        let sig_len = usize::from(r.u16()?);
        let signature = r.bytes(sig_len)?.to_vec();
        Ok(OkResponse { queried_serial, tree_version, issued_at, rsu_id, signature })
    }
}
