//! Tree file (`KREV`) and delta encodings. Big-endian throughout.
//!
//! Tree file: magic, format version, k, D, n, l, s, tree version, then `s`
//! leaf records (serial length u16, serial, expiry u64), then the retained
//! duplex state of every under-full internal node (root first: path length
//! u8, digits, 100-byte state), then the root digest. Internal digests are
//! recomputed on load and checked against the stored states and root.

use super::{
    ChangedNode, Leaf, MutationReport, NodeKind, RevocationTree, SerialNumber, TreeError,
    TreeParams, TreePath,
};
use crate::keccak::{LaneMatrix, DIGEST_BITS, STATE_BYTES};
use crate::wire::{Put, Reader, WireError};

pub const TREE_MAGIC: &[u8; 4] = b"KREV";
pub const TREE_FORMAT_VERSION: u8 = 1;

impl RevocationTree {
    pub fn to_bytes(&self) -> Result<Vec<u8>, TreeError> {
        let mut out = Vec::new();
        out.put(TREE_MAGIC);
        out.put_u8(TREE_FORMAT_VERSION);
        out.put_u16(self.k() as u16);
        out.put_u16(self.depth() as u16);
        out.put_u16(DIGEST_BITS as u16);
        out.put_u16(self.params().l_bits() as u16);
        out.put_u64(self.len() as u64);
        out.put_u64(self.version());
        for (slot, leaf) in self.leaves().iter().enumerate() {
            let serial = leaf.serial.as_ref().ok_or(TreeError::MissingSerial(slot))?;
            out.put_u16(serial.value().len() as u16);
            out.put(serial.value());
            out.put_u64(serial.expiry());
        }
        for (path, state) in self.retained_states() {
            out.put_u8(path.len() as u8);
            out.put(path.digits());
            out.put(&state.state().to_bytes());
        }
        out.put(self.root_digest().as_bytes());
        Ok(out)
    }

    /// Parses a tree file and rebuilds the tree, rejecting any file whose
    /// stored states or root disagree with the recomputation. Tombstone
    /// flags are not part of the file; all leaves load as live.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TreeError> {
        let mut r = Reader::new(bytes);
        r.magic(TREE_MAGIC)?;
        let version = r.u8()?;
        if version != TREE_FORMAT_VERSION {
            return Err(WireError::UnsupportedVersion(version).into());
        }
        let k = usize::from(r.u16()?);
        let depth = usize::from(r.u16()?);
        let n = usize::from(r.u16()?);
        let l = usize::from(r.u16()?);
        if n != DIGEST_BITS {
            return Err(TreeError::BadParams(format!("n = {n}, only {DIGEST_BITS} is supported")));
        }
        let params = TreeParams::new(k, l)?;
        let s = usize::try_from(r.u64()?).map_err(|_| WireError::Invalid("leaf count".into()))?;
        let tree_version = r.u64()?;
        if s > bytes.len() {
            return Err(WireError::Truncated.into());
        }
        let mut leaves = Vec::with_capacity(s);
        for _ in 0..s {
            let len = usize::from(r.u16()?);
            let value = r.bytes(len)?.to_vec();
            let expiry = r.u64()?;
            leaves.push(Leaf::from_serial(SerialNumber::new(value, expiry)?));
        }
        if depth != params.depth_for(s) {
            return Err(TreeError::BadParams(format!("depth {depth} does not fit {s} leaves")));
        }
        let mut tree = RevocationTree::from_leaves(params, leaves)?;
        tree.set_version(tree_version);

        for (path, state) in tree.retained_states() {
            let len = usize::from(r.u8()?);
            let digits = r.bytes(len)?;
            let stored = LaneMatrix::from_bytes(&r.array::<STATE_BYTES>()?);
            if digits != path.digits() || &stored != state.state() {
                return Err(TreeError::RetainedStateMismatch);
            }
        }
        let root = r.digest()?;
        r.finish()?;
        if root != tree.root_digest() {
            return Err(TreeError::RootMismatch);
        }
        Ok(tree)
    }
}

/// Delta record stream for one mutation: version u64, count u32, then
/// `count` records of (path length u8, digits, kind u8, digest).
pub fn encode_delta(report: &MutationReport) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + report.nodes.len() * 40);
    out.put_u64(report.version);
    out.put_u32(report.nodes.len() as u32);
    for node in &report.nodes {
        out.put_u8(node.path.len() as u8);
        out.put(node.path.digits());
        out.put_u8(node.kind as u8);
        out.put(node.digest.as_bytes());
    }
    out
}

pub fn decode_delta(bytes: &[u8]) -> Result<MutationReport, WireError> {
    let mut r = Reader::new(bytes);
    let report = read_delta(&mut r)?;
    r.finish()?;
    Ok(report)
}

pub(crate) fn read_delta(r: &mut Reader<'_>) -> Result<MutationReport, WireError> {
    let version = r.u64()?;
    let count = r.u32()? as usize;
    let mut nodes = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let len = usize::from(r.u8()?);
        let path = TreePath::new(r.bytes(len)?.to_vec());
        let kind = r.u8()?;
        let kind = NodeKind::from_u8(kind).ok_or_else(|| WireError::Invalid(format!("node kind {kind}")))?;
        let digest = r.digest()?;
        nodes.push(ChangedNode { path, kind, digest });
    }
    Ok(MutationReport { version, nodes })
}
