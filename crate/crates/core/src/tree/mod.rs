//! The dynamic perfect k-ary revocation tree.
//!
//! Leaves are `h(serial)` in revocation order, occupying slots `0..s` of a
//! depth-`D` tree. Every internal node hashes its children with a duplex
//! object and keeps that object while it has room for more children, so an
//! insertion costs one duplexing call per level on the rightmost path. A new
//! level is added only when the tree is full (`s = k^D`); deletions and
//! expirations compact the leaves and rebuild bottom-up.

mod codec;
mod node;
pub mod params;

use std::collections::HashMap;
use std::fmt;

use crate::keccak::{hash, Digest, DuplexState, DIGEST_BITS, RATE_BITS};
use crate::par;
use crate::wire::WireError;

pub use codec::{decode_delta, encode_delta, TREE_FORMAT_VERSION, TREE_MAGIC};
pub(crate) use codec::read_delta;
pub use node::{node_digest, parent_digest, share_bits};
pub use params::{choose_k, ceil_log, depth_for, tree_size_bits, ChooseKError, KChoice};

use node::InternalNode;

/// Largest supported branching factor: every child must keep at least one
/// bit of the `n`-bit parent digest.
pub const MAX_K: usize = DIGEST_BITS;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("serial already revoked")]
    DuplicateSerial,
    #[error("serial not in tree")]
    UnknownSerial,
    #[error("serial must be 1..=65535 bytes")]
    BadSerial,
    #[error("parent digest needs at least one child")]
    EmptyChildren,
    #[error("child block has {got} bits, expected {expected}")]
    BadBlockLength { expected: usize, got: usize },
    #[error("bad tree parameters: {0}")]
    BadParams(String),
    #[error("leaf {0} has no serial and cannot be serialized")]
    MissingSerial(usize),
    #[error("stored root digest does not match the recomputed tree")]
    RootMismatch,
    #[error("stored duplex state does not match the recomputed tree")]
    RetainedStateMismatch,
    #[error("delta for version {got} cannot follow version {expected}")]
    DeltaVersion { expected: u64, got: u64 },
    #[error("delta disagrees with the local tree at {0}")]
    DeltaMismatch(TreePath),
    #[error("delta carries a reconstruction; a full reload is required")]
    NeedsReload,
    #[error(transparent)]
    Wire(#[from] WireError),
}

/// Branching factor `k` and duplex output length `l` (n is fixed at 224).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TreeParams {
    k: usize,
    l_bits: usize,
}

impl TreeParams {
    pub fn new(k: usize, l_bits: usize) -> Result<Self, TreeError> {
        if !(2..=MAX_K).contains(&k) {
            return Err(TreeError::BadParams(format!("k = {k} outside 2..={MAX_K}")));
        }
        if !(DIGEST_BITS..RATE_BITS).contains(&l_bits) {
            return Err(TreeError::BadParams(format!(
                "l = {l_bits} outside {DIGEST_BITS}..{RATE_BITS}"
            )));
        }
        Ok(Self { k, l_bits })
    }

    pub fn with_k(k: usize) -> Result<Self, TreeError> {
        Self::new(k, DIGEST_BITS)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l_bits(&self) -> usize {
        self.l_bits
    }

    pub(crate) fn fresh_duplex(&self) -> DuplexState {
        DuplexState::with_output_bits(self.l_bits).expect("validated l")
    }

    /// `k^depth`, saturating.
    pub fn capacity(&self, depth: usize) -> usize {
        u32::try_from(depth)
            .ok()
            .and_then(|d| self.k.checked_pow(d))
            .unwrap_or(usize::MAX)
    }

    pub fn depth_for(&self, s: usize) -> usize {
        params::depth_for(self.k as u64, s as u64) as usize
    }
}

/// Serial number of a revoked certificate or pseudonym, with its expiry
/// (seconds).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SerialNumber {
    value: Vec<u8>,
    expiry: u64,
}

impl SerialNumber {
    pub fn new(value: impl Into<Vec<u8>>, expiry: u64) -> Result<Self, TreeError> {
        let value = value.into();
        if value.is_empty() || value.len() > usize::from(u16::MAX) {
            return Err(TreeError::BadSerial);
        }
        Ok(Self { value, expiry })
    }

    pub fn value(&self) -> &[u8] {
        &self.value
    }

    pub fn expiry(&self) -> u64 {
        self.expiry
    }

    pub fn digest(&self) -> Digest {
        hash(&self.value)
    }
}

/// Base-k child indices from the root down. A full leaf path has `D`
/// digits; shorter paths name internal nodes (the root has none).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct TreePath(Vec<u8>);

impl TreePath {
    pub fn new(digits: Vec<u8>) -> Self {
        Self(digits)
    }

    /// Path of the node with position `index` among the `k^len` nodes at
    /// `len` levels below the root.
    pub fn from_index(index: usize, k: usize, len: usize) -> Self {
        let mut digits = vec![0u8; len];
        let mut rest = index;
        for d in digits.iter_mut().rev() {
            *d = (rest % k) as u8;
            rest /= k;
        }
        debug_assert_eq!(rest, 0, "index does not fit in {len} digits");
        Self(digits)
    }

    pub fn to_index(&self, k: usize) -> usize {
        self.0.iter().fold(0, |acc, &d| acc * k + usize::from(d))
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for TreePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("/")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leaf {
    pub digest: Digest,
    /// Absent on replicas that learned the leaf from a delta.
    pub serial: Option<SerialNumber>,
    /// Expired but still hashed into the tree; not reported as revoked.
    pub tombstoned: bool,
}

impl Leaf {
    pub fn from_serial(serial: SerialNumber) -> Self {
        Self {
            digest: serial.digest(),
            serial: Some(serial),
            tombstoned: false,
        }
    }

    pub fn from_digest(digest: Digest) -> Self {
        Self {
            digest,
            serial: None,
            tombstoned: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum NodeKind {
    Internal = 0,
    Leaf = 1,
    Tombstone = 2,
    /// Marker: the tree was rebuilt and replicas must reload it.
    Reconstructed = 0xff,
}

impl NodeKind {
    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            0 => Self::Internal,
            1 => Self::Leaf,
            2 => Self::Tombstone,
            0xff => Self::Reconstructed,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangedNode {
    pub path: TreePath,
    pub kind: NodeKind,
    pub digest: Digest,
}

/// Nodes touched by one mutation, for delta broadcast.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MutationReport {
    /// Tree version after the mutation.
    pub version: u64,
    pub nodes: Vec<ChangedNode>,
}

impl MutationReport {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_reconstruction(&self) -> bool {
        self.nodes.iter().any(|n| n.kind == NodeKind::Reconstructed)
    }
}

/// Root-to-leaf path with every present sibling, as returned by search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathBundle {
    pub root: Digest,
    pub path: TreePath,
    /// Top-down; `levels[i]` lists the children (in child order) of the
    /// path node at depth `i`. The last level holds leaf digests.
    pub levels: Vec<Vec<Digest>>,
    pub tombstoned: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevocationStatus {
    Revoked,
    NotRevoked,
    /// Present in the tree but expired; answered as not revoked.
    Expired,
}

#[derive(Debug, Clone)]
pub struct RevocationTree {
    params: TreeParams,
    depth: usize,
    leaves: Vec<Leaf>,
    /// `levels[h - 1]` holds the nodes at height `h`; the last is the root.
    levels: Vec<Vec<InternalNode>>,
    index: HashMap<Digest, usize>,
    version: u64,
}

impl RevocationTree {
    pub fn new(params: TreeParams) -> Self {
        Self {
            params,
            depth: 1,
            leaves: Vec::new(),
            levels: vec![vec![InternalNode::empty(&params)]],
            index: HashMap::new(),
            version: 0,
        }
    }

    /// Builds a tree bottom-up from leaves in revocation order.
    pub fn from_serials(
        params: TreeParams,
        serials: impl IntoIterator<Item = SerialNumber>,
    ) -> Result<Self, TreeError> {
        Self::from_leaves(params, serials.into_iter().map(Leaf::from_serial).collect())
    }

    pub fn from_leaves(params: TreeParams, leaves: Vec<Leaf>) -> Result<Self, TreeError> {
        let mut tree = Self::new(params);
        tree.leaves = leaves;
        tree.reindex()?;
        tree.rebuild(params.depth_for(tree.leaves.len()));
        Ok(tree)
    }

    pub fn params(&self) -> TreeParams {
        self.params
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of leaves `s`.
    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn root_digest(&self) -> Digest {
        self.levels[self.depth - 1][0].digest
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn contains(&self, serial_value: &[u8]) -> bool {
        self.index.contains_key(&hash(serial_value))
    }

    pub fn slot_of(&self, leaf_digest: &Digest) -> Option<usize> {
        self.index.get(leaf_digest).copied()
    }

    pub fn status(&self, serial_value: &[u8]) -> RevocationStatus {
        match self.slot_of(&hash(serial_value)) {
            None => RevocationStatus::NotRevoked,
            Some(slot) if self.leaves[slot].tombstoned => RevocationStatus::Expired,
            Some(_) => RevocationStatus::Revoked,
        }
    }

    /// Number of nodes at height `h` (0 = leaves).
    pub fn level_len(&self, h: usize) -> usize {
        if h == 0 {
            self.leaves.len()
        } else {
            self.levels[h - 1].len()
        }
    }

    /// Digest of the node at height `h`, position `j`.
    pub fn node_digest_at(&self, h: usize, j: usize) -> Digest {
        if h == 0 {
            self.leaves[j].digest
        } else {
            self.levels[h - 1][j].digest
        }
    }

    pub fn insert(&mut self, serial: SerialNumber) -> Result<MutationReport, TreeError> {
        self.insert_leaf(Leaf::from_serial(serial))
    }

    /// Appends a leaf at slot `s`. When the tree is full it first grows a
    /// level (rebuilding at the new depth), then inserts incrementally.
    pub fn insert_leaf(&mut self, leaf: Leaf) -> Result<MutationReport, TreeError> {
        if self.index.contains_key(&leaf.digest) {
            return Err(TreeError::DuplicateSerial);
        }
        let grow = self.leaves.len() == self.params.capacity(self.depth);
        if grow {
            self.rebuild(self.depth + 1);
        }
        let mut nodes = self.append_leaf(leaf);
        self.version += 1;
        if grow {
            nodes = self.full_report_nodes();
        }
        Ok(MutationReport {
            version: self.version,
            nodes,
        })
    }

    fn append_leaf(&mut self, leaf: Leaf) -> Vec<ChangedNode> {
        let k = self.params.k;
        let slot = self.leaves.len();
        let mut changed = Vec::with_capacity(self.depth + 1);
        changed.push(ChangedNode {
            path: TreePath::from_index(slot, k, self.depth),
            kind: NodeKind::Leaf,
            digest: leaf.digest,
        });
        let mut child_digest = leaf.digest;
        self.index.insert(leaf.digest, slot);
        self.leaves.push(leaf);

        let mut child = slot;
        for h in 1..=self.depth {
            let (j, pos) = (child / k, child % k);
            let level = &mut self.levels[h - 1];
            if j == level.len() {
                level.push(InternalNode::empty(&self.params));
            }
            let node = &mut level[j];
            if pos == node.child_count() {
                node.append_child(&child_digest, &self.params);
            } else {
                debug_assert_eq!(pos + 1, node.child_count(), "only the last child can change");
                node.replace_last_child(&child_digest, &self.params);
            }
            child_digest = node.digest;
            changed.push(ChangedNode {
                path: TreePath::from_index(j, k, self.depth - h),
                kind: NodeKind::Internal,
                digest: child_digest,
            });
            child = j;
        }
        changed
    }

    /// Path plus siblings for a serial, located through the index.
    pub fn search(&self, serial_value: &[u8]) -> Option<PathBundle> {
        self.search_digest(&hash(serial_value))
    }

    pub fn search_digest(&self, leaf_digest: &Digest) -> Option<PathBundle> {
        let slot = *self.index.get(leaf_digest)?;
        let k = self.params.k;
        let mut levels = Vec::with_capacity(self.depth);
        for h in (1..=self.depth).rev() {
            let j = slot / self.params.capacity(h);
            let start = j * k;
            let end = (start + k).min(self.level_len(h - 1));
            levels.push((start..end).map(|c| self.node_digest_at(h - 1, c)).collect());
        }
        Some(PathBundle {
            root: self.root_digest(),
            path: TreePath::from_index(slot, k, self.depth),
            levels,
            tombstoned: self.leaves[slot].tombstoned,
        })
    }

    /// Removes a leaf and rebuilds; emptied parents disappear with it.
    pub fn delete(&mut self, serial_value: &[u8]) -> Result<MutationReport, TreeError> {
        let slot = self
            .slot_of(&hash(serial_value))
            .ok_or(TreeError::UnknownSerial)?;
        self.leaves.remove(slot);
        Ok(self.reconstruct())
    }

    /// Compacts the leaves, resets `D = max(1, ⌈log_k s⌉)` and rebuilds all
    /// internal nodes with fresh duplex states.
    pub fn reconstruct(&mut self) -> MutationReport {
        self.reindex().expect("leaves are unique");
        self.rebuild(self.params.depth_for(self.leaves.len()));
        self.version += 1;
        MutationReport {
            version: self.version,
            nodes: self.full_report_nodes(),
        }
    }

    /// Handles leaves whose expiry is before `now`. They are only removed
    /// (with a rebuild) once some parent has all of its children expired;
    /// until then they are tombstoned in place and the digests stay put.
    pub fn expire_sweep(&mut self, now: u64) -> MutationReport {
        let expired: Vec<bool> = self
            .leaves
            .iter()
            .map(|l| l.serial.as_ref().is_some_and(|s| s.expiry < now))
            .collect();
        if !expired.iter().any(|&e| e) {
            return MutationReport {
                version: self.version,
                nodes: Vec::new(),
            };
        }
        let k = self.params.k;
        let parent_all_expired = expired.chunks(k).any(|group| group.iter().all(|&e| e));
        if parent_all_expired {
            let mut keep = expired.iter().map(|&e| !e);
            self.leaves.retain(|_| keep.next().expect("same length"));
            return self.reconstruct();
        }
        let mut nodes = Vec::new();
        for (slot, leaf) in self.leaves.iter_mut().enumerate() {
            if expired[slot] && !leaf.tombstoned {
                leaf.tombstoned = true;
                nodes.push(ChangedNode {
                    path: TreePath::from_index(slot, k, self.depth),
                    kind: NodeKind::Tombstone,
                    digest: leaf.digest,
                });
            }
        }
        if !nodes.is_empty() {
            self.version += 1;
        }
        MutationReport {
            version: self.version,
            nodes,
        }
    }

    /// Applies another tree's mutation report to this replica. Leaves are
    /// appended through the same incremental path, and every internal digest
    /// in the report must then match the local result.
    pub fn apply_report(&mut self, report: &MutationReport) -> Result<(), TreeError> {
        if report.is_reconstruction() {
            return Err(TreeError::NeedsReload);
        }
        if report.version != self.version + 1 {
            return Err(TreeError::DeltaVersion {
                expected: self.version,
                got: report.version,
            });
        }
        let k = self.params.k;
        let mut scratch = self.clone();
        for node in &report.nodes {
            match node.kind {
                NodeKind::Leaf => {
                    if node.path.len() != scratch.depth
                        || node.path.to_index(k) != scratch.leaves.len()
                        || scratch.leaves.len() == self.params.capacity(scratch.depth)
                    {
                        return Err(TreeError::DeltaMismatch(node.path.clone()));
                    }
                    scratch
                        .insert_leaf(Leaf::from_digest(node.digest))
                        .map_err(|_| TreeError::DeltaMismatch(node.path.clone()))?;
                }
                NodeKind::Tombstone => {
                    let slot = node.path.to_index(k);
                    match scratch.leaves.get_mut(slot) {
                        Some(leaf) if leaf.digest == node.digest && node.path.len() == scratch.depth => {
                            leaf.tombstoned = true
                        }
                        _ => return Err(TreeError::DeltaMismatch(node.path.clone())),
                    }
                }
                NodeKind::Internal => {}
                NodeKind::Reconstructed => unreachable!("checked above"),
            }
        }
        for node in report.nodes.iter().filter(|n| n.kind == NodeKind::Internal) {
            if scratch.digest_at_path(&node.path) != Some(node.digest) {
                return Err(TreeError::DeltaMismatch(node.path.clone()));
            }
        }
        scratch.version = report.version;
        *self = scratch;
        Ok(())
    }

    /// Digest of the node named by `path` (any length up to `D`).
    pub fn digest_at_path(&self, path: &TreePath) -> Option<Digest> {
        if path.len() > self.depth || path.digits().iter().any(|&d| usize::from(d) >= self.k()) {
            return None;
        }
        let h = self.depth - path.len();
        let j = path.to_index(self.k());
        (j < self.level_len(h)).then(|| self.node_digest_at(h, j))
    }

    /// Root recomputed from the leaf digests alone, ignoring stored state.
    pub fn recompute_root(&self) -> Digest {
        let digests: Vec<Digest> = self.leaves.iter().map(|l| l.digest).collect();
        let levels = build_levels(&digests, self.depth, &self.params, par::PARALLEL);
        levels.last().expect("depth >= 1")[0].digest
    }

    /// Checks every structural invariant; returns a description of the first
    /// violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let s = self.leaves.len();
        let k = self.params.k;
        if self.depth != self.params.depth_for(s) {
            return Err(format!("depth {} but s = {s} needs {}", self.depth, self.params.depth_for(s)));
        }
        if s > self.params.capacity(self.depth) {
            return Err("capacity exceeded".into());
        }
        if self.index.len() != s {
            return Err(format!("index has {} entries for {s} leaves", self.index.len()));
        }
        for (slot, leaf) in self.leaves.iter().enumerate() {
            if self.index.get(&leaf.digest) != Some(&slot) {
                return Err(format!("index does not resolve slot {slot}"));
            }
            if let Some(serial) = &leaf.serial {
                if serial.digest() != leaf.digest {
                    return Err(format!("leaf {slot} digest is not h(serial)"));
                }
            }
        }
        let mut below = s;
        for h in 1..=self.depth {
            let level = &self.levels[h - 1];
            let expected = if s == 0 { 1 } else { below.div_ceil(k) };
            if level.len() != expected {
                return Err(format!("height {h} has {} nodes, expected {expected}", level.len()));
            }
            for (j, node) in level.iter().enumerate() {
                let kids = below.saturating_sub(j * k).min(k);
                if node.child_count() != kids {
                    return Err(format!("node ({h},{j}) has {} children, expected {kids}", node.child_count()));
                }
                if node.tail.is_some() != (kids < k) {
                    return Err(format!("node ({h},{j}) retained state presence is wrong"));
                }
            }
            below = level.len();
        }
        if self.recompute_root() != self.root_digest() {
            return Err("stored root differs from a bottom-up rebuild".into());
        }
        Ok(())
    }

    fn reindex(&mut self) -> Result<(), TreeError> {
        self.index.clear();
        for (slot, leaf) in self.leaves.iter().enumerate() {
            if self.index.insert(leaf.digest, slot).is_some() {
                return Err(TreeError::DuplicateSerial);
            }
        }
        Ok(())
    }

    fn rebuild(&mut self, depth: usize) {
        debug_assert!(self.leaves.len() <= self.params.capacity(depth));
        let digests: Vec<Digest> = self.leaves.iter().map(|l| l.digest).collect();
        self.levels = build_levels(&digests, depth, &self.params, par::PARALLEL);
        self.depth = depth;
    }

    fn full_report_nodes(&self) -> Vec<ChangedNode> {
        let k = self.params.k;
        let mut nodes = vec![ChangedNode {
            path: TreePath::default(),
            kind: NodeKind::Reconstructed,
            digest: self.root_digest(),
        }];
        for h in (1..=self.depth).rev() {
            for (j, node) in self.levels[h - 1].iter().enumerate() {
                nodes.push(ChangedNode {
                    path: TreePath::from_index(j, k, self.depth - h),
                    kind: NodeKind::Internal,
                    digest: node.digest,
                });
            }
        }
        for (slot, leaf) in self.leaves.iter().enumerate() {
            nodes.push(ChangedNode {
                path: TreePath::from_index(slot, k, self.depth),
                kind: if leaf.tombstoned { NodeKind::Tombstone } else { NodeKind::Leaf },
                digest: leaf.digest,
            });
        }
        nodes
    }

    /// Under-full internal nodes, root first, with their retained state.
    pub(crate) fn retained_states(&self) -> Vec<(TreePath, DuplexState)> {
        let k = self.params.k;
        let mut out = Vec::new();
        for h in (1..=self.depth).rev() {
            for (j, node) in self.levels[h - 1].iter().enumerate() {
                if let Some(state) = node.tail {
                    out.push((TreePath::from_index(j, k, self.depth - h), state));
                }
            }
        }
        out
    }

    pub(crate) fn set_version(&mut self, version: u64) {
        self.version = version;
    }

    pub(crate) fn mark_tombstoned(&mut self, slot: usize) -> bool {
        match self.leaves.get_mut(slot) {
            Some(leaf) => {
                leaf.tombstoned = true;
                true
            }
            None => false,
        }
    }
}

impl PartialEq for RevocationTree {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
            && self.depth == other.depth
            && self.version == other.version
            && self.leaves == other.leaves
            && self.levels == other.levels
    }
}

/// Internal levels over `leaf_digests` at the given depth. Each level is
/// hashed in parallel chunks of `k` when `parallel` is set and the crate
/// has the rayon backend.
pub fn build_levels_for_bench(leaf_digests: &[Digest], params: &TreeParams, parallel: bool) -> Digest {
    let depth = params.depth_for(leaf_digests.len());
    build_levels(leaf_digests, depth, params, parallel)
        .last()
        .expect("depth >= 1")[0]
        .digest
}

fn build_levels(
    leaf_digests: &[Digest],
    depth: usize,
    params: &TreeParams,
    parallel: bool,
) -> Vec<Vec<InternalNode>> {
    let k = params.k;
    let mut levels: Vec<Vec<InternalNode>> = Vec::with_capacity(depth);
    let mut below: Vec<Digest> = leaf_digests.to_vec();
    for _ in 0..depth {
        let nodes = if below.is_empty() {
            vec![InternalNode::empty(params)]
        } else if parallel {
            par::chunk_map(&below, k, |kids| InternalNode::build(kids, params))
        } else {
            par::chunk_map_seq(&below, k, |kids| InternalNode::build(kids, params))
        };
        below = nodes.iter().map(|n| n.digest).collect();
        levels.push(nodes);
    }
    levels
}

#[cfg(test)]
mod tests {
    use super::*;

    fn serial(i: u32) -> SerialNumber {
        SerialNumber::new(format!("serial-{i}").into_bytes(), 1_000).unwrap()
    }

    fn tree_with(k: usize, n: u32) -> RevocationTree {
        let mut t = RevocationTree::new(TreeParams::with_k(k).unwrap());
        for i in 0..n {
            t.insert(serial(i)).unwrap();
        }
        t
    }

    #[test]
    fn empty_tree() {
        let t = RevocationTree::new(TreeParams::with_k(5).unwrap());
        assert_eq!(t.depth(), 1);
        assert_eq!(t.len(), 0);
        assert_eq!(t.root_digest(), hash(&[]));
        t.check_invariants().unwrap();
    }

    #[test]
    fn first_insert() {
        let mut t = RevocationTree::new(TreeParams::with_k(5).unwrap());
        let s = serial(0);
        let report = t.insert(s.clone()).unwrap();
        assert_eq!(t.depth(), 1);
        let (_, out) = DuplexState::new()
            .duplexing(&s.digest().to_bits())
            .unwrap();
        assert_eq!(t.root_digest(), parent_digest(&[out], 224).unwrap());
        assert_eq!(report.nodes.len(), 2);
        assert_eq!(report.version, 1);
    }

    #[test]
    fn sixth_insert_grows_a_level() {
        let mut t = tree_with(5, 5);
        assert_eq!(t.depth(), 1);
        let report = t.insert(serial(5)).unwrap();
        assert!(report.is_reconstruction());
        assert_eq!(t.depth(), 2);
        assert_eq!(t.len(), 6);
        t.check_invariants().unwrap();
    }

    #[test]
    fn insert_report_is_leaf_plus_ancestors() {
        let mut t = tree_with(3, 10);
        let report = t.insert(serial(10)).unwrap();
        assert!(!report.is_reconstruction());
        assert_eq!(report.nodes.len(), t.depth() + 1);
        assert_eq!(report.nodes.last().unwrap().path, TreePath::default());
        assert_eq!(report.nodes.last().unwrap().digest, t.root_digest());
    }

    #[test]
    fn duplicate_rejected() {
        let mut t = tree_with(3, 4);
        assert_eq!(t.insert(serial(2)), Err(TreeError::DuplicateSerial));
        assert_eq!(t.version(), 4);
    }

    #[test]
    fn full_tree_bundle_shape() {
        let t = tree_with(5, 25);
        assert_eq!(t.depth(), 2);
        let b = t.search(b"serial-7").unwrap();
        assert_eq!(b.levels.len(), 2);
        assert_eq!(b.levels[0].len(), 5);
        assert_eq!(b.levels[1].len(), 5);
        assert_eq!(b.path.digits(), &[1, 2]);
        assert!(t.search(b"nope").is_none());
    }

    #[test]
    fn partial_bundle_has_only_present_siblings() {
        let t = tree_with(3, 7);
        let b = t.search(b"serial-6").unwrap();
        assert_eq!(b.levels[0].len(), 3);
        assert_eq!(b.levels[1].len(), 1);
        assert_eq!(b.path.digits(), &[2, 0]);
    }

    #[test]
    fn delete_only_child_removes_parent() {
        let mut t = tree_with(3, 7);
        assert_eq!(t.level_len(1), 3);
        t.delete(b"serial-6").unwrap();
        assert_eq!(t.level_len(1), 2);
        assert_eq!(t.depth(), 2);
        t.check_invariants().unwrap();
    }

    #[test]
    fn delete_last_leaf_leaves_empty_tree() {
        let mut t = tree_with(4, 1);
        t.delete(b"serial-0").unwrap();
        assert!(t.is_empty());
        assert_eq!(t.depth(), 1);
        assert_eq!(t.root_digest(), hash(&[]));
        assert_eq!(t.delete(b"serial-0"), Err(TreeError::UnknownSerial));
    }

    #[test]
    fn delete_then_compacts_in_order() {
        let p = TreeParams::with_k(2).unwrap();
        let mk = |v: &str| SerialNumber::new(v.as_bytes().to_vec(), 0).unwrap();
        let mut t = RevocationTree::from_serials(p, [mk("a"), mk("b"), mk("c")]).unwrap();
        assert_eq!(t.depth(), 2);
        t.delete(b"b").unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.search(b"a").unwrap().path.digits(), &[0]);
        assert_eq!(t.search(b"c").unwrap().path.digits(), &[1]);
        let fresh = RevocationTree::from_serials(p, [mk("a"), mk("c")]).unwrap();
        assert_eq!(t.root_digest(), fresh.root_digest());
    }

    #[test]
    fn reconstruct_is_idempotent() {
        let mut t = tree_with(3, 11);
        let root = t.root_digest();
        let paths: Vec<_> = (0..11).map(|i| t.search(format!("serial-{i}").as_bytes()).unwrap().path).collect();
        t.reconstruct();
        assert_eq!(t.root_digest(), root);
        for (i, p) in paths.iter().enumerate() {
            assert_eq!(&t.search(format!("serial-{i}").as_bytes()).unwrap().path, p);
        }
    }

    fn expiring(i: u32, expiry: u64) -> SerialNumber {
        SerialNumber::new(format!("e{i}").into_bytes(), expiry).unwrap()
    }

    #[test]
    fn sweep_without_expiry_is_noop() {
        let mut t = tree_with(3, 5);
        let v = t.version();
        assert!(t.expire_sweep(10).is_empty());
        assert_eq!(t.version(), v);
    }

    #[test]
    fn sweep_tombstones_partial_groups() {
        let p = TreeParams::with_k(3).unwrap();
        let mut t = RevocationTree::from_serials(p, [expiring(0, 100), expiring(1, 5), expiring(2, 100)]).unwrap();
        let root = t.root_digest();
        let r = t.expire_sweep(10);
        assert_eq!(r.nodes.len(), 1);
        assert_eq!(r.nodes[0].kind, NodeKind::Tombstone);
        assert_eq!(t.root_digest(), root);
        assert_eq!(t.status(b"e1"), RevocationStatus::Expired);
        assert_eq!(t.status(b"e0"), RevocationStatus::Revoked);
        assert!(t.expire_sweep(10).is_empty());
    }

    #[test]
    fn sweep_removes_fully_expired_group() {
        let p = TreeParams::with_k(3).unwrap();
        let serials = [
            expiring(0, 5),
            expiring(1, 5),
            expiring(2, 5),
            expiring(3, 100),
            expiring(4, 100),
        ];
        let mut t = RevocationTree::from_serials(p, serials.clone()).unwrap();
        let r = t.expire_sweep(10);
        assert!(r.is_reconstruction());
        assert_eq!(t.len(), 2);
        assert_eq!(t.depth(), 1);
        let fresh = RevocationTree::from_serials(p, serials[3..].to_vec()).unwrap();
        assert_eq!(t.root_digest(), fresh.root_digest());
    }

    #[test]
    fn replica_follows_reports() {
        let mut ttp = tree_with(3, 4);
        let mut replica = ttp.clone();
        for i in 4..8 {
            let report = ttp.insert(serial(i)).unwrap();
            replica.apply_report(&report).unwrap();
            assert_eq!(replica.root_digest(), ttp.root_digest());
        }
        let grow = ttp.insert(serial(8)).unwrap();
        assert!(!grow.is_reconstruction());
        replica.apply_report(&grow).unwrap();
        let grow = ttp.insert(serial(9)).unwrap();
        assert_eq!(replica.apply_report(&grow), Err(TreeError::NeedsReload));
    }

    #[test]
    fn replica_rejects_forged_report() {
        let mut ttp = tree_with(3, 4);
        let mut replica = ttp.clone();
        let mut report = ttp.insert(serial(4)).unwrap();
        report.nodes.last_mut().unwrap().digest = hash(b"forged");
        assert!(matches!(replica.apply_report(&report), Err(TreeError::DeltaMismatch(_))));
        assert_eq!(replica.version(), 4);
    }

    #[test]
    fn path_round_trip() {
        for idx in 0..125 {
            let p = TreePath::from_index(idx, 5, 3);
            assert_eq!(p.to_index(5), idx);
            assert!(p.digits().iter().all(|&d| d < 5));
        }
    }
}
