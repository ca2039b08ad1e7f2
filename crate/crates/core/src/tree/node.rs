use crate::keccak::{hash, BitString, Digest, DuplexState, DIGEST_BITS};

use super::{TreeError, TreeParams};

/// Combines per-child output blocks into a parent digest: each of the `m`
/// blocks is cut to `⌊n/m⌋` bits, the first `n mod m` keep one extra bit,
/// and the pieces are concatenated in child order.
pub fn parent_digest(child_outputs: &[BitString], l_bits: usize) -> Result<Digest, TreeError> {
    let m = child_outputs.len();
    if m == 0 {
        return Err(TreeError::EmptyChildren);
    }
    if let Some(bad) = child_outputs.iter().find(|b| b.len() != l_bits) {
        return Err(TreeError::BadBlockLength {
            expected: l_bits,
            got: bad.len(),
        });
    }
    let mut out = BitString::new();
    for (i, block) in child_outputs.iter().enumerate() {
        out.extend(&block.prefix(share_bits(i, m)));
    }
    Ok(Digest::from_bits(&out).expect("shares sum to n"))
}

/// Bits contributed by child `i` of `m`.
pub fn share_bits(i: usize, m: usize) -> usize {
    DIGEST_BITS / m + usize::from(i < DIGEST_BITS % m)
}

/// Digest of a node whose children have the given digests, hashed from a
/// fresh duplex state (one call per child, in order). Verifiers use this.
pub fn node_digest(children: &[Digest], params: &TreeParams) -> Digest {
    InternalNode::build(children, params).digest
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct InternalNode {
    pub digest: Digest,
    pub child_outputs: Vec<BitString>,
    /// State before the last child was absorbed; lets a changed last child
    /// be re-absorbed with one call.
    pub prefix: Option<DuplexState>,
    /// Retained state for the next child; present iff fewer than k children.
    pub tail: Option<DuplexState>,
}

impl InternalNode {
    pub fn empty(params: &TreeParams) -> Self {
        Self {
            digest: hash(&[]),
            child_outputs: Vec::new(),
            prefix: None,
            tail: Some(params.fresh_duplex()),
        }
    }

    pub fn build(children: &[Digest], params: &TreeParams) -> Self {
        let mut node = Self::empty(params);
        for d in children {
            node.append_child(d, params);
        }
        node
    }

    pub fn child_count(&self) -> usize {
        self.child_outputs.len()
    }

    pub fn append_child(&mut self, digest: &Digest, params: &TreeParams) {
        let mut state = self.tail.take().expect("under-full node keeps its duplex state");
        self.prefix = Some(state);
        let out = state.duplex_bytes(digest.as_bytes()).expect("digest fits one block");
        self.child_outputs.push(out);
        self.finish(state, params);
    }

    /// Re-absorbs the last child after its digest changed.
    pub fn replace_last_child(&mut self, digest: &Digest, params: &TreeParams) {
        let mut state = self.prefix.expect("node with children keeps its prefix state");
        let out = state.duplex_bytes(digest.as_bytes()).expect("digest fits one block");
        *self.child_outputs.last_mut().expect("has children") = out;
        self.finish(state, params);
    }

    fn finish(&mut self, state: DuplexState, params: &TreeParams) {
        self.tail = (self.child_count() < params.k()).then_some(state);
        self.digest = parent_digest(&self.child_outputs, params.l_bits()).expect("non-empty");
    }
}
