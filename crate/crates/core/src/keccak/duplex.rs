//! The duplex construction over Keccak-f[800] and the 224-bit digest built
//! on top of it.

use std::fmt;

use super::bits::{pad, BitString};
use super::permutation::{permute_in_place, LaneMatrix, STATE_BITS};
use super::KeccakError;

/// Rate `r` in bits.
pub const RATE_BITS: usize = 352;
/// Capacity `c` in bits (`2n`).
pub const CAPACITY_BITS: usize = STATE_BITS - RATE_BITS;
pub const RATE_BYTES: usize = RATE_BITS / 8;
/// Digest size `n` in bits.
pub const DIGEST_BITS: usize = 224;
pub const DIGEST_BYTES: usize = DIGEST_BITS / 8;
/// Longest input accepted by one duplexing call: `r - 2` bits.
pub const MAX_DUPLEX_INPUT_BITS: usize = RATE_BITS - 2;
/// Byte-aligned chunk size used by [`hash`]: 344 bits.
pub const HASH_CHUNK_BYTES: usize = MAX_DUPLEX_INPUT_BITS / 8;
pub const DEFAULT_OUTPUT_BITS: usize = DIGEST_BITS;

const _: () = assert!(CAPACITY_BITS == 2 * DIGEST_BITS);

/// Duplex object: the Keccak state plus the per-call output length `l`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct DuplexState {
    state: LaneMatrix,
    output_bits: usize,
    calls: u64,
}

impl Default for DuplexState {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for DuplexState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DuplexState")
            .field("output_bits", &self.output_bits)
            .field("calls", &self.calls)
            .field("state", &self.state)
            .finish()
    }
}

impl DuplexState {
    /// Fresh all-zero state with `l = 224`.
    pub fn new() -> Self {
        Self {
            state: LaneMatrix::zero(),
            output_bits: DEFAULT_OUTPUT_BITS,
            calls: 0,
        }
    }

    /// Fresh state with a custom output length; requires `0 < l < r`.
    pub fn with_output_bits(output_bits: usize) -> Result<Self, KeccakError> {
        if output_bits == 0 || output_bits >= RATE_BITS {
            return Err(KeccakError::BadOutputLength(output_bits));
        }
        Ok(Self {
            output_bits,
            ..Self::new()
        })
    }

    /// Rebuilds a state from its 100-byte image (as stored in tree files).
    pub fn from_parts(state: LaneMatrix, output_bits: usize, calls: u64) -> Result<Self, KeccakError> {
        let mut s = Self::with_output_bits(output_bits)?;
        s.state = state;
        s.calls = calls;
        Ok(s)
    }

    pub fn state(&self) -> &LaneMatrix {
        &self.state
    }

    pub fn output_bits(&self) -> usize {
        self.output_bits
    }

    pub fn call_count(&self) -> u64 {
        self.calls
    }

    /// One duplexing call on a copy of `self`: pad `input` into a single
    /// rate block, XOR it into the outer part, permute, and return the first
    /// `l` bits of the outer part.
    pub fn duplexing(&self, input: &BitString) -> Result<(DuplexState, BitString), KeccakError> {
        if input.len() > MAX_DUPLEX_INPUT_BITS {
            return Err(KeccakError::InputTooLong {
                bits: input.len(),
                max: MAX_DUPLEX_INPUT_BITS,
            });
        }
        let block = pad(input, RATE_BITS).pop().expect("one block");
        let mut next = *self;
        next.absorb_block(block.as_bytes());
        let out = next.output();
        Ok((next, out))
    }

    /// Byte-aligned duplexing call, in place. `input` must be at most
    /// [`HASH_CHUNK_BYTES`] long.
    pub fn duplex_bytes(&mut self, input: &[u8]) -> Result<BitString, KeccakError> {
        if input.len() > HASH_CHUNK_BYTES {
            return Err(KeccakError::InputTooLong {
                bits: input.len() * 8,
                max: MAX_DUPLEX_INPUT_BITS,
            });
        }
        let mut block = [0u8; RATE_BYTES];
        block[..input.len()].copy_from_slice(input);
        block[input.len()] ^= 0x01;
        block[RATE_BYTES - 1] ^= 0x80;
        self.absorb_block(&block);
        Ok(self.output())
    }

    fn absorb_block(&mut self, block: &[u8]) {
        xor_into_rate(&mut self.state, block);
        permute_in_place(&mut self.state);
        self.calls += 1;
    }

    fn output(&self) -> BitString {
        BitString::from_bytes_with_len(&self.state.to_bytes(), self.output_bits)
    }
}

/// XORs one padded block into the outer `r` bits. The inner `c` bits are
/// never touched.
pub(crate) fn xor_into_rate(state: &mut LaneMatrix, block: &[u8]) {
    assert_eq!(block.len(), RATE_BYTES, "block must be exactly r bits");
    state.xor_bytes(block);
}

/// A 224-bit digest.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest(pub [u8; DIGEST_BYTES]);

impl Digest {
    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        bytes.try_into().ok().map(Digest)
    }

    pub fn from_bits(bits: &BitString) -> Option<Self> {
        (bits.len() == DIGEST_BITS).then(|| Digest(bits.as_bytes().try_into().expect("28 bytes")))
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_BYTES] {
        &self.0
    }

    pub fn to_bits(&self) -> BitString {
        BitString::from_bytes(&self.0)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        hex::decode(s).ok().and_then(|b| Self::from_slice(&b))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// The tree hash `h`.
///
/// The message is cut into 43-byte chunks (one empty chunk for the empty
/// message), each fed to one duplexing call on a fresh state. The digest is
/// the output of the call that absorbs the last chunk, so every byte of the
/// message reaches it.
pub fn hash(message: &[u8]) -> Digest {
    let mut duplex = DuplexState::new();
    let mut out = None;
    let mut chunks = message.chunks(HASH_CHUNK_BYTES).peekable();
    if chunks.peek().is_none() {
        out = Some(duplex.duplex_bytes(&[]).expect("empty chunk fits"));
    }
    for chunk in chunks {
        out = Some(duplex.duplex_bytes(chunk).expect("chunk fits"));
    }
    let out = out.expect("at least one duplexing call");
    Digest::from_bits(&out).expect("l = n")
}
