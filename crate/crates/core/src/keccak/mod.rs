//! Keccak-f[800] with 32-bit lanes, `pad10*1`, the duplex construction and
//! the 224-bit tree hash.

mod bits;
mod duplex;
mod permutation;

pub use bits::{pad, unpad, BitString};
pub use duplex::{
    hash, Digest, DuplexState, CAPACITY_BITS, DEFAULT_OUTPUT_BITS, DIGEST_BITS, DIGEST_BYTES,
    HASH_CHUNK_BYTES, MAX_DUPLEX_INPUT_BITS, RATE_BITS, RATE_BYTES,
};
pub use permutation::{keccak_f800, permute_in_place, round, LaneMatrix, ROUNDS, STATE_BYTES};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KeccakError {
    #[error("duplex input of {bits} bits exceeds the {max}-bit limit")]
    InputTooLong { bits: usize, max: usize },
    #[error("output length {0} must satisfy 0 < l < r")]
    BadOutputLength(usize),
}
