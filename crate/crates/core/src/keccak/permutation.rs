//! Keccak-f[800]: the Keccak permutation over a 5×5 matrix of 32-bit lanes.

/// Number of rounds of Keccak-f[800] (12 + 2ℓ with ℓ = 5).
pub const ROUNDS: usize = 22;

/// State width in bits.
pub const STATE_BITS: usize = 800;
pub const STATE_BYTES: usize = STATE_BITS / 8;

// Low 32 bits of the Keccak round constants for rounds 0..22.
const ROUND_CONSTANTS: [u32; ROUNDS] = [
    0x0000_0001,
    0x0000_8082,
    0x0000_808a,
    0x8000_8000,
    0x0000_808b,
    0x8000_0001,
    0x8000_8081,
    0x0000_8009,
    0x0000_008a,
    0x0000_0088,
    0x8000_8009,
    0x8000_000a,
    0x8000_808b,
    0x0000_008b,
    0x0000_8089,
    0x0000_8003,
    0x0000_8002,
    0x0000_0080,
    0x0000_800a,
    0x8000_000a,
    0x8000_8081,
    0x0000_8080,
];

// Rho offsets indexed by x + 5y, reduced mod 32.
const RHO: [u32; 25] = [
    0, 1, 62 % 32, 28, 27, //
    36 % 32, 44 % 32, 6, 55 % 32, 20, //
    3, 10, 43 % 32, 25, 39 % 32, //
    41 % 32, 45 % 32, 15, 21, 8, //
    18, 2, 61 % 32, 56 % 32, 14,
];

/// The 800-bit Keccak state as 25 lanes, lane `(x, y)` at index `x + 5y`.
///
/// Byte form is the reference convention: lanes in index order, each lane
/// little-endian.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LaneMatrix {
    lanes: [u32; 25],
}

impl LaneMatrix {
    pub const fn zero() -> Self {
        Self { lanes: [0; 25] }
    }

    pub fn from_lanes(lanes: [u32; 25]) -> Self {
        Self { lanes }
    }

    pub fn lanes(&self) -> &[u32; 25] {
        &self.lanes
    }

    pub fn lane(&self, x: usize, y: usize) -> u32 {
        self.lanes[x + 5 * y]
    }

    pub fn from_bytes(bytes: &[u8; STATE_BYTES]) -> Self {
        let mut lanes = [0u32; 25];
        for (lane, chunk) in lanes.iter_mut().zip(bytes.chunks_exact(4)) {
            *lane = u32::from_le_bytes(chunk.try_into().expect("4-byte chunk"));
        }
        Self { lanes }
    }

    pub fn to_bytes(&self) -> [u8; STATE_BYTES] {
        let mut out = [0u8; STATE_BYTES];
        for (chunk, lane) in out.chunks_exact_mut(4).zip(self.lanes.iter()) {
            chunk.copy_from_slice(&lane.to_le_bytes());
        }
        out
    }

    /// XORs `bytes` into the leading bytes of the state.
    pub(crate) fn xor_bytes(&mut self, bytes: &[u8]) {
        debug_assert!(bytes.len() <= STATE_BYTES);
        for (i, b) in bytes.iter().enumerate() {
            self.lanes[i / 4] ^= u32::from(*b) << (8 * (i % 4));
        }
    }
}

impl std::fmt::Debug for LaneMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LaneMatrix({})", hex::encode(self.to_bytes()))
    }
}

/// One round (theta, rho, pi, chi, iota) with round index `round`.
pub fn round(state: &mut LaneMatrix, round: usize) {
    let a = &mut state.lanes;

    let mut c = [0u32; 5];
    for x in 0..5 {
        c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
    }
    for x in 0..5 {
        let d = c[(x + 4) % 5] ^ c[(x + 1) % 5].rotate_left(1);
        for y in 0..5 {
            a[x + 5 * y] ^= d;
        }
    }

    // rho + pi: B[y, 2x + 3y] = rot(A[x, y], r[x, y])
    let mut b = [0u32; 25];
    for x in 0..5 {
        for y in 0..5 {
            b[y + 5 * ((2 * x + 3 * y) % 5)] = a[x + 5 * y].rotate_left(RHO[x + 5 * y]);
        }
    }

    for y in 0..5 {
        let row = 5 * y;
        for x in 0..5 {
            a[row + x] = b[row + x] ^ (!b[row + (x + 1) % 5] & b[row + (x + 2) % 5]);
        }
    }

    a[0] ^= ROUND_CONSTANTS[round];
}

pub fn permute_in_place(state: &mut LaneMatrix) {
    for r in 0..ROUNDS {
        round(state, r);
    }
}

/// Keccak-f[800] applied to a copy of `state`.
pub fn keccak_f800(state: LaneMatrix) -> LaneMatrix {
    let mut out = state;
    permute_in_place(&mut out);
    out
}
