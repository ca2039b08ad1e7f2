//! Reference tree hashing built directly on the RustCrypto Keccak-f[800],
//! sharing no code with the crate under test.

#![allow(dead_code)]

const RATE: usize = 44;
const N: usize = 224;

fn absorb(state: &mut [u32; 25], input: &[u8]) {
    assert!(input.len() < RATE);
    let mut block = [0u8; RATE];
    block[..input.len()].copy_from_slice(input);
    block[input.len()] ^= 0x01;
    block[RATE - 1] ^= 0x80;
    for (lane, word) in state.iter_mut().zip(block.chunks(4)) {
        *lane ^= u32::from_le_bytes(word.try_into().unwrap());
    }
    keccak::f800(state);
}

fn bit(state: &[u32; 25], i: usize) -> bool {
    (state[i / 32] >> (i % 32)) & 1 == 1
}

/// `h`: one duplexing call per 43-byte chunk, output of the last call.
pub fn h(msg: &[u8]) -> [u8; 28] {
    let mut s = [0u32; 25];
    if msg.is_empty() {
        absorb(&mut s, &[]);
    }
    for c in msg.chunks(43) {
        absorb(&mut s, c);
    }
    let mut out = [0u8; 28];
    for i in 0..N {
        out[i / 8] |= u8::from(bit(&s, i)) << (i % 8);
    }
    out
}

/// Parent of `children` with duplex output length `l`: child `i` of `m`
/// contributes the first `224/m` bits of its output, plus one for the
/// first `224 mod m` children.
pub fn node(children: &[[u8; 28]], l: usize) -> [u8; 28] {
    let m = children.len();
    assert!(m > 0);
    let mut s = [0u32; 25];
    let mut out = [0u8; 28];
    let mut pos = 0;
    for (i, c) in children.iter().enumerate() {
        absorb(&mut s, c);
        let share = N / m + usize::from(i < N % m);
        assert!(share <= l);
        for b in 0..share {
            out[pos / 8] |= u8::from(bit(&s, b)) << (pos % 8);
            pos += 1;
        }
    }
    assert_eq!(pos, N);
    out
}

/// Root of the left-filled `k`-ary tree of height `depth` over `leaves`.
pub fn root(leaves: &[[u8; 28]], k: usize, depth: usize, l: usize) -> [u8; 28] {
    if leaves.is_empty() {
        return h(b"");
    }
    let mut level = leaves.to_vec();
    for _ in 0..depth {
        level = level.chunks(k).map(|c| node(c, l)).collect();
    }
    assert_eq!(level.len(), 1, "depth too small for {} leaves", leaves.len());
    level[0]
}

/// `max(1, ⌈log_k s⌉)` by repeated multiplication.
pub fn depth(s: usize, k: usize) -> usize {
    let (mut d, mut cap) = (1, k);
    while cap < s {
        d += 1;
        cap *= k;
    }
    d
}

pub fn root_of_serials(serials: &[Vec<u8>], k: usize, l: usize) -> [u8; 28] {
    let leaves: Vec<[u8; 28]> = serials.iter().map(|s| h(s)).collect();
    root(&leaves, k, depth(serials.len(), k), l)
}

/// Brute force over `k ∈ [2, 64]`: smallest full-path proof
/// `n·(k·D + 1)` among trees of `n·Σ k^i` bits that fit, ties to smaller k.
/// Returns `(k, D)`.
pub fn choose_k_brute(s: u64, memory_bits: u128) -> Option<(u64, u32)> {
    let n = 224u128;
    let mut best: Option<(u128, u64, u32)> = None;
    for k in 2..=64u64 {
        let d = depth(s as usize, k as usize) as u32;
        let nodes: u128 = (0..=d).map(|i| u128::from(k).pow(i)).sum();
        if n * nodes > memory_bits {
            continue;
        }
        let proof = n * (u128::from(k) * u128::from(d) + 1);
        if best.is_none_or(|(p, _, _)| proof < p) {
            best = Some((proof, k, d));
        }
    }
    best.map(|(_, k, d)| (k, d))
}
