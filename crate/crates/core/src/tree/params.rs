//! Closed-form sizes and selection of the branching factor.

use crate::keccak::DIGEST_BITS;

/// Range searched by [`choose_k`].
pub const CHOOSE_K_RANGE: std::ops::RangeInclusive<u64> = 2..=64;

/// Smallest `d >= 0` with `k^d >= s`, i.e. `⌈log_k s⌉` for `s >= 1`.
pub fn ceil_log(k: u64, s: u64) -> u32 {
    assert!(k >= 2, "k must be at least 2");
    let mut d = 0;
    let mut cap: u128 = 1;
    while cap < u128::from(s) {
        cap *= u128::from(k);
        d += 1;
    }
    d
}

/// Tree depth needed to hold `s` leaves (never below 1).
pub fn depth_for(k: u64, s: u64) -> u32 {
    ceil_log(k, s).max(1)
}

/// Maximum size in bits of a tree with branching `k` and depth `D`:
/// `n(k^(D+1) - 1)/(k - 1)`. Saturates at `u128::MAX`.
pub fn tree_size_bits(k: u64, depth: u32, n: u64) -> u128 {
    assert!(k >= 2 && depth >= 1, "need k >= 2 and D >= 1");
    let k = u128::from(k);
    k.checked_pow(depth + 1)
        .map(|p| (p - 1) / (k - 1))
        .and_then(|nodes| nodes.checked_mul(u128::from(n)))
        .unwrap_or(u128::MAX)
}

/// Worst-case proof payload in bits for a full tree: root plus `k` digests
/// per level.
pub fn worst_case_proof_bits(k: u64, depth: u32, n: u64) -> u128 {
    u128::from(n) * (u128::from(k) * u128::from(depth) + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KChoice {
    pub k: u64,
    pub depth: u32,
    pub proof_bits: u128,
    pub tree_bits: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChooseKError {
    #[error("expected revocation count must be at least 1")]
    ZeroRevocations,
    #[error("infeasible: no k in 2..=64 fits {memory_bits} bits of memory")]
    Infeasible { memory_bits: u128 },
}

/// Picks the `k` in `2..=64` with the smallest worst-case proof among those
/// whose full tree fits in `memory_bits`. Ties go to the smaller `k`.
pub fn choose_k(s: u64, memory_bits: u128) -> Result<KChoice, ChooseKError> {
    choose_k_with_digest(s, memory_bits, DIGEST_BITS as u64)
}

pub fn choose_k_with_digest(s: u64, memory_bits: u128, n: u64) -> Result<KChoice, ChooseKError> {
    if s == 0 {
        return Err(ChooseKError::ZeroRevocations);
    }
    let mut best: Option<KChoice> = None;
    for k in CHOOSE_K_RANGE {
        let depth = depth_for(k, s);
        let tree_bits = tree_size_bits(k, depth, n);
        if tree_bits > memory_bits {
            continue;
        }
        let proof_bits = worst_case_proof_bits(k, depth, n);
        if best.is_none_or(|b| proof_bits < b.proof_bits) {
            best = Some(KChoice {
                k,
                depth,
                proof_bits,
                tree_bits,
            });
        }
    }
    best.ok_or(ChooseKError::Infeasible { memory_bits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_size_examples() {
        assert_eq!(tree_size_bits(5, 2, 224), 6944);
        assert_eq!(tree_size_bits(2, 1, 224), 672);
    }

    #[test]
    fn tree_size_matches_summation() {
        for k in 2..=10u64 {
            for d in 1..=6u32 {
                let sum: u128 = (0..=d).map(|i| u128::from(k).pow(i)).sum();
                assert_eq!(tree_size_bits(k, d, 224), 224 * sum);
            }
        }
    }

    #[test]
    fn depth_examples() {
        assert_eq!(ceil_log(5, 135), 4);
        assert_eq!(ceil_log(3, 135), 5);
        assert_eq!(ceil_log(2, 135), 8);
        assert_eq!(ceil_log(5, 125), 3);
        assert_eq!(ceil_log(5, 126), 4);
        assert_eq!(depth_for(7, 1), 1);
        assert_eq!(ceil_log(2, u64::MAX), 64);
    }

    #[test]
    fn choose_k_examples() {
        let c = choose_k(135, 10_000_000).unwrap();
        assert_eq!((c.k, c.depth, c.proof_bits), (3, 5, 3584));
        assert_eq!(choose_k(1, 10_000_000).unwrap().k, 2);
        assert_eq!(choose_k(135, 0), Err(ChooseKError::Infeasible { memory_bits: 0 }));
        assert_eq!(choose_k(0, 1 << 40), Err(ChooseKError::ZeroRevocations));
    }

    #[test]
    fn saturates_instead_of_overflowing() {
        assert_eq!(tree_size_bits(64, 40, 224), u128::MAX);
    }
}
