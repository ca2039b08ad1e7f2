//! Closed-form sizes for the CRL baseline and for proofs.

use std::collections::BTreeSet;

use crate::protocol::NodeId;
use crate::tree::{depth_for, tree_size_bits};

pub const CERT_BITS: u64 = 224;

/// One status query, as seen by both accountings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct QueryEvent {
    pub time: u64,
    pub obu: NodeId,
}

/// Size of a CRL listing `s` certificates, signature excluded.
pub fn crl_size_bits(s: u64, cert_bits: u64) -> u128 {
    u128::from(s) * u128::from(cert_bits)
}

/// Bytes of one CRL download: the list plus its signature.
pub fn crl_download_bytes(s: u64, cert_bits: u64, signature_bits: u64) -> u128 {
    (crl_size_bits(s, cert_bits) + u128::from(signature_bits)).div_ceil(8)
}

/// Charges one full CRL download for each OBU's first query in each epoch
/// (`epoch_s = 0`: a single epoch covering the whole run).
pub fn crl_baseline_bytes(
    events: &[QueryEvent],
    s: u64,
    cert_bits: u64,
    signature_bits: u64,
    epoch_s: u64,
) -> u128 {
    let downloads: BTreeSet<(u64, NodeId)> = events
        .iter()
        .map(|e| (e.time.checked_div(epoch_s).unwrap_or(0), e.obu))
        .collect();
    downloads.len() as u128 * crl_download_bytes(s, cert_bits, signature_bits)
}

/// Proof payload: the root digest, one `n`-bit digest per carried child,
/// and the signature. `l` does not enter: child records hold digests.
pub fn proof_size_bits(n: u64, child_counts: &[u64], signature_bits: u64) -> u128 {
    let children: u128 = child_counts.iter().map(|&m| u128::from(m)).sum();
    u128::from(n) * (1 + children) + u128::from(signature_bits)
}

/// Full-tree case `n·(k·D + 1) + signature`.
pub fn full_proof_size_bits(k: u64, depth: u32, n: u64, signature_bits: u64) -> u128 {
    proof_size_bits(n, &vec![k; depth as usize], signature_bits)
}

/// Smallest query count `Q` at which answering every query with a CRL costs
/// more than shipping the full tree once and then a proof per query:
/// `Q·C > T + Q·p`. `None` if a proof is not smaller than a CRL.
pub fn crossover_queries(k: u64, s: u64, n: u64, signature_bits: u64) -> Option<u128> {
    let depth = depth_for(k, s.max(1));
    let tree = tree_size_bits(k, depth, n);
    let crl = crl_size_bits(s, CERT_BITS) + u128::from(signature_bits);
    let proof = full_proof_size_bits(k, depth, n, signature_bits);
    (crl > proof).then(|| tree / (crl - proof) + 1)
}
