//! Per-run metrics and the CSV report.

use std::fmt::Write as _;

use crate::protocol::NodeId;

pub const CSV_HEADER: &str =
    "seed,penetration,queries,proof_bytes,ok_bytes,delta_bytes,crl_bytes,impeachments,runtime_ms";

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReportRow {
    pub seed: u64,
    pub penetration: u32,
    pub queries: u64,
    pub proof_bytes: u64,
    pub ok_bytes: u64,
    pub delta_bytes: u64,
    pub crl_bytes: u64,
    pub impeachments: u64,
    /// Simulated duration in milliseconds (not wall-clock, which would make
    /// reports irreproducible).
    pub runtime_ms: u64,
}

impl ReportRow {
    /// Bytes the tree scheme spends answering queries.
    pub fn tree_bytes(&self) -> u64 {
        self.proof_bytes + self.ok_bytes
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Metrics {
    pub row: ReportRow,
    /// Revoked serials (tree leaves), branching factor and depth used.
    pub s: u64,
    pub k: u64,
    pub depth: u64,
    pub obus: u64,
    pub encounters: u64,
    pub authentications: u64,
    pub accepted: u64,
    pub refused: u64,
    pub proofs: u64,
    pub oks: u64,
    pub rsus_revoked: Vec<NodeId>,
    pub cheating_rsus: Vec<NodeId>,
    /// Revoked serials some OBU holds in its reliable cache at the end.
    pub revoked_cached_reliable: u64,
    /// Times an RSU answered with an OK that failed verification or a proof
    /// that failed; must stay zero.
    pub rejected_answers: u64,
    pub wall_clock_ms: u64,
}

/// Header plus one row per record, sorted by penetration, then seed.
pub fn emit_report<'a>(metrics: impl IntoIterator<Item = &'a Metrics>) -> String {
    let mut rows: Vec<ReportRow> = metrics.into_iter().map(|m| m.row).collect();
    rows.sort_by_key(|r| (r.penetration, r.seed));
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.seed,
            r.penetration,
            r.queries,
            r.proof_bytes,
            r.ok_bytes,
            r.delta_bytes,
            r.crl_bytes,
            r.impeachments,
            r.runtime_ms
        )
        .expect("write to String");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("report line {line}: {msg}")]
pub struct ReportParseError {
    pub line: usize,
    pub msg: String,
}

pub fn parse_report(csv: &str) -> Result<Vec<ReportRow>, ReportParseError> {
    let mut lines = csv.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(ReportParseError { line: 1, msg: "missing or unexpected header".into() }),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| ReportParseError { line: i + 1, msg };
        let f: Vec<u64> = line
            .split(',')
            .map(|x| x.trim().parse::<u64>().map_err(|e| err(format!("{x:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        if f.len() != 9 {
            return Err(err(format!("expected 9 fields, got {}", f.len())));
        }
        rows.push(ReportRow {
            seed: f[0],
            penetration: u32::try_from(f[1]).map_err(|_| err("penetration out of range".into()))?,
            queries: f[2],
            proof_bytes: f[3],
            ok_bytes: f[4],
            delta_bytes: f[5],
            crl_bytes: f[6],
            impeachments: f[7],
            runtime_ms: f[8],
        });
    }
    Ok(rows)
}
