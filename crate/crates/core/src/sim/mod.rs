//! Seeded, single-threaded scenario runner.
//!
//! Vehicles follow random-waypoint mobility on a square area split into RSU
//! cells. When two OBU-equipped vehicles come into radio range, each may
//! authenticate the other's current pseudonym; unknown pseudonyms are
//! checked with the RSU of the current cell and re-asked at later cells
//! until a proof arrives or the trust threshold is met. The same stream of
//! queries is charged to a CRL baseline.
//!
//! Every random choice is keyed by the seed and a vehicle id, so a vehicle
//! moves the same way at any penetration and the OBU set at a lower
//! penetration is a subset of the set at a higher one.

mod config;
mod mobility;
mod report;
mod sizes;

pub use config::{ConfigInvalid, ScenarioConfig};
pub use mobility::Mobility;
pub use report::{emit_report, parse_report, Metrics, ReportParseError, ReportRow, CSV_HEADER};
pub use sizes::{
    crl_baseline_bytes, crl_download_bytes, crl_size_bits, crossover_queries, full_proof_size_bits,
    proof_size_bits, QueryEvent, CERT_BITS,
};

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::auth::{KeyedDigestScheme, SharedSecret, SignatureScheme};
use crate::keccak::hash;
use crate::par;
use crate::protocol::{
    Answer, Envelope, NodeId, Obu, ObuAction, Payload, Precheck, PseudonymGroup, Rsu, RsuBehaviour, Ttp,
    BROADCAST,
};
use crate::tree::{choose_k, SerialNumber, TreeParams};

/// OBU node ids are this plus the vehicle index.
pub const OBU_ID_BASE: NodeId = 1 << 24;

const STREAM_OBU_ORDER: u64 = u64::MAX;
const STREAM_REVOKED_ORDER: u64 = u64::MAX - 1;
const STREAM_KEYS: u64 = u64::MAX - 2;
const STREAM_RSU_CELLS: u64 = u64::MAX - 3;

pub(crate) fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Whether `from` authenticates `to` when they meet at time `t`. A pure
/// function of its inputs, so it does not depend on who else is simulated.
fn authenticates(seed: u64, t: u64, from: usize, to: usize, threshold: u64) -> bool {
    let h = splitmix(splitmix(splitmix(seed ^ t.rotate_left(17)) ^ from as u64) ^ ((to as u64) << 1));
    (h >> 11) < threshold
}

/// Pseudonym serial `i` of vehicle `v`: 16 bytes derived from both.
pub fn pseudonym_serial(v: usize, i: usize) -> Vec<u8> {
    let mut input = b"pseudonym".to_vec();
    input.extend_from_slice(&(v as u64).to_be_bytes());
    input.extend_from_slice(&(i as u64).to_be_bytes());
    hash(&input).as_bytes()[..16].to_vec()
}

struct Runner {
    ttp: Ttp<KeyedDigestScheme>,
    rsus: Vec<Rsu<KeyedDigestScheme>>,
    obus: Vec<Obu<KeyedDigestScheme>>,
    /// Serials each OBU still wants answered.
    wanted: Vec<BTreeSet<Vec<u8>>>,
    events: Vec<QueryEvent>,
    m: Metrics,
}

impl Runner {
    fn ask(&mut self, o: usize, r: usize, serial: &[u8], now: u64) {
        let rsu_id = self.rsus[r].id();
        if !self.obus[o].should_query(serial, rsu_id) {
            return;
        }
        self.m.row.queries += 1;
        self.events.push(QueryEvent { time: now, obu: self.obus[o].id() });
        let query = self.obus[o].query(serial, rsu_id, now);
        let answer = self.rsus[r].handle(&query).expect("RSUs accept queries").remove(0);
        match &answer.payload {
            Payload::Answer(Answer::Proof(p)) => {
                self.m.proofs += 1;
                self.m.row.proof_bytes += p.to_bytes().len() as u64;
            }
            Payload::Answer(Answer::Ok(ok)) => {
                self.m.oks += 1;
                self.m.row.ok_bytes += ok.to_bytes().len() as u64;
            }
            _ => unreachable!("RSUs answer queries with answers"),
        }
        for action in self.obus[o].handle(&answer) {
            match action {
                ObuAction::Dropped(_) => self.m.rejected_answers += 1,
                ObuAction::Send(env) => {
                    self.m.row.impeachments += 1;
                    self.route_impeachment(&env, now);
                }
                _ => {}
            }
        }
        if self.obus[o].precheck(serial) != Precheck::Unknown {
            self.wanted[o].remove(serial);
        }
    }

    fn route_impeachment(&mut self, env: &Envelope, now: u64) {
        let Some(relay) = self.rsus.iter_mut().find(|r| r.id() == env.receiver) else {
            return;
        };
        for fwd in relay.handle(env).expect("RSUs accept impeachments") {
            let Payload::Impeachment(imp) = &fwd.payload else { continue };
            let Ok(notices) = self.ttp.handle_impeachment(imp, now) else { continue };
            self.m.rsus_revoked.push(imp.accused_rsu_id);
            for notice in notices {
                debug_assert_eq!(notice.receiver, BROADCAST);
                for rsu in &mut self.rsus {
                    rsu.handle(&notice).expect("RSUs accept notices");
                }
                for obu in &mut self.obus {
                    obu.handle(&notice);
                }
            }
        }
    }

    fn deliver_deltas(&mut self, envs: Vec<Envelope>) {
        for env in envs {
            self.m.row.delta_bytes += env.payload.to_bytes().len() as u64;
            let rsu = self.rsus.iter_mut().find(|r| r.id() == env.receiver).expect("addressed RSU");
            rsu.handle(&env).expect("TTP deltas apply");
        }
    }
}

/// Runs one scenario. Deterministic for a fixed configuration.
pub fn run_simulation(cfg: &ScenarioConfig) -> Result<Metrics, ConfigInvalid> {
    cfg.validate()?;
    let started = Instant::now();
    let seed = cfg.rng_seed;
    let n = cfg.n_vehicles;
    let p = cfg.pseudonyms_per_obu;

    let mut obu_order: Vec<usize> = (0..n).collect();
    obu_order.shuffle(&mut rng(seed, STREAM_OBU_ORDER));
    let mut equipped: Vec<usize> = obu_order[..cfg.obu_count()].to_vec();
    equipped.sort_unstable();
    let mut revoked_order: Vec<usize> = (0..n).collect();
    revoked_order.shuffle(&mut rng(seed, STREAM_REVOKED_ORDER));
    let revoked: Vec<usize> = revoked_order[..cfg.revoked_vehicles()].to_vec();

    let s = (revoked.len() * p) as u64;
    let k = match cfg.k {
        0 if s == 0 => 2,
        0 => choose_k(s, cfg.memory_bits)
            .map_err(|e| ConfigInvalid(e.to_string()))?
            .k as usize,
        k => k,
    };
    let params = TreeParams::with_k(k).map_err(|e| ConfigInvalid(e.to_string()))?;

    let scheme = KeyedDigestScheme;
    let mut key_rng = rng(seed, STREAM_KEYS);
    let (ttp_key, ttp_vk) = scheme.generate_keypair(&mut key_rng);
    let mut ttp = Ttp::new(scheme, ttp_key, 1, params, 0);

    let (rows, cols) = cfg.rsu_cell_layout;
    let mut cells: Vec<usize> = (0..rows * cols).collect();
    cells.shuffle(&mut rng(seed, STREAM_RSU_CELLS));
    let mut cell_rsu: Vec<Option<usize>> = vec![None; rows * cols];
    let mut rsus = Vec::with_capacity(cfg.n_rsus);
    let mut rsu_keys: BTreeMap<NodeId, SharedSecret> = BTreeMap::new();
    let mut cheaters = Vec::new();
    for (i, &cell) in cells.iter().take(cfg.n_rsus).enumerate() {
        let id = i as NodeId + 1;
        let behaviour = if i < cfg.cheating_rsus {
            cheaters.push(id);
            RsuBehaviour::OkForRevoked
        } else {
            RsuBehaviour::Honest
        };
        let (sk, vk) = scheme.generate_keypair(&mut key_rng);
        let mut rsu = Rsu::new(id, scheme, sk, ttp_vk.clone(), params, behaviour);
        let boot = ttp.register_rsu(id, vk.clone(), 0);
        rsu.handle(&boot).map_err(|e| ConfigInvalid(e.to_string()))?;
        rsu_keys.insert(id, vk);
        cell_rsu[cell] = Some(i);
        rsus.push(rsu);
    }

    let expiry = cfg.sim_duration_s.saturating_mul(10);
    for v in 0..n {
        let pseudonyms = (0..p)
            .map(|i| SerialNumber::new(pseudonym_serial(v, i), expiry).expect("16-byte serial"))
            .collect();
        ttp.register_group(PseudonymGroup::new(OBU_ID_BASE + v as NodeId, pseudonyms))
            .map_err(|e| ConfigInvalid(e.to_string()))?;
    }

    let obus: Vec<_> = equipped
        .iter()
        .map(|&v| {
            Obu::new(OBU_ID_BASE + v as NodeId, scheme, ttp_vk.clone(), rsu_keys.clone())
                .with_threshold(cfg.trust_threshold)
        })
        .collect();
    let mut run = Runner {
        ttp,
        rsus,
        wanted: vec![BTreeSet::new(); obus.len()],
        obus,
        events: Vec::new(),
        m: Metrics {
            cheating_rsus: cheaters,
            obus: equipped.len() as u64,
            ..Metrics::default()
        },
    };
    for &v in &revoked {
        let envs = run.ttp.revoke_obu(OBU_ID_BASE + v as NodeId, 0).expect("registered group");
        run.deliver_deltas(envs);
    }
    run.m.s = run.ttp.tree().len() as u64;
    run.m.k = k as u64;
    run.m.depth = run.ttp.tree().depth() as u64;

    let revoked_serials: BTreeSet<Vec<u8>> =
        revoked.iter().flat_map(|&v| (0..p).map(move |i| pseudonym_serial(v, i))).collect();
    let auth_p = 1.0 - (-cfg.query_rate).exp();
    let auth_threshold = (auth_p * (1u64 << 53) as f64) as u64;
    let side = cfg.area_side_m();
    let mut mobility = Mobility::new(cfg, seed, &equipped);
    let mut cell_of: Vec<Option<usize>> = vec![None; equipped.len()];
    let pseudonym_period = cfg.sim_duration_s.div_ceil(p as u64).max(1);

    for t in 0..cfg.sim_duration_s {
        if t > 0 {
            mobility.step(1.0);
        }
        let now = t;
        for o in 0..equipped.len() {
            let (x, y) = mobility.position(o);
            let cell = cell_index(x, y, side, rows, cols);
            if cell_of[o] == Some(cell) {
                continue;
            }
            cell_of[o] = Some(cell);
            if let Some(r) = cell_rsu[cell] {
                run.obus[o].observe_version(run.rsus[r].tree_version());
                let wanted: Vec<Vec<u8>> = run.wanted[o].iter().cloned().collect();
                for serial in wanted {
                    run.ask(o, r, &serial, now);
                }
            }
        }
        let current = (t / pseudonym_period) as usize;
        for (a, b) in mobility.new_encounters() {
            run.m.encounters += 1;
            for (o, other) in [(a, b), (b, a)] {
                let (from, to) = (equipped[o], equipped[other]);
                if !authenticates(seed, t, from, to, auth_threshold) {
                    continue;
                }
                run.m.authentications += 1;
                let serial = pseudonym_serial(to, current.min(p - 1));
                if run.obus[o].precheck(&serial) == Precheck::Unknown {
                    run.wanted[o].insert(serial.clone());
                    if let Some(r) = cell_of[o].and_then(|c| cell_rsu[c]) {
                        run.ask(o, r, &serial, now);
                    }
                }
                if run.obus[o].accepts(&serial) {
                    run.m.accepted += 1;
                } else {
                    run.m.refused += 1;
                }
            }
        }
    }

    for obu in &run.obus {
        debug_assert!(obu.check_invariants().is_ok());
        run.m.revoked_cached_reliable +=
            obu.cache().reliable.keys().filter(|s| revoked_serials.contains(*s)).count() as u64;
    }
    assert_eq!(run.m.rejected_answers, 0, "every RSU answer must verify");
    let sig_bits = 8 * KeyedDigestScheme.sign(&SharedSecret([0; 32]), b"").len() as u64;
    run.m.row.crl_bytes = crl_baseline_bytes(&run.events, run.m.s, CERT_BITS, sig_bits, cfg.crl_epoch_s)
        .try_into()
        .unwrap_or(u64::MAX);
    run.m.row.seed = seed;
    run.m.row.penetration = cfg.obu_penetration_percent;
    run.m.row.runtime_ms = cfg.sim_duration_s * 1000;
    run.m.wall_clock_ms = started.elapsed().as_millis() as u64;
    Ok(run.m)
}

fn cell_index(x: f64, y: f64, side: f64, rows: usize, cols: usize) -> usize {
    let r = ((y / side * rows as f64) as usize).min(rows - 1);
    let c = ((x / side * cols as f64) as usize).min(cols - 1);
    r * cols + c
}

/// Runs the scenario for every (penetration, seed) pair, in parallel when
/// the `parallel` feature is on. Results are sorted by penetration, then seed.
pub fn run_sweep(
    base: &ScenarioConfig,
    penetrations: &[u32],
    seeds: &[u64],
) -> Result<Vec<Metrics>, ConfigInvalid> {
    let jobs: Vec<ScenarioConfig> = penetrations
        .iter()
        .flat_map(|&pen| {
            seeds.iter().map(move |&seed| ScenarioConfig {
                obu_penetration_percent: pen,
                rng_seed: seed,
                ..base.clone()
            })
        })
        .collect();
    let mut out = par::map(&jobs, run_simulation).into_iter().collect::<Result<Vec<_>, _>>()?;
    out.sort_by_key(|m| (m.row.penetration, m.row.seed));
    Ok(out)
}
