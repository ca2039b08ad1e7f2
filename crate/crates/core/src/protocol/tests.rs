use std::collections::BTreeMap;

use super::*;
use crate::auth::{verify_ok, verify_proof, KeyedDigestScheme, SharedSecret};
use crate::tree::{SerialNumber, TreeParams};

type S = KeyedDigestScheme;

struct World {
    ttp: Ttp<S>,
    rsus: Vec<Rsu<S>>,
    obus: Vec<Obu<S>>,
}

fn secret(i: u8) -> SharedSecret {
    SharedSecret([i; 32])
}

fn pseudonyms(obu: NodeId, n: usize, expiry: u64) -> Vec<SerialNumber> {
    (0..n)
        .map(|i| SerialNumber::new(format!("obu{obu}-p{i}").into_bytes(), expiry).unwrap())
        .collect()
}

/// RSUs 1..=n_rsus (the first `cheaters` of them cheat), OBUs 100.. with
/// three pseudonyms each.
fn world(n_rsus: u32, cheaters: u32, n_obus: u32) -> World {
    let params = TreeParams::with_k(3).unwrap();
    let mut ttp = Ttp::new(KeyedDigestScheme, secret(0), 1, params, 0);
    let mut rsus = Vec::new();
    for id in 1..=n_rsus {
        let behaviour = if id <= cheaters { RsuBehaviour::OkForRevoked } else { RsuBehaviour::Honest };
        let mut rsu = Rsu::new(id, KeyedDigestScheme, secret(id as u8), secret(0), params, behaviour);
        let boot = ttp.register_rsu(id, rsu.verifying_key(), 0);
        rsu.handle(&boot).unwrap();
        rsus.push(rsu);
    }
    let keys: BTreeMap<NodeId, SharedSecret> = rsus.iter().map(|r| (r.id(), r.verifying_key())).collect();
    let mut obus = Vec::new();
    for id in 100..100 + n_obus {
        ttp.register_group(PseudonymGroup::new(id, pseudonyms(id, 3, 1_000))).unwrap();
        obus.push(Obu::new(id, KeyedDigestScheme, secret(0), keys.clone()));
    }
    World { ttp, rsus, obus }
}

impl World {
    fn deliver_to_rsus(&mut self, envs: Vec<Envelope>) {
        for env in envs {
            let rsu = self.rsus.iter_mut().find(|r| r.id() == env.receiver || env.receiver == BROADCAST);
            rsu.expect("addressed RSU").handle(&env).unwrap();
        }
    }

    fn revoke(&mut self, obu: NodeId, now: u64) {
        let envs = self.ttp.revoke_obu(obu, now).unwrap();
        self.deliver_to_rsus(envs);
    }

    /// OBU `o` asks RSU index `r` about `serial` and routes any impeachment
    /// through the TTP. Returns the OBU's actions.
    fn ask(&mut self, o: usize, r: usize, serial: &[u8], now: u64) -> Vec<ObuAction> {
        let q = self.obus[o].query(serial, self.rsus[r].id(), now);
        let answers = self.rsus[r].handle(&q).unwrap();
        let actions = self.obus[o].handle(&answers[0]);
        for a in &actions {
            if let ObuAction::Send(env) = a {
                let relay = self.rsus.iter_mut().find(|x| x.id() == env.receiver).unwrap();
                for fwd in relay.handle(env).unwrap() {
                    let Payload::Impeachment(imp) = &fwd.payload else { panic!() };
                    if let Ok(notices) = self.ttp.handle_impeachment(imp, now) {
                        for n in notices {
                            for obu in &mut self.obus {
                                obu.handle(&n);
                            }
                            for rsu in &mut self.rsus {
                                rsu.handle(&n).unwrap();
                            }
                        }
                    }
                }
            }
        }
        actions
    }
}

#[test]
fn revoke_group_inserts_all_pseudonyms() {
    let mut w = world(2, 0, 2);
    w.revoke(100, 1);
    assert_eq!(w.ttp.tree().len(), 3);
    assert!(w.ttp.revoke_obu(100, 2).unwrap().is_empty(), "second revoke is a no-op");
    assert_eq!(w.ttp.revoke_obu(7, 2), Err(ProtocolError::UnknownObu(7)));
    w.revoke(101, 3);
    for obu in [100, 101] {
        for p in pseudonyms(obu, 3, 1_000) {
            let Answer::Proof(proof) = w.rsus[0].answer_query(p.value(), 4) else { panic!() };
            assert_eq!(proof.signed_root, *w.ttp.signed_root());
            verify_proof(&proof, &KeyedDigestScheme, &secret(0)).unwrap();
        }
    }
    for rsu in &w.rsus {
        assert_eq!(rsu.tree().root_digest(), w.ttp.tree().root_digest());
    }
}

#[test]
fn duplicate_pseudonym_rejected() {
    let mut w = world(1, 0, 1);
    let clash = PseudonymGroup::new(5, pseudonyms(100, 1, 1_000));
    assert_eq!(w.ttp.register_group(clash), Err(ProtocolError::DuplicatePseudonym));
}

#[test]
fn unknown_serial_gets_verifiable_ok() {
    let w = world(1, 0, 1);
    let Answer::Ok(ok) = w.rsus[0].answer_query(b"stranger", 9) else { panic!() };
    assert_eq!(verify_ok(&ok, &KeyedDigestScheme, Some(&secret(1)), 9, 60), Ok(()));
}

#[test]
fn threshold_rule() {
    let mut w = world(3, 0, 1);
    let serial = b"clean".to_vec();
    assert_eq!(w.obus[0].precheck(&serial), Precheck::Unknown);
    assert!(!w.obus[0].accepts(&serial), "deny by default");
    assert_eq!(w.ask(0, 0, &serial, 1), vec![ObuAction::AskAgain { serial: serial.clone() }]);
    assert!(!w.obus[0].should_query(&serial, 1));
    assert!(w.obus[0].should_query(&serial, 2));
    // The same RSU twice still counts once.
    w.ask(0, 0, &serial, 2);
    assert_eq!(w.obus[0].pending()[&serial].count(0), 1);
    w.ask(0, 1, &serial, 3);
    let last = w.ask(0, 2, &serial, 4);
    assert_eq!(last, vec![ObuAction::CacheUpdate(CacheChange::Reliable(serial.clone()))]);
    assert_eq!(w.obus[0].precheck(&serial), Precheck::KnownReliable);
    w.obus[0].check_invariants().unwrap();
}

#[test]
fn reliable_goes_stale_on_version_change() {
    let mut w = world(3, 0, 2);
    let serial = b"clean".to_vec();
    for r in 0..3 {
        w.ask(0, r, &serial, 1);
    }
    assert_eq!(w.obus[0].precheck(&serial), Precheck::KnownReliable);
    w.revoke(101, 2);
    w.obus[0].observe_version(w.rsus[0].tree_version());
    assert_eq!(w.obus[0].precheck(&serial), Precheck::Unknown);
    assert!(w.obus[0].should_query(&serial, 1));
    w.obus[0].check_invariants().unwrap();
}

#[test]
fn proof_marks_unreliable_and_suppresses_queries() {
    let mut w = world(2, 0, 2);
    w.revoke(101, 1);
    let serial = pseudonyms(101, 1, 0)[0].value().to_vec();
    let actions = w.ask(0, 0, &serial, 2);
    assert_eq!(actions, vec![ObuAction::CacheUpdate(CacheChange::Unreliable(serial.clone()))]);
    assert_eq!(w.obus[0].precheck(&serial), Precheck::KnownRevoked);
    assert!(!w.obus[0].should_query(&serial, 2));
}

#[test]
fn forged_answers_are_dropped() {
    let mut w = world(2, 0, 2);
    w.revoke(101, 1);
    let serial = pseudonyms(101, 1, 0)[0].value().to_vec();
    let Answer::Proof(mut proof) = w.rsus[0].answer_query(&serial, 2) else { panic!() };
    proof.signed_root.signature[0] ^= 1;
    let out = w.obus[0].receive_answer(&Answer::Proof(proof), 1, 2);
    assert!(matches!(out[..], [ObuAction::Dropped(_)]));
    let Answer::Ok(ok) = w.rsus[1].answer_query(b"x", 2) else { panic!() };
    let out = w.obus[0].receive_answer(&Answer::Ok(ok), 1, 2);
    assert!(matches!(out[..], [ObuAction::Dropped(_)]), "OK signed by RSU 2 but sent as RSU 1");
    assert_eq!(w.obus[0].precheck(&serial), Precheck::Unknown);
    assert!(w.obus[0].pending().is_empty());
}

#[test]
fn adversarial_impeachment_end_to_end() {
    let mut w = world(4, 1, 2);
    w.revoke(101, 1);
    let serial = pseudonyms(101, 2, 0)[1].value().to_vec();
    // Cheater (RSU 1) says OK, honest RSU 2 supplies a proof.
    assert_eq!(w.ask(0, 0, &serial, 2), vec![ObuAction::AskAgain { serial: serial.clone() }]);
    let actions = w.ask(0, 1, &serial, 3);
    let sent: Vec<&Envelope> = actions
        .iter()
        .filter_map(|a| if let ObuAction::Send(e) = a { Some(e) } else { None })
        .collect();
    assert_eq!(sent.len(), 1);
    assert_eq!(sent[0].receiver, 2, "impeachment goes via the proving RSU");
    assert!(w.ttp.is_rsu_revoked(1));
    assert!(w.rsus[0].is_revoked());
    assert!(!w.obus[0].should_query(b"other", 1));
    assert_eq!(w.obus[0].precheck(&serial), Precheck::KnownRevoked);
    // Deltas no longer reach the revoked RSU.
    let envs = w.ttp.revoke_obu(100, 4).unwrap();
    assert_eq!(envs.iter().map(|e| e.receiver).collect::<Vec<_>>(), vec![2, 3, 4]);
}

#[test]
fn impeachment_rejections() {
    let mut w = world(3, 1, 2);
    let serial = pseudonyms(101, 1, 0)[0].value().to_vec();
    let Answer::Ok(early_ok) = w.rsus[1].answer_query(&serial, 1) else { panic!() };
    w.revoke(101, 2);
    let Answer::Ok(ok) = w.rsus[0].answer_query(&serial, 3) else { panic!() };
    let Answer::Proof(proof) = w.rsus[1].answer_query(&serial, 3) else { panic!() };
    let imp = |ok: &crate::auth::OkResponse, proof: &crate::auth::RevocationProof| Impeachment {
        accused_rsu_id: ok.rsu_id,
        reporter_obu_id: 100,
        ok: ok.clone(),
        proof: proof.clone(),
    };

    let mut bad_proof = proof.clone();
    bad_proof.levels[0][0].1 .0[0] ^= 1;
    assert!(matches!(
        w.ttp.handle_impeachment(&imp(&ok, &bad_proof), 4),
        Err(ImpeachmentReject::BadProof(_))
    ));
    // Honest RSU that said OK before the revocation is not guilty.
    assert_eq!(
        w.ttp.handle_impeachment(&imp(&early_ok, &proof), 4),
        Err(ImpeachmentReject::NotYetRevoked)
    );
    let mut newer = ok.clone();
    newer.tree_version = proof.signed_root.tree_version + 1;
    newer.signature = crate::auth::SignatureScheme::sign(&KeyedDigestScheme, &secret(1), &newer.signed_message());
    assert_eq!(w.ttp.handle_impeachment(&imp(&newer, &proof), 4), Err(ImpeachmentReject::VersionOrder));
    let mut forged = ok.clone();
    forged.signature[0] ^= 1;
    assert_eq!(w.ttp.handle_impeachment(&imp(&forged, &proof), 4), Err(ImpeachmentReject::BadOkSignature));
    assert!(!w.ttp.is_rsu_revoked(1));

    assert!(w.ttp.handle_impeachment(&imp(&ok, &proof), 4).is_ok());
    assert!(w.ttp.is_rsu_revoked(1));
    assert_eq!(w.ttp.handle_impeachment(&imp(&ok, &proof), 5), Err(ImpeachmentReject::AlreadyRevoked));
}

#[test]
fn honest_world_never_impeaches() {
    let mut w = world(3, 0, 3);
    w.revoke(102, 1);
    let revoked: Vec<Vec<u8>> = pseudonyms(102, 3, 0).iter().map(|p| p.value().to_vec()).collect();
    for t in 0..30u64 {
        let o = (t % 2) as usize;
        let r = (t % 3) as usize;
        let serial = if t % 4 == 0 { revoked[(t % 3) as usize].clone() } else { format!("c{}", t % 5).into_bytes() };
        if w.obus[o].should_query(&serial, w.rsus[r].id()) {
            let actions = w.ask(o, r, &serial, 10 + t);
            assert!(!actions.iter().any(|a| matches!(a, ObuAction::Send(_))));
        }
        w.obus[o].check_invariants().unwrap();
    }
}

#[test]
fn expiry_update_and_reconstruction_reload() {
    let params = TreeParams::with_k(2).unwrap();
    let mut ttp = Ttp::new(KeyedDigestScheme, secret(0), 1, params, 0);
    let mut rsu = Rsu::new(1, KeyedDigestScheme, secret(1), secret(0), params, RsuBehaviour::Honest);
    let boot = ttp.register_rsu(1, rsu.verifying_key(), 0);
    rsu.handle(&boot).unwrap();
    ttp.register_group(PseudonymGroup::new(100, pseudonyms(100, 3, 50))).unwrap();
    ttp.register_group(PseudonymGroup::new(101, pseudonyms(101, 3, 500))).unwrap();
    for (obu, t) in [(100, 1), (101, 2)] {
        for env in ttp.revoke_obu(obu, t).unwrap() {
            rsu.handle(&env).unwrap();
        }
    }
    assert!(ttp.periodic_update(10).is_empty(), "nothing expired");
    // Slots 0,1 (one full sibling pair) and 2 expire at t=60.
    let envs = ttp.periodic_update(60);
    assert!(matches!(envs[0].payload, Payload::Delta(Delta::Reload { .. })));
    for env in &envs {
        rsu.handle(env).unwrap();
    }
    assert_eq!(rsu.tree().root_digest(), ttp.tree().root_digest());
    assert_eq!(rsu.tree().len(), 3);
    let gone = pseudonyms(100, 1, 0)[0].value().to_vec();
    assert!(matches!(rsu.answer_query(&gone, 61), Answer::Ok(_)));
}

#[test]
fn tampered_delta_rejected() {
    let mut w = world(1, 0, 1);
    let mut envs = w.ttp.revoke_obu(100, 1).unwrap();
    let before = w.rsus[0].tree().root_digest();
    let Payload::Delta(Delta::Incremental { reports, .. }) = &mut envs[0].payload else { panic!() };
    reports[0].nodes[0].digest.0[0] ^= 1;
    assert!(w.rsus[0].handle(&envs[0]).is_err());
    assert_eq!(w.rsus[0].tree().root_digest(), before);
}

#[test]
fn envelope_and_replay_log_round_trip() {
    let mut w = world(2, 0, 2);
    let mut log = w.ttp.revoke_obu(101, 1).unwrap();
    w.deliver_to_rsus(log.clone());
    let serial = pseudonyms(101, 1, 0)[0].value().to_vec();
    let q = w.obus[0].query(&serial, 1, 2);
    let a = w.rsus[0].handle(&q).unwrap().remove(0);
    let ok = w.rsus[0].handle(&w.obus[0].query(b"nobody", 1, 3)).unwrap().remove(0);
    log.extend([q, a, ok, Envelope::new(0, BROADCAST, 4, Payload::RsuRevoked { rsu_id: 2 })]);
    log.push(Envelope::new(0, 1, 5, Payload::Delta(match w.ttp.register_rsu(9, secret(9), 5).payload {
        Payload::Delta(d) => d,
        _ => unreachable!(),
    })));
    let bytes = write_replay_log(&log);
    assert_eq!(read_replay_log(&bytes).unwrap(), log);
    let first = log[0].to_bytes();
    assert_eq!(first[0], 1);
    assert_eq!(&first[1..5], &0u32.to_be_bytes());
    assert_eq!(&first[5..9], &1u32.to_be_bytes());
    assert_eq!(&first[9..17], &1u64.to_be_bytes());
}
