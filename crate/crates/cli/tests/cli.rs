use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use krev_core::hash;

fn krev(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krev"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn krev")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn serials_file(dir: &Path, n: usize) {
    let body: String = (0..n).map(|i| format!("{i:08x},{}\n", 2_000_000_000 + i)).collect();
    fs::write(dir.join("serials.txt"), body).unwrap();
}

fn setup(n: usize) -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    serials_file(d.path(), n);
    let o = krev(d.path(), &["--seed", "1", "keygen", "--out", "key.hex"]);
    assert_eq!(code(&o), 0);
    d
}

#[test]
fn build_reports_size_and_depth() {
    let d = setup(135);
    let o = krev(d.path(), &["build", "--k", "5", "--input", "serials.txt", "--out", "t.krev"]);
    assert_eq!(code(&o), 0, "{o:?}");
    let out = stdout(&o);
    // ⌈log5 135⌉ = 4 because 5^3 = 125 < 135 <= 625.
    assert!(out.starts_with("s=135 D=4 root="), "{out}");
}

#[test]
fn empty_input_gives_empty_tree() {
    let d = setup(0);
    let o = krev(d.path(), &["build", "--k", "3", "--input", "serials.txt", "--out", "t.krev"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), format!("s=0 D=1 root={}", hash(b"").to_hex()));
}

#[test]
fn duplicate_serial_names_the_line() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("s.txt"), "# revoked\n0a,1\n0b,2\n0a,3\n").unwrap();
    let o = krev(d.path(), &["build", "--k", "2", "--input", "s.txt", "--out", "t.krev"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
}

#[test]
fn malformed_input_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("s.txt"), "zz,1\n").unwrap();
    let o = krev(d.path(), &["build", "--k", "2", "--input", "s.txt", "--out", "t.krev"]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&krev(d.path(), &["build", "--k", "2", "--input", "missing", "--out", "t"])), 2);
    assert_eq!(code(&krev(d.path(), &["no-such-command"])), 2);
}

#[test]
fn prove_verify_round_trip_and_corruption() {
    let d = setup(40);
    let p = d.path();
    assert_eq!(code(&krev(p, &["build", "--k", "3", "--input", "serials.txt", "--out", "t.krev"])), 0);
    let o = krev(p, &["prove", "--tree", "t.krev", "--serial", "00000011", "--ttp-key", "key.hex", "--out", "p.bin"]);
    assert_eq!(code(&o), 0);
    let len = fs::metadata(p.join("p.bin")).unwrap().len();
    assert_eq!(stdout(&o).trim(), format!("{len} bytes"));

    let o = krev(p, &["verify", "--proof", "p.bin", "--ttp-key", "key.hex", "--serial", "00000011"]);
    assert_eq!((code(&o), stdout(&o).lines().next().unwrap()), (0, "Accept"));

    let o = krev(p, &["verify", "--proof", "p.bin", "--ttp-key", "key.hex", "--serial", "00000012"]);
    assert_eq!(code(&o), 1);

    let mut bytes = fs::read(p.join("p.bin")).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x10;
    fs::write(p.join("bad.bin"), bytes).unwrap();
    let o = krev(p, &["verify", "--proof", "bad.bin", "--ttp-key", "key.hex"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("Reject("));

    assert_eq!(code(&krev(p, &["--seed", "2", "keygen", "--out", "other.hex"])), 0);
    let o = krev(p, &["verify", "--proof", "p.bin", "--ttp-key", "other.hex"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn prove_absent_serial_is_not_revoked() {
    let d = setup(10);
    let p = d.path();
    krev(p, &["build", "--k", "2", "--input", "serials.txt", "--out", "t.krev"]);
    let o = krev(p, &["prove", "--tree", "t.krev", "--serial", "abcdef", "--ttp-key", "key.hex", "--out", "p.bin"]);
    assert_eq!((code(&o), stdout(&o).trim()), (1, "NOT-REVOKED"));
}

#[test]
fn insert_and_delete_update_the_file() {
    let d = setup(5);
    let p = d.path();
    krev(p, &["build", "--k", "5", "--input", "serials.txt", "--out", "t.krev"]);
    let o = krev(p, &["insert", "--tree", "t.krev", "--serial", "ff", "--expiry", "9"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("s=6 D=2 "), "{}", stdout(&o));
    let o = krev(p, &["insert", "--tree", "t.krev", "--serial", "ff"]);
    assert_eq!(code(&o), 2, "duplicate insert");
    let o = krev(p, &["delete", "--tree", "t.krev", "--serial", "ff"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("s=5 "));
    let o = krev(p, &["prove", "--tree", "t.krev", "--serial", "ff", "--ttp-key", "key.hex", "--out", "x"]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&krev(p, &["delete", "--tree", "t.krev", "--serial", "ff"])), 2);
}

#[test]
fn choose_k_reports_and_rejects() {
    let d = tempfile::tempdir().unwrap();
    let o = krev(d.path(), &["choose-k", "--s", "135", "--memory-bits", "10000000"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "k=3 D=5 proof_bits=3584 tree_bits=81536");
    let o = krev(d.path(), &["choose-k", "--s", "135", "--memory-bits", "0"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
}

const SMALL: &str = "n_vehicles=150\nsim_duration_s=200\narea_km2=1\nn_rsus=4\nrsu_cell_layout=2x2\n";

#[test]
fn simulate_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    fs::write(p.join("s.cfg"), SMALL).unwrap();
    let args = |out: &'static str| ["--seed", "1", "simulate", "--config", "s.cfg", "--penetrations", "50,100", "--csv-out", out];
    assert_eq!(code(&krev(p, &args("a.csv"))), 0);
    assert_eq!(code(&krev(p, &args("b.csv"))), 0);
    let a = fs::read(p.join("a.csv")).unwrap();
    assert_eq!(a, fs::read(p.join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("seed,penetration,queries,"));

    let o = krev(p, &["--seed", "2", "simulate", "--config", "s.cfg"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("2,100,"));
}

#[test]
fn simulate_rejects_bad_config() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("bad.cfg"), "obu_penetration_percent=0\n").unwrap();
    let o = krev(d.path(), &["simulate", "--config", "bad.cfg"]);
    assert_eq!(code(&o), 2);
    fs::write(d.path().join("bad.cfg"), "colour=blue\n").unwrap();
    assert_eq!(code(&krev(d.path(), &["simulate", "--config", "bad.cfg"])), 2);
}

#[test]
fn bench_runs() {
    let d = tempfile::tempdir().unwrap();
    let o = krev(d.path(), &["--quiet", "bench", "--leaves", "500", "--k", "4", "--reps", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("leaves=500 k=4 "));
}

#[test]
fn simulate_matches_recorded_csv() {
    let d = tempfile::tempdir().unwrap();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures");
    let cfg = fixtures.join("determinism.cfg");
    let o = krev(d.path(), &["simulate", "--config", cfg.to_str().unwrap(), "--penetrations", "50,100"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), fs::read_to_string(fixtures.join("determinism.csv")).unwrap());
}
