//! `krev`: build revocation trees, issue and check proofs, run simulations.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use krev_core::auth::{
    build_proof, sign_root, verify_proof_bytes, BuildProofError, KeyedDigestScheme, SharedSecret,
    SignatureScheme,
};
use krev_core::keccak::{DIGEST_BITS, DIGEST_BYTES};
use krev_core::sim::{crossover_queries, emit_report, run_sweep, ScenarioConfig};
use krev_core::tree::{
    build_levels_for_bench, choose_k, RevocationTree, SerialNumber, TreeParams,
};
use krev_core::{hash, Digest};
use rand::SeedableRng;

#[derive(Parser)]
#[command(name = "krev", version, about = "Keccak k-ary revocation trees")]
struct Cli {
    /// Print only essential output.
    #[arg(long, global = true)]
    quiet: bool,
    /// Seed for anything random (keys, simulation).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a tree from a `serial_hex,expiry` file.
    Build {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Revoke one more serial in an existing tree file.
    Insert {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        serial: String,
        #[arg(long, default_value_t = u64::MAX)]
        expiry: u64,
    },
    /// Remove a serial from a tree file.
    Delete {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        serial: String,
    },
    /// Write a signed revocation proof for a serial.
    Prove {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        serial: String,
        #[arg(long)]
        ttp_key: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        issued_at: u64,
        #[arg(long, default_value_t = 0)]
        signer_id: u16,
    },
    /// Check a proof file against the TTP key.
    Verify {
        #[arg(long)]
        proof: PathBuf,
        #[arg(long)]
        ttp_key: PathBuf,
        /// Also require the proof to be about this serial.
        #[arg(long)]
        serial: Option<String>,
    },
    /// Pick the branching factor for `s` revocations within a memory bound.
    ChooseK {
        #[arg(long)]
        s: u64,
        #[arg(long)]
        memory_bits: u128,
    },
    /// Run the vehicular scenario and write the CSV report.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        csv_out: Option<PathBuf>,
        /// Comma-separated penetration percentages; defaults to the config's.
        #[arg(long, value_delimiter = ',')]
        penetrations: Vec<u32>,
        /// Comma-separated seeds; defaults to --seed or the config's.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Time parallel against sequential tree construction.
    Bench {
        #[arg(long, default_value_t = 100_000)]
        leaves: usize,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        reps: u32,
    },
    /// Write a fresh hex TTP secret.
    Keygen {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Result of a command that ran to completion: success, or a negative
/// answer (reject, not revoked) that maps to exit code 1.
enum Outcome {
    Ok,
    Negative,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Negative) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let say = |s: String| {
        if !cli.quiet {
            println!("{s}");
        }
    };
    match &cli.cmd {
        Cmd::Build { k, input, out } => {
            let text = read_text(input)?;
            let serials = parse_serials(&text)?;
            let tree = RevocationTree::from_serials(TreeParams::with_k(*k)?, serials)?;
            write(out, &tree.to_bytes()?)?;
            println!("s={} D={} root={}", tree.len(), tree.depth(), tree.root_digest().to_hex());
        }
        Cmd::Insert { tree: path, serial, expiry } => {
            let mut tree = load_tree(path)?;
            tree.insert(SerialNumber::new(decode_serial(serial)?, *expiry)?)?;
            write(path, &tree.to_bytes()?)?;
            println!("s={} D={} version={} root={}", tree.len(), tree.depth(), tree.version(), tree.root_digest().to_hex());
        }
        Cmd::Delete { tree: path, serial } => {
            let mut tree = load_tree(path)?;
            tree.delete(&decode_serial(serial)?)?;
            write(path, &tree.to_bytes()?)?;
            println!("s={} D={} version={} root={}", tree.len(), tree.depth(), tree.version(), tree.root_digest().to_hex());
        }
        Cmd::Prove { tree, serial, ttp_key, out, issued_at, signer_id } => {
            let tree = load_tree(tree)?;
            let key = load_key(ttp_key)?;
            let root = sign_root(&tree, &KeyedDigestScheme, &key, *signer_id, *issued_at);
            match build_proof(&tree, &decode_serial(serial)?, &root) {
                Ok(proof) => {
                    let bytes = proof.to_bytes();
                    write(out, &bytes)?;
                    println!("{} bytes", bytes.len());
                }
                Err(BuildProofError::NotFound) => {
                    println!("NOT-REVOKED");
                    return Ok(Outcome::Negative);
                }
                Err(e) => bail!(e),
            }
        }
        Cmd::Verify { proof, ttp_key, serial } => {
            let bytes = fs::read(proof).with_context(|| format!("reading {}", proof.display()))?;
            let key = load_key(ttp_key)?;
            let want = serial.as_deref().map(decode_serial).transpose()?;
            match verify_proof_bytes(&bytes, &KeyedDigestScheme, &key) {
                Ok(p) if want.as_ref().is_some_and(|w| *w != p.serial) => {
                    println!("Reject(proof is for serial {})", hex::encode(&p.serial));
                    return Ok(Outcome::Negative);
                }
                Ok(p) => {
                    println!("Accept");
                    say(format!("serial={} version={}", hex::encode(&p.serial), p.signed_root.tree_version));
                }
                Err(e) => {
                    println!("Reject({e})");
                    return Ok(Outcome::Negative);
                }
            }
        }
        Cmd::ChooseK { s, memory_bits } => {
            let c = choose_k(*s, *memory_bits)?;
            println!("k={} D={} proof_bits={} tree_bits={}", c.k, c.depth, c.proof_bits, c.tree_bits);
        }
        Cmd::Simulate { config, csv_out, penetrations, seeds } => {
            let mut cfg = match config {
                Some(p) => ScenarioConfig::parse(&read_text(p)?)?,
                None => ScenarioConfig::default(),
            };
            if let Some(seed) = cli.seed {
                cfg.rng_seed = seed;
            }
            let pens = if penetrations.is_empty() { vec![cfg.obu_penetration_percent] } else { penetrations.clone() };
            let seeds = if seeds.is_empty() { vec![cfg.rng_seed] } else { seeds.clone() };
            let started = Instant::now();
            let metrics = run_sweep(&cfg, &pens, &seeds)?;
            let csv = emit_report(&metrics);
            match csv_out {
                Some(p) => write(p, csv.as_bytes())?,
                None => print!("{csv}"),
            }
            if let Some(m) = metrics.first() {
                let sig_bits = 8 * KeyedDigestScheme.sign(&SharedSecret([0; 32]), b"").len() as u64;
                let q = crossover_queries(m.k, m.s, DIGEST_BITS as u64, sig_bits)
                    .map_or("none".to_string(), |q| q.to_string());
                eprintln!(
                    "s={} k={} D={} crossover_queries={q} runs={} wall_ms={}",
                    m.s,
                    m.k,
                    m.depth,
                    metrics.len(),
                    started.elapsed().as_millis()
                );
            }
        }
        Cmd::Bench { leaves, k, reps } => {
            let params = TreeParams::with_k(*k)?;
            let digests: Vec<Digest> = (0..*leaves as u64).map(|i| hash(&i.to_be_bytes())).collect();
            let time = |parallel: bool| {
                let t = Instant::now();
                let mut root = Digest([0; DIGEST_BYTES]);
                for _ in 0..*reps {
                    root = build_levels_for_bench(&digests, &params, parallel);
                }
                (t.elapsed().as_secs_f64() * 1e3 / f64::from((*reps).max(1)), root)
            };
            let (seq_ms, a) = time(false);
            let (par_ms, b) = time(true);
            if a != b {
                bail!("parallel and sequential roots differ");
            }
            println!("leaves={leaves} k={k} sequential_ms={seq_ms:.1} parallel_ms={par_ms:.1}");
            say(format!("parallel backend: {}", krev_core::par::PARALLEL));
        }
        Cmd::Keygen { out } => {
            let (secret, _) = match cli.seed {
                Some(s) => KeyedDigestScheme.generate_keypair(&mut rand::rngs::StdRng::seed_from_u64(s)),
                None => KeyedDigestScheme.generate_keypair(&mut rand::thread_rng()),
            };
            write(out, format!("{}\n", secret.to_hex()).as_bytes())?;
            say(format!("wrote {}", out.display()));
        }
    }
    Ok(Outcome::Ok)
}

fn read_text(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn write(p: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))
}

fn load_tree(p: &Path) -> Result<RevocationTree> {
    let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
    RevocationTree::from_bytes(&bytes).with_context(|| format!("loading tree {}", p.display()))
}

fn load_key(p: &Path) -> Result<SharedSecret> {
    SharedSecret::from_hex(&read_text(p)?).ok_or_else(|| anyhow!("{}: expected 64 hex digits", p.display()))
}

fn decode_serial(s: &str) -> Result<Vec<u8>> {
    let v = hex::decode(s.trim()).with_context(|| format!("serial {s:?} is not hex"))?;
    if v.is_empty() {
        bail!("empty serial");
    }
    Ok(v)
}

/// Lines of `serial_hex,expiry`; blank lines and `#` comments are skipped.
fn parse_serials(text: &str) -> Result<Vec<SerialNumber>> {
    let mut seen = std::collections::HashMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let (serial, expiry) = line
            .split_once(',')
            .ok_or_else(|| anyhow!("line {lineno}: expected serial_hex,expiry"))?;
        let value = decode_serial(serial).with_context(|| format!("line {lineno}"))?;
        let expiry: u64 = expiry.trim().parse().with_context(|| format!("line {lineno}: bad expiry"))?;
        if let Some(first) = seen.insert(value.clone(), lineno) {
            bail!("line {lineno}: duplicate serial {} (first on line {first})", serial.trim());
        }
        out.push(SerialNumber::new(value, expiry).with_context(|| format!("line {lineno}"))?);
    }
    Ok(out)
}
