//! Scenario configuration and its `key=value` file format.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::tree::MAX_K;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid scenario: {0}")]
pub struct ConfigInvalid(pub String);

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_vehicles: usize,
    pub obu_penetration_percent: u32,
    pub sim_duration_s: u64,
    pub area_km2: f64,
    pub revocation_rate_percent: f64,
    pub n_rsus: usize,
    /// Grid of RSU coverage cells, `(rows, cols)`.
    pub rsu_cell_layout: (usize, usize),
    pub speed_range_mps: (f64, f64),
    pub tx_range_m: f64,
    /// Mean authentications per vehicle encounter (Poisson); a counterpart
    /// is checked when at least one occurs.
    pub query_rate: f64,
    pub pseudonyms_per_obu: usize,
    pub trust_threshold: usize,
    /// Branching factor; 0 selects it with `choose_k`.
    pub k: usize,
    pub memory_bits: u128,
    pub cheating_rsus: usize,
    /// CRL validity period; 0 means one download per simulation.
    pub crl_epoch_s: u64,
    pub tx_power_w: f64,
    pub rx_power_w: f64,
    pub sense_power_w: f64,
    pub idle_power_w: f64,
    pub initial_energy_j: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_vehicles: 1349,
            obu_penetration_percent: 100,
            sim_duration_s: 1000,
            area_km2: 25.0,
            revocation_rate_percent: 10.0,
            n_rsus: 16,
            rsu_cell_layout: (4, 4),
            speed_range_mps: (0.0, 33.0),
            tx_range_m: 55.0,
            query_rate: 1.0,
            pseudonyms_per_obu: 5,
            trust_threshold: 3,
            k: 0,
            memory_bits: 10_000_000,
            cheating_rsus: 0,
            crl_epoch_s: 0,
            tx_power_w: 0.6,
            rx_power_w: 0.3,
            sense_power_w: 0.0,
            idle_power_w: 0.0,
            initial_energy_j: 1000.0,
            rng_seed: 1,
        }
    }
}

fn bad(msg: impl Into<String>) -> ConfigInvalid {
    ConfigInvalid(msg.into())
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigInvalid> {
    v.parse().map_err(|_| bad(format!("{key}: cannot parse {v:?}")))
}

fn pair<T: FromStr>(key: &str, v: &str, seps: &[char]) -> Result<(T, T), ConfigInvalid> {
    let (a, b) = v
        .split_once(seps)
        .ok_or_else(|| bad(format!("{key}: expected two values, got {v:?}")))?;
    Ok((num(key, a.trim())?, num(key, b.trim())?))
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigInvalid> {
        let (rows, cols) = self.rsu_cell_layout;
        let (lo, hi) = self.speed_range_mps;
        let checks: [(bool, &str); 14] = [
            ((1..=100).contains(&self.obu_penetration_percent), "obu_penetration_percent must be in 1..=100"),
            (self.sim_duration_s > 0, "sim_duration_s must be positive"),
            (self.area_km2 > 0.0 && self.area_km2.is_finite(), "area_km2 must be positive"),
            ((0.0..=100.0).contains(&self.revocation_rate_percent), "revocation_rate_percent must be in 0..=100"),
            (rows > 0 && cols > 0, "rsu_cell_layout needs positive dimensions"),
            (self.n_rsus <= rows * cols, "n_rsus exceeds the number of cells"),
            (0.0 <= lo && lo <= hi && hi.is_finite(), "speed_range_mps must satisfy 0 <= min <= max"),
            (self.tx_range_m > 0.0 && self.tx_range_m.is_finite(), "tx_range_m must be positive"),
            (self.query_rate >= 0.0 && self.query_rate.is_finite(), "query_rate must be non-negative"),
            (self.pseudonyms_per_obu > 0, "pseudonyms_per_obu must be positive"),
            (self.trust_threshold > 0, "trust_threshold must be positive"),
            (self.k == 0 || (2..=MAX_K).contains(&self.k), "k must be 0 or in 2..=224"),
            (self.cheating_rsus <= self.n_rsus, "cheating_rsus exceeds n_rsus"),
            (self.n_vehicles < (1 << 24), "n_vehicles too large"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(bad(*msg)),
            None => Ok(()),
        }
    }

    /// Parses `key=value` lines. Blank lines and `#` comments are skipped;
    /// unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigInvalid> {
        let mut c = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected key=value", lineno + 1)))?;
            let (key, v) = (key.trim(), v.trim());
            match key {
                "n_vehicles" => c.n_vehicles = num(key, v)?,
                "obu_penetration_percent" => c.obu_penetration_percent = num(key, v)?,
                "sim_duration_s" => c.sim_duration_s = num(key, v)?,
                "area_km2" => c.area_km2 = num(key, v)?,
                "revocation_rate_percent" => c.revocation_rate_percent = num(key, v)?,
                "n_rsus" => c.n_rsus = num(key, v)?,
                "rsu_cell_layout" => c.rsu_cell_layout = pair(key, v, &['x', 'X', ','])?,
                "speed_range_mps" => c.speed_range_mps = pair(key, v, &[','])?,
                "tx_range_m" => c.tx_range_m = num(key, v)?,
                "query_rate" => c.query_rate = num(key, v)?,
                "pseudonyms_per_obu" => c.pseudonyms_per_obu = num(key, v)?,
                "trust_threshold" => c.trust_threshold = num(key, v)?,
                "k" => c.k = num(key, v)?,
                "memory_bits" => c.memory_bits = num(key, v)?,
                "cheating_rsus" => c.cheating_rsus = num(key, v)?,
                "crl_epoch_s" => c.crl_epoch_s = num(key, v)?,
                "tx_power_w" => c.tx_power_w = num(key, v)?,
                "rx_power_w" => c.rx_power_w = num(key, v)?,
                "sense_power_w" => c.sense_power_w = num(key, v)?,
                "idle_power_w" => c.idle_power_w = num(key, v)?,
                "initial_energy_j" => c.initial_energy_j = num(key, v)?,
                "rng_seed" => c.rng_seed = num(key, v)?,
                _ => return Err(bad(format!("line {}: unknown key {key:?}", lineno + 1))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Every field, one per line, in a form [`ScenarioConfig::parse`] reads back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k}={v}").expect("write to String");
        kv("n_vehicles", self.n_vehicles.to_string());
        kv("obu_penetration_percent", self.obu_penetration_percent.to_string());
        kv("sim_duration_s", self.sim_duration_s.to_string());
        kv("area_km2", self.area_km2.to_string());
        kv("revocation_rate_percent", self.revocation_rate_percent.to_string());
        kv("n_rsus", self.n_rsus.to_string());
        kv("rsu_cell_layout", format!("{}x{}", self.rsu_cell_layout.0, self.rsu_cell_layout.1));
        kv("speed_range_mps", format!("{},{}", self.speed_range_mps.0, self.speed_range_mps.1));
        kv("tx_range_m", self.tx_range_m.to_string());
        kv("query_rate", self.query_rate.to_string());
        kv("pseudonyms_per_obu", self.pseudonyms_per_obu.to_string());
        kv("trust_threshold", self.trust_threshold.to_string());
        kv("k", self.k.to_string());
        kv("memory_bits", self.memory_bits.to_string());
        kv("cheating_rsus", self.cheating_rsus.to_string());
        kv("crl_epoch_s", self.crl_epoch_s.to_string());
        kv("tx_power_w", self.tx_power_w.to_string());
        kv("rx_power_w", self.rx_power_w.to_string());
        kv("sense_power_w", self.sense_power_w.to_string());
        kv("idle_power_w", self.idle_power_w.to_string());
        kv("initial_energy_j", self.initial_energy_j.to_string());
        kv("rng_seed", self.rng_seed.to_string());
        s
    }

    /// Number of vehicles whose pseudonym groups are revoked.
    pub fn revoked_vehicles(&self) -> usize {
        ceil_percent(self.n_vehicles, self.revocation_rate_percent)
    }

    pub fn obu_count(&self) -> usize {
        ceil_percent(self.n_vehicles, f64::from(self.obu_penetration_percent))
    }

    pub fn area_side_m(&self) -> f64 {
        (self.area_km2 * 1e6).sqrt()
    }
}

/// `⌈n · pct / 100⌉`, computed so that whole-number percentages are exact.
fn ceil_percent(n: usize, pct: f64) -> usize {
    let scaled = (pct * 1e6).round() as u128;
    let num = n as u128 * scaled;
    num.div_ceil(100 * 1_000_000) as usize
}
