//! Random-waypoint movement and radio-range encounter detection.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{rng, ScenarioConfig};

struct Vehicle {
    pos: (f64, f64),
    target: (f64, f64),
    speed: f64,
    rng: ChaCha8Rng,
}

/// Positions of a subset of vehicles. Each vehicle draws from its own
/// stream, keyed by its global index.
pub struct Mobility {
    vehicles: Vec<Vehicle>,
    side: f64,
    speed: (f64, f64),
    range: f64,
    grid_dim: usize,
    grid: Vec<Vec<u32>>,
    in_range: Vec<(u32, u32)>,
}

impl Mobility {
    pub fn new(cfg: &ScenarioConfig, seed: u64, vehicles: &[usize]) -> Self {
        let side = cfg.area_side_m();
        let speed = cfg.speed_range_mps;
        let grid_dim = ((side / cfg.tx_range_m).ceil() as usize).clamp(1, 4096);
        let vehicles = vehicles
            .iter()
            .map(|&v| {
                let mut rng = rng(seed, v as u64);
                let pos = point(&mut rng, side);
                let target = point(&mut rng, side);
                let speed = draw_speed(&mut rng, speed);
                Vehicle { pos, target, speed, rng }
            })
            .collect();
        Self {
            vehicles,
            side,
            speed,
            range: cfg.tx_range_m,
            grid_dim,
            grid: vec![Vec::new(); grid_dim * grid_dim],
            in_range: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.vehicles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }

    pub fn position(&self, i: usize) -> (f64, f64) {
        self.vehicles[i].pos
    }

    /// Advances every vehicle by `dt` seconds. A vehicle reaching its
    /// waypoint stops there and draws a new waypoint and speed.
    pub fn step(&mut self, dt: f64) {
        for v in &mut self.vehicles {
            let (dx, dy) = (v.target.0 - v.pos.0, v.target.1 - v.pos.1);
            let dist = (dx * dx + dy * dy).sqrt();
            let reach = v.speed * dt;
            if dist <= reach {
                v.pos = v.target;
                v.target = point(&mut v.rng, self.side);
                v.speed = draw_speed(&mut v.rng, self.speed);
            } else {
                v.pos.0 += dx / dist * reach;
                v.pos.1 += dy / dist * reach;
            }
        }
    }

    fn cell(&self, x: f64) -> usize {
        ((x / self.range) as usize).min(self.grid_dim - 1)
    }

    /// All pairs `(i, j)`, `i < j`, currently within radio range, sorted.
    pub fn pairs_in_range(&mut self) -> Vec<(u32, u32)> {
        for c in &mut self.grid {
            c.clear();
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            let idx = self.cell(v.pos.1) * self.grid_dim + self.cell(v.pos.0);
            self.grid[idx].push(i as u32);
        }
        let r2 = self.range * self.range;
        let mut pairs = Vec::new();
        for (i, v) in self.vehicles.iter().enumerate() {
            let (cx, cy) = (self.cell(v.pos.0), self.cell(v.pos.1));
            for gy in cy.saturating_sub(1)..=(cy + 1).min(self.grid_dim - 1) {
                for gx in cx.saturating_sub(1)..=(cx + 1).min(self.grid_dim - 1) {
                    for &j in &self.grid[gy * self.grid_dim + gx] {
                        if (j as usize) <= i {
                            continue;
                        }
                        let w = &self.vehicles[j as usize];
                        let (dx, dy) = (w.pos.0 - v.pos.0, w.pos.1 - v.pos.1);
                        if dx * dx + dy * dy <= r2 {
                            pairs.push((i as u32, j));
                        }
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs
    }

    /// Pairs in range now that were not in range at the previous call.
    pub fn new_encounters(&mut self) -> Vec<(usize, usize)> {
        let now = self.pairs_in_range();
        let fresh = now
            .iter()
            .filter(|p| self.in_range.binary_search(p).is_err())
            .map(|&(a, b)| (a as usize, b as usize))
            .collect();
        self.in_range = now;
        fresh
    }
}

fn point(rng: &mut ChaCha8Rng, side: f64) -> (f64, f64) {
    (rng.gen::<f64>() * side, rng.gen::<f64>() * side)
}

fn draw_speed(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_pairs_agree() {
        let cfg = ScenarioConfig { area_km2: 0.25, ..ScenarioConfig::default() };
        let ids: Vec<usize> = (0..300).collect();
        let mut m = Mobility::new(&cfg, 3, &ids);
        for _ in 0..5 {
            m.step(1.0);
            let mut brute = Vec::new();
            for i in 0..m.len() {
                for j in i + 1..m.len() {
                    let (a, b) = (m.position(i), m.position(j));
                    if (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2) <= 55.0 * 55.0 {
                        brute.push((i as u32, j as u32));
                    }
                }
            }
            assert_eq!(m.pairs_in_range(), brute);
        }
    }

    #[test]
    fn vehicle_paths_do_not_depend_on_the_subset() {
        let cfg = ScenarioConfig::default();
        let mut all = Mobility::new(&cfg, 9, &[1, 2, 3, 4]);
        let mut some = Mobility::new(&cfg, 9, &[2, 4]);
        for _ in 0..50 {
            all.step(1.0);
            some.step(1.0);
        }
        assert_eq!(all.position(1), some.position(0));
        assert_eq!(all.position(3), some.position(1));
    }

    #[test]
    fn stays_in_area_and_respects_speed() {
        let cfg = ScenarioConfig { area_km2: 0.01, ..ScenarioConfig::default() };
        let mut m = Mobility::new(&cfg, 1, &[0, 1, 2]);
        for _ in 0..500 {
            let before: Vec<_> = (0..3).map(|i| m.position(i)).collect();
            m.step(1.0);
            for (i, b) in before.iter().enumerate() {
                let p = m.position(i);
                assert!((0.0..=100.0).contains(&p.0) && (0.0..=100.0).contains(&p.1));
                assert!(((p.0 - b.0).powi(2) + (p.1 - b.1).powi(2)).sqrt() <= 33.0 + 1e-9);
            }
        }
    }
}
