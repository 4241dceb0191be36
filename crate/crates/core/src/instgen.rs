//! Seeded synthetic instances: clustered zones in a square window, distance
//! threshold reachability, random bases, density-based demands and the
//! smallest feasible fleet.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64`. Uniform draws
//! take the top 53 bits of `next_u64` as a fraction of `2^53`; Poisson draws
//! use Knuth's product-of-uniforms method. Everything else is a fixed,
//! documented sequence of those two draws, so ports can reproduce instances.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::bnb::price_configurations;
use crate::error::{Error, Result};
use crate::model::Instance;

pub const DEFAULT_BASE_FRACTION: f64 = 18.0 / 217.0;
pub const DEFAULT_DENSITY: f64 = 0.284;
pub const DENSITY_TOLERANCE: f64 = 0.02;
const BISECTION_STEPS: usize = 50;
const BASE_ATTEMPTS: usize = 200;
const LAYOUT_ATTEMPTS: usize = 20;

/// How demands are assigned to zones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DemandMode {
    /// By quartile of the neighbor count within the cluster radius.
    #[default]
    DensityQuartile,
    /// Experimental: one random demand per cluster.
    Cluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub zones: usize,
    pub window: f64,
    /// Parent points per unit area; `None` picks `zones / (mean_children * window^2)`.
    pub parent_intensity: Option<f64>,
    pub mean_children: f64,
    pub cluster_radius: f64,
    pub base_fraction: f64,
    pub density: f64,
    pub coverage_floor: f64,
    pub horizon: usize,
    pub demand_mode: DemandMode,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            zones: 50,
            window: 10.0,
            parent_intensity: None,
            mean_children: 8.0,
            cluster_radius: 1.0,
            base_fraction: DEFAULT_BASE_FRACTION,
            density: DEFAULT_DENSITY,
            coverage_floor: 0.95,
            horizon: 30,
            demand_mode: DemandMode::DensityQuartile,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::Generation(format!("{field} {msg}")));
        if self.zones < 2 {
            return bad("zones", "must be at least 2");
        }
        for (field, v) in [
            ("window", self.window),
            ("mean_children", self.mean_children),
            ("cluster_radius", self.cluster_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(field, "must be positive");
            }
        }
        if let Some(k) = self.parent_intensity {
            if !(k.is_finite() && k > 0.0) {
                return bad("parent_intensity", "must be positive");
            }
        }
        if !(self.base_fraction > 0.0 && self.base_fraction <= 1.0) {
            return bad("base_fraction", "must lie in (0, 1]");
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return bad("density", "must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.coverage_floor) {
            return bad("coverage_floor", "must lie in [0, 1]");
        }
        if self.horizon == 0 {
            return bad("horizon", "must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedInstance {
    pub instance: Instance,
    pub positions: Vec<(f64, f64)>,
    pub threshold: f64,
    pub realized_density: f64,
}

struct Source(ChaCha8Rng);

impl Source {
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    fn poisson(&mut self, mean: f64) -> usize {
        let limit = (-mean).exp();
        let mut k = 0;
        let mut p = self.uniform();
        while p > limit {
            k += 1;
            p *= self.uniform();
        }
        k
    }
}

/// Matérn cluster points in `[0, w]^2` with their cluster ids, topped up
/// with fresh realizations until there are `n`, then truncated.
fn cluster_points(cfg: &GeneratorConfig, rng: &mut Source) -> (Vec<(f64, f64)>, Vec<usize>) {
    let w = cfg.window;
    let radius = cfg.cluster_radius;
    let kappa = cfg
        .parent_intensity
        .unwrap_or(cfg.zones as f64 / (cfg.mean_children * w * w));
    // Parents live in the window grown by the radius to avoid edge thinning.
    let side = w + 2.0 * radius;
    let mut points = Vec::with_capacity(cfg.zones);
    let mut clusters = Vec::with_capacity(cfg.zones);
    let mut cluster = 0;
    while points.len() < cfg.zones {
        let parents = rng.poisson(kappa * side * side);
        for _ in 0..parents {
            let px = rng.uniform() * side - radius;
            let py = rng.uniform() * side - radius;
            let children = rng.poisson(cfg.mean_children);
            for _ in 0..children {
                let rho = radius * rng.uniform().sqrt();
                let theta = 2.0 * std::f64::consts::PI * rng.uniform();
                let (x, y) = (px + rho * theta.cos(), py + rho * theta.sin());
                if (0.0..=w).contains(&x) && (0.0..=w).contains(&y) {
                    points.push((x, y));
                    clusters.push(cluster);
                }
            }
            cluster += 1;
        }
    }
    points.truncate(cfg.zones);
    clusters.truncate(cfg.zones);
    (points, clusters)
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn reach_matrix(points: &[(f64, f64)], threshold: f64) -> Vec<Vec<u8>> {
    points
        .iter()
        .map(|&p| points.iter().map(|&q| u8::from(distance(p, q) <= threshold)).collect())
        .collect()
}

fn off_diagonal_density(points: &[(f64, f64)], threshold: f64) -> f64 {
    let n = points.len();
    let mut ones = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if distance(points[i], points[j]) <= threshold {
                ones += 2;
            }
        }
    }
    ones as f64 / (n * (n - 1)) as f64
}

fn calibrate(points: &[(f64, f64)], target: f64, window: f64) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (0.0, window * std::f64::consts::SQRT_2);
    let mut best = (hi, off_diagonal_density(points, hi));
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let d = off_diagonal_density(points, mid);
        if (d - target).abs() < (best.1 - target).abs() {
            best = (mid, d);
        }
        if (d - target).abs() <= DENSITY_TOLERANCE {
            return Ok((mid, d));
        }
        if d < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Generation(format!(
        "density calibration reached {:.4}, target {target:.4}",
        best.1
    )))
}

/// Demand 1 to 4 by how many of the three neighbor-count quartile cut
/// points a zone exceeds.
fn quartile_demands(points: &[(f64, f64)], radius: f64) -> Vec<u32> {
    let counts: Vec<usize> = points
        .iter()
        .map(|&p| points.iter().filter(|&&q| distance(p, q) <= radius).count() - 1)
        .collect();
    let mut sorted = counts.clone();
    sorted.sort_unstable();
    let n = sorted.len();
    let cuts = [sorted[n / 4], sorted[n / 2], sorted[3 * n / 4]];
    counts
        .iter()
        .map(|&c| 1 + cuts.iter().filter(|&&cut| c > cut).count() as u32)
        .collect()
}

fn cluster_demands(clusters: &[usize], rng: &mut Source) -> Vec<u32> {
    let mut by_cluster = std::collections::BTreeMap::new();
    clusters
        .iter()
        .map(|&c| *by_cluster.entry(c).or_insert_with(|| 1 + rng.below(4) as u32))
        .collect()
}

/// Uniform random subset of `size` zones, sorted.
fn random_bases(n: usize, size: usize, rng: &mut Source) -> Vec<usize> {
    let mut zones: Vec<usize> = (0..n).collect();
    for k in 0..size {
        let pick = k + rng.below(n - k);
        zones.swap(k, pick);
    }
    let mut bases = zones[..size].to_vec();
    bases.sort_unstable();
    bases
}

fn coverable(reach: &[Vec<u8>], bases: &[usize]) -> usize {
    reach.iter().filter(|row| bases.iter().any(|&b| row[b] == 1)).count()
}

pub fn generate(cfg: &GeneratorConfig) -> Result<GeneratedInstance> {
    cfg.validate()?;
    let mut rng = Source(ChaCha8Rng::seed_from_u64(cfg.seed));
    let n = cfg.zones;
    let size = ((cfg.base_fraction * n as f64).round() as usize).clamp(1, n);

    // Bases are redrawn until every zone is reachable from one of them; an
    // unreachable zone would pin the range at `T` for every plan. A layout
    // where that keeps failing is redrawn too.
    let mut layout = None;
    'layouts: for _ in 0..LAYOUT_ATTEMPTS {
        let (positions, clusters) = cluster_points(cfg, &mut rng);
        let (threshold, density) = calibrate(&positions, cfg.density, cfg.window)?;
        let reach = reach_matrix(&positions, threshold);
        for _ in 0..BASE_ATTEMPTS {
            let bases = random_bases(n, size, &mut rng);
            if coverable(&reach, &bases) == n {
                layout = Some((positions, clusters, threshold, density, reach, bases));
                break 'layouts;
            }
        }
    }
    let Some((positions, clusters, threshold, realized_density, reach, bases)) = layout else {
        return Err(Error::Generation(format!(
            "no base set of size {size} reaches all {n} zones in {LAYOUT_ATTEMPTS} layouts"
        )));
    };

    let demand = match cfg.demand_mode {
        DemandMode::DensityQuartile => quartile_demands(&positions, cfg.cluster_radius),
        DemandMode::Cluster => cluster_demands(&clusters, &mut rng),
    };
    let mut instance = Instance {
        n,
        bases,
        reach,
        demand,
        fleet: 0,
        coverage_floor: cfg.coverage_floor,
        transition_limit: 0,
        horizon: cfg.horizon,
    };
    // Stacking the largest demand at every base covers every reachable zone.
    let top = *instance.demand.iter().max().unwrap_or(&1);
    for m in top..=top * size as u32 {
        instance.fleet = m;
        instance.transition_limit = m;
        match price_configurations(&instance, &vec![-1.0; n]) {
            Ok(_) => {
                instance.validate()?;
                return Ok(GeneratedInstance {
                    instance,
                    positions,
                    threshold,
                    realized_density,
                });
            }
            Err(Error::PricingInfeasible) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Generation("no fleet size admits a feasible configuration".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_and_poisson_are_reproducible() {
        let mut a = Source(ChaCha8Rng::seed_from_u64(3));
        let mut b = Source(ChaCha8Rng::seed_from_u64(3));
        for _ in 0..100 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
        let mean: f64 = (0..4000).map(|_| a.poisson(3.0) as f64).sum::<f64>() / 4000.0;
        assert!((mean - 3.0).abs() < 0.15, "{mean}");
    }

    #[test]
    fn quartiles_are_monotone_in_density() {
        let points: Vec<(f64, f64)> = (0..20).map(|i| ((i * i) as f64 * 0.05, 0.0)).collect();
        let demand = quartile_demands(&points, 1.0);
        let counts: Vec<usize> = points
            .iter()
            .map(|&p| points.iter().filter(|&&q| distance(p, q) <= 1.0).count())
            .collect();
        for i in 0..20 {
            for j in 0..20 {
                if counts[i] > counts[j] {
                    assert!(demand[i] >= demand[j]);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_density() {
        let cfg = GeneratorConfig {
            density: 1.5,
            ..GeneratorConfig::default()
        };
        assert!(matches!(generate(&cfg), Err(Error::Generation(msg)) if msg.contains("density")));
    }
}
