//! Ambulance allocation instances, configurations and multi-period plans.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Q;

/// A location/relocation instance.
///
/// `reach[i][j] == 1` means an ambulance stationed at zone `j` reaches zone `i`
/// within the response threshold, so the number of ambulances reaching zone `i`
/// is `sum_j reach[i][j] * x_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub n: usize,
    pub bases: Vec<usize>,
    pub reach: Vec<Vec<u8>>,
    pub demand: Vec<u32>,
    pub fleet: u32,
    pub coverage_floor: f64,
    pub transition_limit: u32,
    pub horizon: usize,
}

impl Instance {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if self.n == 0 {
            return bad("instance has no zones".into());
        }
        if self.bases.is_empty() {
            return bad("instance has no bases".into());
        }
        if self.reach.len() != self.n || self.reach.iter().any(|row| row.len() != self.n) {
            return bad(format!("reach must be a {0}x{0} matrix", self.n));
        }
        if self.reach.iter().flatten().any(|&a| a > 1) {
            return bad("reach entries must be 0 or 1".into());
        }
        if self.demand.len() != self.n {
            return bad(format!("expected {} demands, got {}", self.n, self.demand.len()));
        }
        let mut prev = None;
        for &b in &self.bases {
            if b >= self.n {
                return bad(format!("base {b} is not a zone"));
            }
            if prev.is_some_and(|p| p >= b) {
                return bad("bases must be strictly increasing".into());
            }
            prev = Some(b);
            if self.reach[b][b] != 1 {
                return bad(format!("base {b} must reach itself"));
            }
        }
        if self.fleet == 0 {
            return bad("fleet must hold at least one ambulance".into());
        }
        for (i, &z) in self.demand.iter().enumerate() {
            if z == 0 || z > self.fleet {
                return bad(format!("demand of zone {i} must lie in 1..={}", self.fleet));
            }
        }
        if !(0.0..=1.0).contains(&self.coverage_floor) {
            return bad("coverage_floor must lie in [0, 1]".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        Ok(())
    }

    /// Minimum number of covered zones, `ceil(f * n)`.
    pub fn min_covered(&self) -> usize {
        min_covered(self.coverage_floor, self.n)
    }

    pub fn is_base(&self, zone: usize) -> bool {
        self.bases.binary_search(&zone).is_ok()
    }

    /// Same instance with a different coverage floor.
    pub fn with_coverage_floor(&self, f: f64) -> Instance {
        Instance {
            coverage_floor: f,
            ..self.clone()
        }
    }

    /// Realized reachability density, off-diagonal ones over `n(n-1)`.
    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let mut edges = 0usize;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.reach[i][j] == 1 {
                    edges += 1;
                }
            }
        }
        edges as f64 / (self.n * (self.n - 1)) as f64
    }

    /// Expands a vector indexed by base position into a full placement.
    pub fn placement_from_bases(&self, per_base: &[u32]) -> Vec<u32> {
        let mut x = vec![0; self.n];
        for (&b, &k) in self.bases.iter().zip(per_base) {
            x[b] = k;
        }
        x
    }
}

pub(crate) fn min_covered(f: f64, n: usize) -> usize {
    // Guard against f*n landing a hair above an integer, e.g. 0.95 * 20.
    let raw = f * n as f64;
    let rounded = raw.round();
    if (raw - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

/// One placement of ambulances together with the zones it covers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub placement: Vec<u32>,
    pub coverage: Vec<u8>,
}

impl Configuration {
    pub fn new(inst: &Instance, placement: Vec<u32>) -> Result<Self> {
        let coverage = coverage_vector(inst, &placement)?;
        Ok(Configuration {
            placement,
            coverage,
        })
    }

    pub fn covered(&self) -> usize {
        self.coverage.iter().map(|&c| c as usize).sum()
    }

    pub fn ambulances(&self) -> u32 {
        self.placement.iter().sum()
    }
}

/// Zone coverage of a placement: zone `i` is covered when at least `demand[i]`
/// ambulances can reach it.
pub fn coverage_vector(inst: &Instance, x: &[u32]) -> Result<Vec<u8>> {
    if x.len() != inst.n {
        return Err(Error::Domain(format!(
            "placement has {} entries, instance has {} zones",
            x.len(),
            inst.n
        )));
    }
    if let Some(zone) = (0..inst.n).find(|&i| x[i] > 0 && !inst.is_base(i)) {
        return Err(Error::InvalidPlacement { zone });
    }
    let total: u64 = x.iter().map(|&k| k as u64).sum();
    if total > inst.fleet as u64 {
        return Err(Error::Domain(format!(
            "placement uses {total} ambulances, fleet has {}",
            inst.fleet
        )));
    }
    Ok(coverage_unchecked(inst, x))
}

pub(crate) fn coverage_unchecked(inst: &Instance, x: &[u32]) -> Vec<u8> {
    (0..inst.n)
        .map(|i| {
            let reaching: u64 = inst
                .bases
                .iter()
                .map(|&j| inst.reach[i][j] as u64 * x[j] as u64)
                .sum();
            u8::from(reaching >= inst.demand[i] as u64)
        })
        .collect()
}

/// `max_i y_i - min_i y_i`.
pub fn unfairness_range<T: Copy + PartialOrd + std::ops::Sub<Output = T>>(y: &[T]) -> Result<T> {
    let first = *y
        .first()
        .ok_or_else(|| Error::Domain("unfairness of an empty benefit vector".into()))?;
    let (mut lo, mut hi) = (first, first);
    for &v in &y[1..] {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    Ok(hi - lo)
}

/// L1 distance between two allocation vectors.
pub fn l1_distance<T>(x: &[T], other: &[T]) -> Result<u64>
where
    T: Copy + Into<i64>,
{
    if x.len() != other.len() {
        return Err(Error::Domain(format!(
            "allocation dimensions differ: {} vs {}",
            x.len(),
            other.len()
        )));
    }
    Ok(x.iter()
        .zip(other)
        .map(|(&a, &b)| (a.into() - b.into()).unsigned_abs())
        .sum())
}

/// At most `r` ambulances move between the two placements.
pub fn transition_ok<T>(x: &[T], other: &[T], r: u32) -> Result<bool>
where
    T: Copy + Into<i64>,
{
    Ok(l1_distance(x, other)? <= 2 * r as u64)
}

/// An ordered sequence of configurations and the resulting average benefits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<Configuration>,
    pub benefits: Vec<Q>,
}

impl Plan {
    pub fn from_steps(steps: Vec<Configuration>) -> Result<Plan> {
        let benefits = average_coverage(&steps)?;
        Ok(Plan { steps, benefits })
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// Per-zone coverage counts `c_i = sum_t tau_i(t)`.
    pub fn counts(&self) -> Vec<u64> {
        let n = self.steps.first().map_or(0, |c| c.coverage.len());
        let mut c = vec![0u64; n];
        for step in &self.steps {
            for (ci, &t) in c.iter_mut().zip(&step.coverage) {
                *ci += t as u64;
            }
        }
        c
    }

    /// Objective in coverage counts, `max_i c_i - min_i c_i`.
    pub fn count_range(&self) -> u64 {
        let c = self.counts();
        unfairness_range(&c).unwrap_or(0)
    }

    /// Average coverage over zones and periods, in percent.
    pub fn average_coverage_percent(&self) -> f64 {
        let c = self.counts();
        if c.is_empty() || self.steps.is_empty() {
            return 0.0;
        }
        let total: u64 = c.iter().sum();
        100.0 * total as f64 / (c.len() * self.steps.len()) as f64
    }
}

fn average_coverage(steps: &[Configuration]) -> Result<Vec<Q>> {
    let first = steps
        .first()
        .ok_or_else(|| Error::Domain("a plan needs at least one period".into()))?;
    let n = first.coverage.len();
    let mut totals = vec![0i128; n];
    for step in steps {
        if step.coverage.len() != n {
            return Err(Error::Domain("coverage vectors differ in length".into()));
        }
        for (t, &c) in totals.iter_mut().zip(&step.coverage) {
            *t += c as i128;
        }
    }
    let horizon = steps.len() as i128;
    Ok(totals.into_iter().map(|t| Q::new(t, horizon)).collect())
}

/// Independent plan check: placement support, fleet, coverage recomputation,
/// coverage floor, benefit recomputation and, when `r` is given, transitions.
pub fn validate_plan(inst: &Instance, plan: &Plan, horizon: usize, r: Option<u32>) -> Result<()> {
    let fail = |msg: String| Err(Error::Infeasible(msg));
    if plan.steps.len() != horizon {
        return fail(format!(
            "plan has {} periods, expected {horizon}",
            plan.steps.len()
        ));
    }
    let floor = inst.min_covered();
    for (t, step) in plan.steps.iter().enumerate() {
        let coverage = coverage_vector(inst, &step.placement)?;
        if coverage != step.coverage {
            return fail(format!("period {t}: stored coverage does not match placement"));
        }
        let covered = step.covered();
        if covered < floor {
            return fail(format!("period {t}: covers {covered} zones, floor is {floor}"));
        }
    }
    if let Some(r) = r {
        for (t, pair) in plan.steps.windows(2).enumerate() {
            if !transition_ok(&pair[0].placement, &pair[1].placement, r)? {
                return fail(format!("periods {t} and {}: more than {r} moves", t + 1));
            }
        }
    }
    if average_coverage(&plan.steps)? != plan.benefits {
        return fail("stored benefits do not match the steps".into());
    }
    Ok(())
}
