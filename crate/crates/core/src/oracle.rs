//! Exhaustive ground truth: configuration enumeration, the greedy baseline and
//! brute-force search over finite-column multi-period problems.

use num_traits::Zero;

use crate::allocation::Column;
use crate::error::{Error, Result};
use crate::model::{coverage_unchecked, l1_distance, unfairness_range, Configuration, Instance, Plan};
use crate::Q;

pub const DEFAULT_ORACLE_BUDGET: u64 = 10_000_000;

/// A sequence of column indices with its average benefits and range.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnPlan {
    pub sequence: Vec<usize>,
    pub benefits: Vec<Q>,
    pub objective: Q,
}

impl ColumnPlan {
    fn from_sequence(columns: &[Column], sequence: Vec<usize>) -> Result<ColumnPlan> {
        let benefits = average_benefit(columns, &sequence)?;
        let objective = unfairness_range(&benefits)?;
        Ok(ColumnPlan {
            sequence,
            benefits,
            objective,
        })
    }
}

pub fn average_benefit(columns: &[Column], sequence: &[usize]) -> Result<Vec<Q>> {
    if sequence.is_empty() {
        return Err(Error::Domain("empty sequence".into()));
    }
    let n = columns[sequence[0]].benefit.len();
    let mut acc = vec![Q::zero(); n];
    for &j in sequence {
        for (a, b) in acc.iter_mut().zip(&columns[j].benefit) {
            *a += b;
        }
    }
    let t = Q::from_integer(sequence.len() as i128);
    Ok(acc.into_iter().map(|a| a / t).collect())
}

/// Picks, period by period, the column minimizing the range of the
/// accumulated benefit; ties go to the lowest column index.
pub fn greedy_plan(columns: &[Column], horizon: usize) -> Result<ColumnPlan> {
    if columns.is_empty() {
        return Err(Error::Infeasible("empty allocation set".into()));
    }
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let n = columns[0].benefit.len();
    let mut acc = vec![Q::zero(); n];
    let mut sequence = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut best: Option<(Q, usize)> = None;
        for (j, col) in columns.iter().enumerate() {
            let trial: Vec<Q> = acc.iter().zip(&col.benefit).map(|(a, b)| a + b).collect();
            let range = unfairness_range(&trial)?;
            if best.as_ref().is_none_or(|(r, _)| range < *r) {
                best = Some((range, j));
            }
        }
        let (_, j) = best.expect("columns are nonempty");
        for (a, b) in acc.iter_mut().zip(&columns[j].benefit) {
            *a += b;
        }
        sequence.push(j);
    }
    ColumnPlan::from_sequence(columns, sequence)
}

/// Exact optimum of the multi-period range problem over a finite column set.
///
/// With `transitions = Some(r)` every ordered sequence is enumerated and
/// consecutive allocations must be within L1 distance `2r`; otherwise only
/// non-decreasing index sequences (multisets) are visited. The first optimal
/// sequence in lexicographic order is returned.
pub fn brute_force_tpfa(
    columns: &[Column],
    horizon: usize,
    transitions: Option<u32>,
    budget: u64,
) -> Result<ColumnPlan> {
    let mut best: Option<(Q, Vec<usize>)> = None;
    for_each_sequence(columns, horizon, transitions, budget, |seq, totals| {
        let range = unfairness_range(totals).expect("nonempty benefit vector");
        if best.as_ref().is_none_or(|(r, _)| range < *r) {
            best = Some((range, seq.to_vec()));
        }
    })?;
    match best {
        Some((_, seq)) => ColumnPlan::from_sequence(columns, seq),
        None => Err(Error::Infeasible(
            "no transition-feasible sequence exists".into(),
        )),
    }
}

/// Visits every complete sequence (ordered with transitions, multisets
/// without) together with its unnormalized benefit totals. Fails with
/// [`Error::OracleTooLarge`] once more than `budget` search nodes are touched.
pub fn for_each_sequence<F>(
    columns: &[Column],
    horizon: usize,
    transitions: Option<u32>,
    budget: u64,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&[usize], &[Q]),
{
    if columns.is_empty() {
        return Err(Error::Infeasible("empty allocation set".into()));
    }
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let k = columns.len();
    let n = columns[0].benefit.len();
    let adjacent: Option<Vec<Vec<bool>>> = match transitions {
        Some(r) => {
            let mut adj = vec![vec![false; k]; k];
            for a in 0..k {
                for b in 0..k {
                    adj[a][b] = l1_distance(&columns[a].allocation, &columns[b].allocation)?
                        <= 2 * r as u64;
                }
            }
            Some(adj)
        }
        None => None,
    };

    struct Search<'a, F> {
        columns: &'a [Column],
        adjacent: Option<Vec<Vec<bool>>>,
        horizon: usize,
        budget: u64,
        nodes: u64,
        seq: Vec<usize>,
        totals: Vec<Vec<Q>>,
        visit: F,
    }

    impl<F: FnMut(&[usize], &[Q])> Search<'_, F> {
        fn go(&mut self) -> Result<()> {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::OracleTooLarge {
                    budget: self.budget,
                });
            }
            let depth = self.seq.len();
            if depth == self.horizon {
                (self.visit)(&self.seq, &self.totals[depth]);
                return Ok(());
            }
            let start = match (&self.adjacent, self.seq.last()) {
                (None, Some(&last)) => last,
                _ => 0,
            };
            for j in start..self.columns.len() {
                if let (Some(adj), Some(&last)) = (&self.adjacent, self.seq.last()) {
                    if !adj[last][j] {
                        continue;
                    }
                }
                let next: Vec<Q> = self.totals[depth]
                    .iter()
                    .zip(&self.columns[j].benefit)
                    .map(|(a, b)| a + b)
                    .collect();
                self.totals[depth + 1] = next;
                self.seq.push(j);
                self.go()?;
                self.seq.pop();
            }
            Ok(())
        }
    }

    let mut search = Search {
        columns,
        adjacent,
        horizon,
        budget,
        nodes: 0,
        seq: Vec::with_capacity(horizon),
        totals: vec![vec![Q::zero(); n]; horizon + 1],
        visit: &mut visit,
    };
    search.go()
}

/// Every placement of at most `fleet` ambulances on the bases, in
/// lexicographic order of the per-base counts, keeping those that meet the
/// coverage floor when `enforce_floor` is set.
pub fn enumerate_configurations(inst: &Instance, enforce_floor: bool) -> Vec<Configuration> {
    let floor = if enforce_floor { inst.min_covered() } else { 0 };
    let mut out = Vec::new();
    let mut per_base = vec![0u32; inst.bases.len()];
    fn rec(
        inst: &Instance,
        idx: usize,
        left: u32,
        per_base: &mut Vec<u32>,
        floor: usize,
        out: &mut Vec<Configuration>,
    ) {
        if idx == per_base.len() {
            let placement = inst.placement_from_bases(per_base);
            let coverage = coverage_unchecked(inst, &placement);
            let config = Configuration {
                placement,
                coverage,
            };
            if config.covered() >= floor {
                out.push(config);
            }
            return;
        }
        for k in 0..=left {
            per_base[idx] = k;
            rec(inst, idx + 1, left - k, per_base, floor, out);
        }
        per_base[idx] = 0;
    }
    rec(inst, 0, inst.fleet, &mut per_base, floor, &mut out);
    out
}

/// Configurations as benefit columns (allocation = placement, benefit = coverage).
pub fn configuration_columns(configs: &[Configuration]) -> Vec<Column> {
    configs
        .iter()
        .map(|c| {
            Column::new(
                c.placement.iter().map(|&v| v as i64).collect(),
                c.coverage.iter().map(|&t| Q::from_integer(t as i128)).collect(),
            )
        })
        .collect()
}

/// Exact optimum of the instance over all configurations meeting the floor,
/// with transitions limited to `r` moves when given. The objective is in
/// coverage counts, `max_i c_i - min_i c_i`.
pub fn instance_oracle(
    inst: &Instance,
    horizon: usize,
    r: Option<u32>,
    budget: u64,
) -> Result<(Plan, u64)> {
    let configs = enumerate_configurations(inst, true);
    if configs.is_empty() {
        return Err(Error::PricingInfeasible);
    }
    let columns = configuration_columns(&configs);
    let best = brute_force_tpfa(&columns, horizon, r, budget)?;
    let steps = best.sequence.iter().map(|&j| configs[j].clone()).collect();
    let plan = Plan::from_steps(steps)?;
    let count = (best.objective * Q::from_integer(horizon as i128)).to_integer() as u64;
    Ok((plan, count))
}
