//! Restricted counting master problem and the delayed column generation loop.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use crate::bnb::{price_configurations, price_configurations_excluding};
use crate::error::{Error, Result};
use crate::model::{Configuration, Instance};
use crate::simplex::{lp_solve, LinearProgram, LpStatus, RowKind, Sense};

pub const VIOLATION_TOL: f64 = 1e-9;
const SUPPORT_TOL: f64 = 1e-9;

/// Distinct configurations offered to the master problem, deduplicated by
/// placement. Indices are stable: columns are only ever appended.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColumnPool {
    pub columns: Vec<Configuration>,
    index: HashMap<Vec<u32>, usize>,
}

impl ColumnPool {
    pub fn new() -> Self {
        ColumnPool::default()
    }

    /// A pool holding the maximum-coverage configuration.
    pub fn seeded(inst: &Instance) -> Result<Self> {
        let seed = price_configurations(inst, &vec![-1.0; inst.n])?;
        let mut pool = ColumnPool::new();
        pool.insert(seed.config);
        Ok(pool)
    }

    pub fn from_columns(columns: Vec<Configuration>) -> Self {
        let mut pool = ColumnPool::new();
        for c in columns {
            pool.insert(c);
        }
        pool
    }

    /// Adds a column and returns its index (the existing one for duplicates).
    pub fn insert(&mut self, config: Configuration) -> usize {
        if let Some(&j) = self.index.get(&config.placement) {
            return j;
        }
        let j = self.columns.len();
        self.index.insert(config.placement.clone(), j);
        self.columns.push(config);
        j
    }

    pub fn contains(&self, placement: &[u32]) -> bool {
        self.index.contains_key(placement)
    }

    pub fn placements(&self) -> HashSet<Vec<u32>> {
        self.index.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// Multipliers of the master rows: `alpha` on `g >= y_i`, `beta` on
/// `y_i >= h`, `mu` on `sum q = T` and one per support cut.
#[derive(Debug, Clone, PartialEq)]
pub struct DualValues {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: f64,
    pub cuts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmpSolution {
    pub q: Vec<f64>,
    pub duals: DualValues,
    /// Optimal `g - h` in average-benefit units.
    pub lower_bound: f64,
    pub g: f64,
    pub h: f64,
    /// Pool indices with positive weight.
    pub support: Vec<usize>,
}

impl CmpSolution {
    /// Lower bound in coverage counts, `T (g - h)`.
    pub fn count_bound(&self, horizon: usize) -> f64 {
        self.lower_bound * horizon as f64
    }
}

/// Solves the continuous master over `pool` with support cuts
/// `sum_{j in S} q_j <= T - 1`. `None` when the cuts exclude every mix.
pub fn solve_cmp(pool: &ColumnPool, horizon: usize, cuts: &[Vec<usize>]) -> Result<Option<CmpSolution>> {
    if pool.is_empty() {
        return Err(Error::Domain("the column pool is empty".into()));
    }
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let k = pool.len();
    let n = pool.columns[0].coverage.len();
    let t = horizon as f64;
    let (g, h) = (k, k + 1);
    let nv = k + 2;
    let mut objective = vec![0.0; nv];
    objective[g] = 1.0;
    objective[h] = -1.0;
    let mut lp = LinearProgram::new(Sense::Minimize, objective);
    lp.set_bounds(g, f64::NEG_INFINITY, f64::INFINITY);
    lp.set_bounds(h, f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let mut row = vec![0.0; nv];
        row[g] = 1.0;
        for (j, c) in pool.columns.iter().enumerate() {
            row[j] = -(c.coverage[i] as f64) / t;
        }
        lp.add_constraint(row, RowKind::Ge, 0.0);
    }
    for i in 0..n {
        let mut row = vec![0.0; nv];
        row[h] = -1.0;
        for (j, c) in pool.columns.iter().enumerate() {
            row[j] = c.coverage[i] as f64 / t;
        }
        lp.add_constraint(row, RowKind::Ge, 0.0);
    }
    let mut total = vec![1.0; nv];
    total[g] = 0.0;
    total[h] = 0.0;
    lp.add_constraint(total, RowKind::Eq, t);
    for cut in cuts {
        let mut row = vec![0.0; nv];
        for &j in cut {
            if j >= k {
                return Err(Error::Domain(format!("cut refers to column {j} outside the pool")));
            }
            row[j] = 1.0;
        }
        lp.add_constraint(row, RowKind::Le, t - 1.0);
    }
    let sol = lp_solve(&lp)?;
    match sol.status {
        LpStatus::Infeasible => return Ok(None),
        LpStatus::Unbounded => return Err(Error::Domain("master relaxation is unbounded".into())),
        LpStatus::Optimal => {}
    }
    let alpha = sol.duals[..n].to_vec();
    let beta = sol.duals[n..2 * n].to_vec();
    let lambda = alpha.iter().zip(&beta).map(|(a, b)| a - b).collect();
    let duals = DualValues {
        alpha,
        beta,
        lambda,
        mu: sol.duals[2 * n],
        cuts: sol.duals[2 * n + 1..].to_vec(),
    };
    let q = sol.primal[..k].to_vec();
    let support = (0..k).filter(|&j| q[j] > SUPPORT_TOL).collect();
    Ok(Some(CmpSolution {
        q,
        duals,
        lower_bound: sol.objective.max(0.0),
        g: sol.primal[g],
        h: sol.primal[h],
        support,
    }))
}

/// One pricing round of the column generation loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub lower_bound: f64,
    pub pool_size: usize,
    pub pricing_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    /// Final master solution; `None` when the cuts exclude every mix of
    /// every configuration, not just of the pooled ones.
    pub solution: Option<CmpSolution>,
    pub columns_added: usize,
    pub pricing_calls: usize,
    pub trace: Vec<TraceRecord>,
    /// False when the deadline passed before pricing proved optimality; the
    /// last master bound is then not a valid lower bound.
    pub converged: bool,
}

/// Alternates master solves and pricing until no configuration prices below
/// `T mu`. Pricing first ignores the cuts; if its best configuration is
/// already pooled it re-prices over the configurations outside the pool, so
/// the final bound is exact for the full configuration set under the cuts.
/// Stops between rounds once `deadline` has passed.
pub fn generate_columns(
    inst: &Instance,
    horizon: usize,
    pool: &mut ColumnPool,
    cuts: &[Vec<usize>],
    deadline: Option<Instant>,
) -> Result<CgOutcome> {
    let mut out = CgOutcome {
        solution: None,
        columns_added: 0,
        pricing_calls: 0,
        trace: Vec::new(),
        converged: false,
    };
    if pool.is_empty() {
        *pool = ColumnPool::seeded(inst)?;
    }
    loop {
        let Some(sol) = solve_cmp(pool, horizon, cuts)? else {
            // A configuration outside the pool lies in no cut, so using it
            // alone restores feasibility; none left means truly infeasible.
            out.pricing_calls += 1;
            let lambda = vec![-1.0; inst.n];
            match price_configurations_excluding(inst, &lambda, &pool.placements())? {
                Some(p) => {
                    pool.insert(p.config);
                    out.columns_added += 1;
                    continue;
                }
                None => {
                    out.converged = true;
                    return Ok(out);
                }
            }
        };
        if deadline.is_some_and(|d| Instant::now() >= d) {
            out.solution = Some(sol);
            return Ok(out);
        }
        let target = horizon as f64 * sol.duals.mu - VIOLATION_TOL;
        let lambda = &sol.duals.lambda;
        out.pricing_calls += 1;
        let mut priced = Some(price_configurations(inst, lambda)?);
        if priced.as_ref().is_some_and(|p| p.value < target && pool.contains(&p.config.placement)) {
            out.pricing_calls += 1;
            priced = price_configurations_excluding(inst, lambda, &pool.placements())?;
        }
        out.trace.push(TraceRecord {
            iteration: out.trace.len(),
            lower_bound: sol.lower_bound,
            pool_size: pool.len(),
            pricing_value: priced.as_ref().map_or(f64::INFINITY, |p| p.value),
        });
        match priced {
            Some(p) if p.value < target => {
                pool.insert(p.config);
                out.columns_added += 1;
            }
            _ => {
                out.solution = Some(sol);
                out.converged = true;
                return Ok(out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracle::enumerate_configurations;

    fn config(placement: Vec<u32>, coverage: Vec<u8>) -> Configuration {
        Configuration {
            placement,
            coverage,
        }
    }

    fn check_duals(d: &DualValues) {
        assert!((d.alpha.iter().sum::<f64>() - 1.0).abs() <= 1e-8);
        assert!((d.beta.iter().sum::<f64>() - 1.0).abs() <= 1e-8);
        assert!(d.alpha.iter().chain(&d.beta).all(|&v| v >= -1e-12));
    }

    #[test]
    fn two_column_master_reaches_zero() {
        // Coverage counts (2, 0) and (0, 1) mirror the two-rate example.
        let pool = ColumnPool::from_columns(vec![config(vec![1, 0], vec![1, 0]), config(vec![0, 1], vec![0, 1])]);
        let sol = solve_cmp(&pool, 3, &[]).unwrap().unwrap();
        assert!(sol.lower_bound.abs() < 1e-9);
        assert!((sol.q.iter().sum::<f64>() - 3.0).abs() < 1e-9);
        check_duals(&sol.duals);
        for c in &pool.columns {
            let priced: f64 = c.coverage.iter().zip(&sol.duals.lambda).map(|(&t, l)| t as f64 * l).sum();
            assert!(3.0 * sol.duals.mu <= priced + 1e-9);
        }
    }

    #[test]
    fn single_column_master() {
        let pool = ColumnPool::from_columns(vec![config(vec![1, 0, 0], vec![1, 1, 0])]);
        let sol = solve_cmp(&pool, 4, &[]).unwrap().unwrap();
        assert!((sol.q[0] - 4.0).abs() < 1e-9);
        assert!((sol.lower_bound - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cut_on_whole_pool_is_infeasible() {
        let cols = fixtures::star_columns();
        let pool = ColumnPool::from_columns(
            cols.iter()
                .map(|c| {
                    let placement = c.allocation.iter().map(|&v| v as u32).collect();
                    let coverage = c.benefit.iter().map(|b| b.to_integer() as u8).collect();
                    config(placement, coverage)
                })
                .collect(),
        );
        assert!(solve_cmp(&pool, 4, &[]).unwrap().is_some());
        assert_eq!(solve_cmp(&pool, 4, &[vec![0, 1, 2, 3]]).unwrap(), None);
    }

    #[test]
    fn generation_matches_full_enumeration() {
        let inst = fixtures::three_zone(vec![0, 2], 2);
        let mut pool = ColumnPool::seeded(&inst).unwrap();
        let out = generate_columns(&inst, 3, &mut pool, &[], None).unwrap();
        let sol = out.solution.unwrap();
        let full = ColumnPool::from_columns(enumerate_configurations(&inst, true));
        let best = solve_cmp(&full, 3, &[]).unwrap().unwrap();
        assert!((sol.lower_bound - best.lower_bound).abs() <= 1e-6);
        for c in &full.columns {
            let priced: f64 = c.coverage.iter().zip(&sol.duals.lambda).map(|(&t, l)| t as f64 * l).sum();
            assert!(3.0 * sol.duals.mu <= priced + 1e-6);
        }
        for w in out.trace.windows(2) {
            assert!(w[1].lower_bound <= w[0].lower_bound + 1e-9);
        }
    }

    #[test]
    fn warm_pool_needs_one_pricing_call() {
        let inst = fixtures::three_zone(vec![0, 2], 2);
        let mut pool = ColumnPool::seeded(&inst).unwrap();
        generate_columns(&inst, 3, &mut pool, &[], None).unwrap();
        let again = generate_columns(&inst, 3, &mut pool, &[], None).unwrap();
        assert_eq!(again.columns_added, 0);
        assert_eq!(again.pricing_calls, 1);
    }
}
