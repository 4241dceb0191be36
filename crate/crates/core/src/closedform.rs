//! Closed-form solutions and constructive plans for simplex-shaped allocation
//! sets, plus the LP check that multiple periods do not help on convex sets.

use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::allocation::{AllocationSet, GenericAllocationProblem, LinearBenefit};
use crate::error::{Error, Result};
use crate::simplex::{lp_solve, Constraint, LinearProgram, LpStatus, RowKind, Sense};
use crate::Q;

/// Single-period fair allocation on the continuous unit simplex with
/// benefits `tau_i x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexAllocation {
    pub allocation: Vec<Q>,
    /// Common benefit of every stakeholder.
    pub benefit: Q,
    pub inefficiency: Q,
}

pub fn spfa_simplex(rates: &[Q]) -> Result<SimplexAllocation> {
    if rates.is_empty() {
        return Err(Error::Domain("at least one rate is required".into()));
    }
    if rates.iter().any(|t| !t.is_positive()) {
        return Err(Error::Domain("rates must be positive".into()));
    }
    let inv_sum: Q = rates.iter().map(|t| t.recip()).sum();
    let g = inv_sum.recip();
    let allocation = rates.iter().map(|t| g / t).collect();
    let top = *rates.iter().max().expect("nonempty");
    let bottom = *rates.iter().min().expect("nonempty");
    let n = Q::from_integer(rates.len() as i128);
    let inefficiency = if top == bottom {
        Q::zero()
    } else {
        (top - n * g) / (top - bottom)
    };
    Ok(SimplexAllocation {
        allocation,
        benefit: g,
        inefficiency,
    })
}

/// Parameters of the integer simplex `{x in Z^n_+ : sum x <= cap}` with
/// integer rates sorted non-increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialSpec {
    pub rates: Vec<u64>,
    pub cap: u64,
    pub lcm: u64,
    /// Fewest periods admitting a nontrivial perfectly fair plan.
    pub bar_t: u64,
    /// Smallest inefficiency cap under which the constructive plan is feasible.
    pub min_eta: Q,
}

fn check_sorted(rates: &[u64]) -> Result<()> {
    if rates.is_empty() {
        return Err(Error::Domain("at least one rate is required".into()));
    }
    if rates.contains(&0) {
        return Err(Error::Domain("rates must be at least 1".into()));
    }
    if rates.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Domain("rates must be sorted non-increasing".into()));
    }
    Ok(())
}

pub fn simplicial_bounds(rates: &[u64], cap: u64) -> Result<SimplicialSpec> {
    check_sorted(rates)?;
    if cap == 0 {
        return Err(Error::Domain("capacity must be at least 1".into()));
    }
    let lcm = rates.iter().fold(1u64, |acc, &t| acc.lcm(&t));
    let units: u64 = rates.iter().map(|&t| lcm / t).sum();
    let bar_t = units.div_ceil(cap);
    let top = Q::from_integer(rates[0] as i128);
    let bottom = Q::from_integer(*rates.last().expect("nonempty") as i128);
    let spread = bottom.min(top / Q::from_integer(cap as i128));
    Ok(SimplicialSpec {
        rates: rates.to_vec(),
        cap,
        lcm,
        bar_t,
        min_eta: (top - spread) / top,
    })
}

/// Per-period allocations with accumulated benefits and per-period
/// inefficiencies.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormPlan {
    pub periods: Vec<Vec<Q>>,
    pub totals: Vec<Q>,
    pub inefficiency: Vec<Q>,
}

impl ClosedFormPlan {
    fn build(periods: Vec<Vec<Q>>, rates: &[Q], best_total: Q) -> Self {
        let n = rates.len();
        let mut totals = vec![Q::zero(); n];
        let mut inefficiency = Vec::with_capacity(periods.len());
        for x in &periods {
            let mut period_total = Q::zero();
            for i in 0..n {
                let b = rates[i] * x[i];
                totals[i] += b;
                period_total += b;
            }
            inefficiency.push((best_total - period_total) / best_total);
        }
        ClosedFormPlan {
            periods,
            totals,
            inefficiency,
        }
    }

    pub fn max_inefficiency(&self) -> Q {
        self.inefficiency.iter().copied().max().unwrap_or_else(Q::zero)
    }
}

fn check_cap(eta_bar: Q) -> Result<()> {
    if eta_bar.is_negative() || eta_bar > Q::from_integer(1) {
        return Err(Error::Domain("inefficiency cap must lie in [0, 1]".into()));
    }
    Ok(())
}

/// Fills periods to capacity, serving the lowest-rate stakeholder first until
/// its benefit reaches the LCM, then the next one up. A period may serve two
/// adjacent stakeholders when a quota ends mid-period.
pub fn reverse_lex_plan(spec: &SimplicialSpec, eta_bar: Q) -> Result<ClosedFormPlan> {
    check_cap(eta_bar)?;
    if eta_bar < spec.min_eta {
        return Err(Error::Infeasible(format!(
            "inefficiency cap {eta_bar} is below {}, where perfect fairness within {} periods can fail",
            spec.min_eta, spec.bar_t
        )));
    }
    let n = spec.rates.len();
    let mut periods = Vec::new();
    let mut current = vec![Q::zero(); n];
    let mut room = spec.cap;
    for i in (0..n).rev() {
        let mut need = spec.lcm / spec.rates[i];
        while need > 0 {
            if room == 0 {
                periods.push(std::mem::replace(&mut current, vec![Q::zero(); n]));
                room = spec.cap;
            }
            let take = need.min(room);
            current[i] += Q::from_integer(take as i128);
            need -= take;
            room -= take;
        }
    }
    periods.push(current);
    let rates: Vec<Q> = spec.rates.iter().map(|&t| Q::from_integer(t as i128)).collect();
    let best = rates[0] * Q::from_integer(spec.cap as i128);
    let plan = ClosedFormPlan::build(periods, &rates, best);
    debug_assert_eq!(plan.periods.len() as u64, spec.bar_t);
    if plan.max_inefficiency() > eta_bar {
        return Err(Error::Infeasible(format!(
            "a period has inefficiency {} above the cap {eta_bar}",
            plan.max_inefficiency()
        )));
    }
    Ok(plan)
}

/// Two stakeholders with rates `((t_hat - 1) a, 1)` and an inefficiency cap
/// strictly below the threshold of the constructive plan, so no perfectly
/// fair plan fits in `t_hat` periods.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub spec: SimplicialSpec,
    pub eta_bar: Q,
    pub problem: GenericAllocationProblem,
}

pub fn simplicial_counterexample(t_hat: u64, cap: u64) -> Result<Counterexample> {
    if t_hat < 2 || cap == 0 {
        return Err(Error::Domain("need t_hat >= 2 and cap >= 1".into()));
    }
    let top = (t_hat - 1) * cap;
    if top < 2 {
        // Rates (1, 1): the threshold is 0 and nothing lies strictly below it.
        return Err(Error::Domain("t_hat = 2 with cap = 1 admits no cap below the threshold".into()));
    }
    let spec = simplicial_bounds(&[top, 1], cap)?;
    let width = Q::new(1, 2 * top as i128);
    let eta_bar = spec.min_eta - width;
    let benefit = LinearBenefit::diagonal(&[Q::from_integer(top as i128), Q::from_integer(1)]);
    let problem = GenericAllocationProblem::new(
        AllocationSet::IntegerSimplex { min_total: 0, cap },
        benefit,
        eta_bar,
    )?;
    Ok(Counterexample {
        spec,
        eta_bar,
        problem,
    })
}

/// Parameters of the sparse simplex `{x in R^n_+ : sum x <= cap, ||x||_0 <= sparsity}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseSpec {
    pub rates: Vec<u64>,
    pub cap: u64,
    /// Sparsity after clamping to `n`.
    pub sparsity: usize,
    pub quotient: usize,
    pub remainder: usize,
    pub bar_t: usize,
    /// Common benefit delivered by the constructive plan.
    pub value: Q,
    pub min_eta: Q,
}

pub fn sparse_bounds(rates: &[u64], cap: u64, sparsity: usize) -> Result<SparseSpec> {
    check_sorted(rates)?;
    if cap == 0 || sparsity == 0 {
        return Err(Error::Domain("capacity and sparsity must be at least 1".into()));
    }
    let n = rates.len();
    let r = sparsity.min(n);
    let (p, q) = (n / r, n % r);
    let bar_t = n.div_ceil(r);
    let inv = |range: std::ops::Range<usize>| -> Q { range.map(|i| Q::new(1, rates[i] as i128)).sum() };
    let last_group = inv((bar_t - 1) * r..n);
    let last_full = inv((p - 1) * r..p * r);
    let a = Q::from_integer(cap as i128);
    let value = a / last_group.max(last_full);
    // With q = 0 the last period serves r stakeholders, not q.
    let served = if q == 0 { r } else { q };
    let best = a * Q::from_integer(rates[0] as i128);
    let min_eta = (best - Q::from_integer(served as i128) * value) / best;
    Ok(SparseSpec {
        rates: rates.to_vec(),
        cap,
        sparsity: r,
        quotient: p,
        remainder: q,
        bar_t,
        value,
        min_eta,
    })
}

/// Period `t` gives `value / tau_i` to the `t`-th group of `sparsity`
/// stakeholders; the last period takes the rest.
pub fn sparse_plan(spec: &SparseSpec, eta_bar: Q) -> Result<ClosedFormPlan> {
    check_cap(eta_bar)?;
    if eta_bar < spec.min_eta {
        return Err(Error::NotGuaranteed(format!(
            "cap {eta_bar} is below {}; the construction does not apply",
            spec.min_eta
        )));
    }
    let n = spec.rates.len();
    let r = spec.sparsity;
    let rates: Vec<Q> = spec.rates.iter().map(|&t| Q::from_integer(t as i128)).collect();
    let periods: Vec<Vec<Q>> = (0..spec.bar_t)
        .map(|t| {
            let mut x = vec![Q::zero(); n];
            for i in t * r..((t + 1) * r).min(n) {
                x[i] = spec.value / rates[i];
            }
            x
        })
        .collect();
    let best = rates[0] * Q::from_integer(spec.cap as i128);
    let plan = ClosedFormPlan::build(periods, &rates, best);
    let cap = Q::from_integer(spec.cap as i128);
    for x in &plan.periods {
        let used: Q = x.iter().sum();
        if used > cap || x.iter().filter(|v| !v.is_zero()).count() > r {
            return Err(Error::NotGuaranteed("a period breaks the capacity or sparsity".into()));
        }
    }
    if plan.max_inefficiency() > eta_bar {
        return Err(Error::NotGuaranteed(format!(
            "a period has inefficiency {} above the cap {eta_bar}",
            plan.max_inefficiency()
        )));
    }
    Ok(plan)
}

/// A polytope `{x >= 0 : rows}` with linear benefits `benefit[i] . x` and an
/// inefficiency cap.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexProblem {
    pub rows: Vec<Constraint>,
    pub benefit: Vec<Vec<f64>>,
    pub eta_cap: f64,
}

impl ConvexProblem {
    fn dim(&self) -> usize {
        self.benefit.first().map_or(0, Vec::len)
    }

    fn total_weights(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|j| self.benefit.iter().map(|row| row[j]).sum())
            .collect()
    }

    fn check(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 || self.benefit.iter().any(|r| r.len() != d) {
            return Err(Error::Domain("benefit matrix must be rectangular and nonempty".into()));
        }
        if self.rows.iter().any(|r| r.coeffs.len() != d) {
            return Err(Error::Domain("constraint width differs from the benefit dimension".into()));
        }
        if !(0.0..=1.0).contains(&self.eta_cap) {
            return Err(Error::Domain("inefficiency cap must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

fn solved(lp: &LinearProgram, what: &str) -> Result<f64> {
    let sol = lp_solve(lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        LpStatus::Infeasible => Err(Error::Infeasible(format!("{what}: infeasible"))),
        LpStatus::Unbounded => Err(Error::Domain(format!("{what}: unbounded"))),
    }
}

/// Optimal range over `periods` copies of the polytope with averaged benefits.
fn multi_period_range(p: &ConvexProblem, periods: usize, efficiency_floor: f64) -> Result<f64> {
    let d = p.dim();
    let nv = periods * d + 2;
    let (g, h) = (periods * d, periods * d + 1);
    let mut objective = vec![0.0; nv];
    objective[g] = 1.0;
    objective[h] = -1.0;
    let mut lp = LinearProgram::new(Sense::Minimize, objective);
    lp.set_bounds(g, f64::NEG_INFINITY, f64::INFINITY);
    lp.set_bounds(h, f64::NEG_INFINITY, f64::INFINITY);
    let weights = p.total_weights();
    for t in 0..periods {
        for row in &p.rows {
            let mut coeffs = vec![0.0; nv];
            coeffs[t * d..(t + 1) * d].copy_from_slice(&row.coeffs);
            lp.add_constraint(coeffs, row.kind, row.rhs);
        }
        let mut coeffs = vec![0.0; nv];
        coeffs[t * d..(t + 1) * d].copy_from_slice(&weights);
        lp.add_constraint(coeffs, RowKind::Ge, efficiency_floor);
    }
    let scale = 1.0 / periods as f64;
    for benefit in &p.benefit {
        let mut top = vec![0.0; nv];
        let mut bottom = vec![0.0; nv];
        top[g] = 1.0;
        bottom[h] = -1.0;
        for t in 0..periods {
            for j in 0..d {
                top[t * d + j] = -scale * benefit[j];
                bottom[t * d + j] = scale * benefit[j];
            }
        }
        lp.add_constraint(top, RowKind::Ge, 0.0);
        lp.add_constraint(bottom, RowKind::Ge, 0.0);
    }
    solved(&lp, "fair allocation program")
}

/// Optimal range of the single-period and `periods`-period problems.
pub fn convex_equivalence_check(p: &ConvexProblem, periods: usize) -> Result<(f64, f64)> {
    p.check()?;
    if periods == 0 {
        return Err(Error::Domain("need at least one period".into()));
    }
    let weights = p.total_weights();
    let mut bound = LinearProgram::new(Sense::Maximize, weights.clone());
    bound.constraints = p.rows.clone();
    let upper = solved(&bound, "total benefit maximization")?;
    bound.sense = Sense::Minimize;
    let lower = solved(&bound, "total benefit minimization")?;
    let floor = upper - (upper - lower) * p.eta_cap;
    // Keep the floor reachable despite rounding in the bound LPs.
    let floor = floor - 1e-12 * (1.0 + floor.abs());
    let single = multi_period_range(p, 1, floor)?;
    let multi = multi_period_range(p, periods, floor)?;
    Ok((single, multi))
}

/// Exact inefficiency of a per-period allocation under rates `tau` and
/// best total `best`.
pub fn period_inefficiency(rates: &[Q], x: &[Q], best: Q) -> Q {
    let total: Q = rates.iter().zip(x).map(|(t, v)| t * v).sum();
    (best - total) / best
}
