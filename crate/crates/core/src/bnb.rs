//! Branch-and-bound over the simplex engine, plus the integer programs built
//! on it: configuration pricing, the smallest-horizon search and a direct
//! solve of the time-expanded ambulance model for tiny instances.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::allocation::Column;
use crate::error::{Error, Result};
use crate::model::{coverage_unchecked, Configuration, Instance, Plan};
use crate::simplex::{lp_solve, LinearProgram, LpStatus, RowKind, Sense};
use crate::Q;

pub const INTEGRALITY_TOL: f64 = 1e-6;
pub const DEFAULT_PHASE_TWO_CAP: u64 = 100_000;

#[derive(Debug, Clone)]
pub struct MipProblem {
    pub lp: LinearProgram,
    pub integers: Vec<usize>,
    pub node_budget: Option<u64>,
    pub time_budget: Option<Duration>,
}

impl MipProblem {
    pub fn new(lp: LinearProgram, integers: Vec<usize>) -> Self {
        MipProblem {
            lp,
            integers,
            node_budget: None,
            time_budget: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    Infeasible,
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipSolution {
    pub status: MipStatus,
    pub incumbent: Option<Vec<f64>>,
    /// Objective of the incumbent in the problem's own sense, NaN without one.
    pub objective: f64,
    pub nodes: u64,
    /// Proven bound on the optimum: a lower bound when minimizing, an upper
    /// bound when maximizing.
    pub best_bound: f64,
}

struct Node {
    bound: f64,
    id: u64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap: the smallest bound, then the oldest node, comes out first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Best-first branch-and-bound; branches on the most fractional integer
/// variable, with ties going to the lowest index.
pub fn mip_solve(p: &MipProblem) -> Result<MipSolution> {
    let n = p.lp.num_vars();
    if let Some(&bad) = p.integers.iter().find(|&&j| j >= n) {
        return Err(Error::Domain(format!("integer index {bad} out of range")));
    }
    let started = Instant::now();
    let sign = match p.lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut lp = p.lp.clone();
    lp.sense = Sense::Minimize;
    for c in &mut lp.objective {
        *c *= sign;
    }
    let mut integers = p.integers.clone();
    integers.sort_unstable();
    integers.dedup();
    let is_int: Vec<bool> = (0..n).map(|j| integers.binary_search(&j).is_ok()).collect();
    for &j in &integers {
        lp.lower[j] = lp.lower[j].ceil();
        lp.upper[j] = lp.upper[j].floor();
    }
    // Integral objective over integer variables lets a node be cut as soon as
    // it cannot improve the incumbent by a whole unit.
    let integral_objective = lp
        .objective
        .iter()
        .enumerate()
        .all(|(j, &c)| c == 0.0 || (is_int[j] && c.fract() == 0.0));

    let mut next_id = 0u64;
    let mut solve_node = |lp: &mut LinearProgram, lower: Vec<f64>, upper: Vec<f64>| -> Result<Option<Node>> {
        lp.lower.clone_from(&lower);
        lp.upper.clone_from(&upper);
        let sol = lp_solve(lp)?;
        match sol.status {
            LpStatus::Optimal => {
                next_id += 1;
                Ok(Some(Node {
                    bound: sol.objective,
                    id: next_id,
                    lower,
                    upper,
                    x: sol.primal,
                }))
            }
            LpStatus::Infeasible => Ok(None),
            LpStatus::Unbounded => Err(Error::Domain("linear relaxation is unbounded".into())),
        }
    };

    let mut heap = BinaryHeap::new();
    let (lower, upper) = (lp.lower.clone(), lp.upper.clone());
    if let Some(root) = solve_node(&mut lp, lower, upper)? {
        heap.push(root);
    }
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0u64;
    let prunes = |bound: f64, inc: &Option<(f64, Vec<f64>)>| match inc {
        None => false,
        Some((best, _)) if integral_objective => bound > best - 1.0 + INTEGRALITY_TOL,
        Some((best, _)) => bound >= best - 1e-9,
    };

    let finish = |status: MipStatus, incumbent: Option<(f64, Vec<f64>)>, nodes: u64, bound: f64| {
        let (objective, x) = match incumbent {
            Some((o, x)) => (sign * o, Some(x)),
            None => (f64::NAN, None),
        };
        MipSolution {
            status,
            incumbent: x,
            objective,
            nodes,
            best_bound: sign * bound,
        }
    };

    while let Some(node) = heap.pop() {
        if prunes(node.bound, &incumbent) {
            break;
        }
        let over_nodes = p.node_budget.is_some_and(|b| nodes >= b);
        let over_time = p.time_budget.is_some_and(|b| started.elapsed() >= b);
        if over_nodes || over_time {
            let bound = incumbent
                .as_ref()
                .map_or(node.bound, |(o, _)| o.min(node.bound));
            return Ok(finish(MipStatus::BudgetExceeded, incumbent, nodes, bound));
        }
        nodes += 1;

        let mut branch: Option<(usize, f64)> = None;
        for &j in &integers {
            let v = node.x[j];
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > INTEGRALITY_TOL && branch.is_none_or(|(_, f)| frac > f + 1e-12) {
                branch = Some((j, frac));
            }
        }
        let Some((j, _)) = branch else {
            let mut x = node.x;
            for &k in &integers {
                x[k] = x[k].round();
            }
            let obj = lp.evaluate(&x);
            if incumbent.as_ref().is_none_or(|(best, _)| obj < *best) {
                incumbent = Some((obj, x));
            }
            continue;
        };
        let v = node.x[j];
        let mut down_upper = node.upper.clone();
        down_upper[j] = v.floor();
        let mut up_lower = node.lower.clone();
        up_lower[j] = v.ceil();
        let children = [
            solve_node(&mut lp, node.lower.clone(), down_upper)?,
            solve_node(&mut lp, up_lower, node.upper)?,
        ];
        for child in children.into_iter().flatten() {
            if !prunes(child.bound, &incumbent) {
                heap.push(child);
            }
        }
    }

    Ok(match incumbent {
        Some((o, x)) => finish(MipStatus::Optimal, Some((o, x)), nodes, o),
        None => finish(MipStatus::Infeasible, None, nodes, f64::INFINITY),
    })
}

/// A configuration returned by pricing with its reduced value `sum_i lambda_i tau_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PricedConfiguration {
    pub config: Configuration,
    pub value: f64,
}

/// Zones that share their set of reaching bases and their demand are
/// interchangeable in pricing, so they get one coverage indicator.
struct ZoneClass {
    reaching: Vec<usize>,
    demand: u32,
    zones: Vec<usize>,
}

fn zone_classes(inst: &Instance) -> Vec<ZoneClass> {
    let mut map: BTreeMap<(Vec<usize>, u32), Vec<usize>> = BTreeMap::new();
    for i in 0..inst.n {
        let reaching: Vec<usize> = inst
            .bases
            .iter()
            .enumerate()
            .filter(|(_, &b)| inst.reach[i][b] == 1)
            .map(|(k, _)| k)
            .collect();
        map.entry((reaching, inst.demand[i])).or_default().push(i);
    }
    map.into_iter()
        .filter(|((reaching, demand), _)| !reaching.is_empty() && *demand <= inst.fleet)
        .map(|((reaching, demand), zones)| ZoneClass {
            reaching,
            demand,
            zones,
        })
        .collect()
}

struct PricingModel {
    mip: MipProblem,
    bases: usize,
}

/// Builds the pricing program: integer ambulances per base, one binary
/// coverage indicator per zone class linked by big-M rows with `M = m`.
fn pricing_model(inst: &Instance, lambda: &[f64]) -> PricingModel {
    let classes = zone_classes(inst);
    let nb = inst.bases.len();
    let nv = nb + classes.len();
    let m = inst.fleet as f64;
    let mut objective = vec![0.0; nv];
    for (c, class) in classes.iter().enumerate() {
        objective[nb + c] = class.zones.iter().map(|&i| lambda[i]).sum();
    }
    let mut lp = LinearProgram::new(Sense::Minimize, objective);
    for b in 0..nb {
        lp.set_bounds(b, 0.0, m);
    }
    for c in 0..classes.len() {
        lp.set_bounds(nb + c, 0.0, 1.0);
    }
    let mut fleet = vec![0.0; nv];
    fleet[..nb].fill(1.0);
    lp.add_constraint(fleet, RowKind::Le, m);
    for (c, class) in classes.iter().enumerate() {
        let zeta = class.demand as f64;
        let mut reach = vec![0.0; nv];
        for &k in &class.reaching {
            reach[k] = 1.0;
        }
        // tau = 0 forces v <= zeta - 1; tau = 1 forces v >= zeta.
        let mut upper = reach.clone();
        upper[nb + c] = -m;
        lp.add_constraint(upper, RowKind::Le, zeta - 1.0);
        let mut lower = reach.clone();
        lower[nb + c] = -m;
        lp.add_constraint(lower, RowKind::Ge, zeta - m);
        // Valid tightening of the same implication: v >= zeta * tau.
        let mut tight = reach;
        tight[nb + c] = -zeta;
        lp.add_constraint(tight, RowKind::Ge, 0.0);
    }
    let floor = inst.min_covered();
    if floor > 0 {
        let mut row = vec![0.0; nv];
        for (c, class) in classes.iter().enumerate() {
            row[nb + c] = class.zones.len() as f64;
        }
        lp.add_constraint(row, RowKind::Ge, floor as f64);
    }
    PricingModel {
        mip: MipProblem::new(lp, (0..nv).collect()),
        bases: nb,
    }
}

fn priced_from(inst: &Instance, lambda: &[f64], per_base: &[f64]) -> PricedConfiguration {
    let counts: Vec<u32> = per_base.iter().map(|v| v.round().max(0.0) as u32).collect();
    let placement = inst.placement_from_bases(&counts);
    let coverage = coverage_unchecked(inst, &placement);
    let value = coverage
        .iter()
        .zip(lambda)
        .map(|(&t, &l)| t as f64 * l)
        .sum();
    PricedConfiguration {
        config: Configuration {
            placement,
            coverage,
        },
        value,
    }
}

fn check_lambda(inst: &Instance, lambda: &[f64]) -> Result<()> {
    if lambda.len() != inst.n {
        return Err(Error::Domain(format!(
            "expected {} dual values, got {}",
            inst.n,
            lambda.len()
        )));
    }
    Ok(())
}

/// Feasible configuration minimizing `sum_i lambda_i tau_i`, subject to the
/// fleet size and the coverage floor.
pub fn price_configurations(inst: &Instance, lambda: &[f64]) -> Result<PricedConfiguration> {
    check_lambda(inst, lambda)?;
    let model = pricing_model(inst, lambda);
    let sol = mip_solve(&model.mip)?;
    match (sol.status, sol.incumbent) {
        (MipStatus::Optimal, Some(x)) => Ok(priced_from(inst, lambda, &x[..model.bases])),
        _ => Err(Error::PricingInfeasible),
    }
}

/// Like [`price_configurations`] but never returns one of the `excluded`
/// placements. Partitions the per-base box around each excluded optimum and
/// explores the parts best-first, so the result is the exact optimum over the
/// remaining configurations. `None` when every feasible placement is excluded.
pub fn price_configurations_excluding(
    inst: &Instance,
    lambda: &[f64],
    excluded: &HashSet<Vec<u32>>,
) -> Result<Option<PricedConfiguration>> {
    check_lambda(inst, lambda)?;
    let mut model = pricing_model(inst, lambda);
    let nb = model.bases;

    struct Part {
        value: f64,
        id: u64,
        lower: Vec<f64>,
        upper: Vec<f64>,
        x: Vec<f64>,
    }
    let mut next_id = 0u64;
    let mut solve = |model: &mut PricingModel, lower: Vec<f64>, upper: Vec<f64>| -> Result<Option<Part>> {
        for b in 0..nb {
            model.mip.lp.set_bounds(b, lower[b], upper[b]);
        }
        let sol = mip_solve(&model.mip)?;
        Ok(match (sol.status, sol.incumbent) {
            (MipStatus::Optimal, Some(x)) => {
                next_id += 1;
                Some(Part {
                    value: sol.objective,
                    id: next_id,
                    lower,
                    upper,
                    x,
                })
            }
            _ => None,
        })
    };

    let m = inst.fleet as f64;
    let mut open: Vec<Part> = Vec::new();
    let root = solve(&mut model, vec![0.0; nb], vec![m; nb])?;
    if root.is_none() {
        return Err(Error::PricingInfeasible);
    }
    open.extend(root);
    loop {
        let Some(best) = open
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.1.id.cmp(&b.1.id)))
            .map(|(k, _)| k)
        else {
            return Ok(None);
        };
        let part = open.swap_remove(best);
        let priced = priced_from(inst, lambda, &part.x[..nb]);
        if !excluded.contains(&priced.config.placement) {
            return Ok(Some(priced));
        }
        // Split the box into pieces that differ from the excluded point in
        // the first base where they disagree with it.
        let point: Vec<f64> = part.x[..nb].iter().map(|v| v.round()).collect();
        let mut lower = part.lower.clone();
        let mut upper = part.upper.clone();
        for b in 0..nb {
            if point[b] - 1.0 >= lower[b] {
                let mut up = upper.clone();
                up[b] = point[b] - 1.0;
                open.extend(solve(&mut model, lower.clone(), up)?);
            }
            if point[b] + 1.0 <= upper[b] {
                let mut lo = lower.clone();
                lo[b] = point[b] + 1.0;
                open.extend(solve(&mut model, lo, upper.clone())?);
            }
            lower[b] = point[b];
            upper[b] = point[b];
        }
    }
}

/// Outcome of the smallest-horizon search.
#[derive(Debug, Clone, PartialEq)]
pub struct MinHorizon {
    /// Minimum range of the benefit average over all nontrivial mixes.
    pub phi: f64,
    pub horizon: u64,
    /// How often each column is used over `horizon` periods.
    pub multiplicities: Vec<u64>,
    /// Exact range of the resulting average benefit vector.
    pub range: Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HorizonRoute {
    /// One integer program on unnormalized totals when perfect fairness is
    /// reachable, iteration over the horizon otherwise.
    Auto,
    /// Always iterate `T = 1, 2, ...` with a fixed-horizon program.
    IterateHorizon,
}

fn check_columns(columns: &[Column]) -> Result<usize> {
    let first = columns
        .first()
        .ok_or_else(|| Error::Infeasible("empty column list".into()))?;
    let n = first.benefit.len();
    if n == 0 || columns.iter().any(|c| c.benefit.len() != n) {
        return Err(Error::Domain("benefit vectors must share a nonzero length".into()));
    }
    Ok(n)
}

fn to_f64(v: Q) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Scales a row of rationals to coprime integers.
fn integral_row(row: &[Q]) -> Vec<f64> {
    let denom = row.iter().fold(1i128, |acc, v| acc.lcm(v.denom()));
    row.iter().map(|v| (v * Q::from_integer(denom)).to_integer() as f64).collect()
}

fn exact_range(columns: &[Column], q: &[u64]) -> Q {
    let n = columns[0].benefit.len();
    let total: u64 = q.iter().sum();
    let mut acc = vec![Q::zero(); n];
    for (col, &k) in columns.iter().zip(q) {
        for (a, b) in acc.iter_mut().zip(&col.benefit) {
            *a += b * Q::from_integer(k as i128);
        }
    }
    let max = acc.iter().max().copied().unwrap_or_else(Q::zero);
    let min = acc.iter().min().copied().unwrap_or_else(Q::zero);
    (max - min) / Q::from_integer(total.max(1) as i128)
}

/// Minimum range over all mixes `w >= 0, sum w = 1` of the columns.
fn phase_one(columns: &[Column], n: usize) -> Result<f64> {
    let k = columns.len();
    let inf = f64::INFINITY;
    let mut objective = vec![0.0; k + 2];
    objective[k] = 1.0;
    objective[k + 1] = -1.0;
    let mut lp = LinearProgram::new(Sense::Minimize, objective);
    lp.set_bounds(k, -inf, inf);
    lp.set_bounds(k + 1, -inf, inf);
    let mut mix = vec![1.0; k + 2];
    mix[k] = 0.0;
    mix[k + 1] = 0.0;
    lp.add_constraint(mix, RowKind::Eq, 1.0);
    for i in 0..n {
        let benefits: Vec<f64> = columns.iter().map(|c| to_f64(c.benefit[i])).collect();
        let mut top = benefits.iter().map(|b| -b).collect::<Vec<_>>();
        top.extend([1.0, 0.0]);
        lp.add_constraint(top, RowKind::Ge, 0.0);
        let mut bottom = benefits;
        bottom.extend([0.0, -1.0]);
        lp.add_constraint(bottom, RowKind::Ge, 0.0);
    }
    let sol = lp_solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Infeasible("mix program has no optimum".into()));
    }
    Ok(sol.objective.max(0.0))
}

/// Smallest number of integer column uses admitting equal totals.
fn smallest_fair_multiset(columns: &[Column], n: usize) -> Result<Option<Vec<u64>>> {
    let k = columns.len();
    let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0; k]);
    lp.add_constraint(vec![1.0; k], RowKind::Ge, 1.0);
    for i in 0..n.saturating_sub(1) {
        let diff: Vec<Q> = columns.iter().map(|c| c.benefit[i] - c.benefit[i + 1]).collect();
        lp.add_constraint(integral_row(&diff), RowKind::Eq, 0.0);
    }
    let sol = mip_solve(&MipProblem::new(lp, (0..k).collect()))?;
    Ok(sol
        .incumbent
        .map(|x| x.iter().map(|v| v.round() as u64).collect()))
}

/// Minimum range of the totals `sum_j tau_j q_j` over integer `q` with
/// `sum q = horizon`, returned with a minimizer. The average-benefit range is
/// this value divided by `horizon`.
pub fn min_total_range(columns: &[Column], horizon: u64) -> Result<(Q, Vec<u64>)> {
    let n = check_columns(columns)?;
    let k = columns.len();
    let inf = f64::INFINITY;
    let mut objective = vec![0.0; k + 2];
    objective[k] = 1.0;
    objective[k + 1] = -1.0;
    let mut lp = LinearProgram::new(Sense::Minimize, objective);
    lp.set_bounds(k, -inf, inf);
    lp.set_bounds(k + 1, -inf, inf);
    let mut total = vec![1.0; k + 2];
    total[k] = 0.0;
    total[k + 1] = 0.0;
    lp.add_constraint(total, RowKind::Eq, horizon as f64);
    for i in 0..n {
        let benefits: Vec<f64> = columns.iter().map(|c| to_f64(c.benefit[i])).collect();
        let mut top: Vec<f64> = benefits.iter().map(|b| -b).collect();
        top.extend([1.0, 0.0]);
        lp.add_constraint(top, RowKind::Ge, 0.0);
        let mut bottom = benefits;
        bottom.extend([0.0, -1.0]);
        lp.add_constraint(bottom, RowKind::Ge, 0.0);
    }
    let sol = mip_solve(&MipProblem::new(lp, (0..k).collect()))?;
    let x = sol
        .incumbent
        .ok_or_else(|| Error::Infeasible("no mix of the requested length".into()))?;
    let q: Vec<u64> = x[..k].iter().map(|v| v.round() as u64).collect();
    let range = exact_range(columns, &q) * Q::from_integer(horizon as i128);
    Ok((range, q))
}

/// Two-phase search for the least unfair mix and the smallest horizon that
/// realizes it.
pub fn two_phase_min_horizon(columns: &[Column], route: HorizonRoute, cap: u64) -> Result<MinHorizon> {
    let n = check_columns(columns)?;
    let phi = phase_one(columns, n)?;
    let fair = phi <= 1e-9;

    if fair && route == HorizonRoute::Auto {
        if let Some(q) = smallest_fair_multiset(columns, n)? {
            let range = exact_range(columns, &q);
            if range.is_zero() {
                return Ok(MinHorizon {
                    phi: 0.0,
                    horizon: q.iter().sum(),
                    multiplicities: q,
                    range,
                });
            }
        }
        return Err(Error::SolverFailure {
            iterations: 0,
            log: "fair mix found by the relaxation has no exact integer realization".into(),
        });
    }

    for horizon in 1..=cap {
        let (total_range, q) = min_total_range(columns, horizon)?;
        let range = total_range / Q::from_integer(horizon as i128);
        let hit = if fair {
            range.is_zero()
        } else {
            to_f64(range) <= phi + 1e-9
        };
        if hit {
            return Ok(MinHorizon {
                phi,
                horizon,
                multiplicities: q,
                range,
            });
        }
    }
    Err(Error::IterationCap { cap })
}

/// Direct time-expanded ambulance model for tiny instances: integer
/// placements and binary coverage per period, optional transition limit,
/// minimizing the range of coverage counts.
pub fn solve_awt_direct(inst: &Instance, horizon: usize, r: Option<u32>) -> Result<(Plan, u64)> {
    inst.validate()?;
    let nb = inst.bases.len();
    let n = inst.n;
    let m = inst.fleet as f64;
    let inf = f64::INFINITY;
    // Per period: nb placement vars, n coverage vars; then g, h; then per
    // transition nb distance vars.
    let per = nb + n;
    let g = horizon * per;
    let h = g + 1;
    let dist0 = h + 1;
    let transitions = if r.is_some() { horizon.saturating_sub(1) } else { 0 };
    let nv = dist0 + transitions * nb;
    let mut objective = vec![0.0; nv];
    objective[g] = 1.0;
    objective[h] = -1.0;
    let mut lp = LinearProgram::new(Sense::Minimize, objective);
    lp.set_bounds(g, -inf, inf);
    lp.set_bounds(h, -inf, inf);
    let x = |t: usize, b: usize| t * per + b;
    let tau = |t: usize, i: usize| t * per + nb + i;
    for t in 0..horizon {
        for b in 0..nb {
            lp.set_bounds(x(t, b), 0.0, m);
        }
        for i in 0..n {
            lp.set_bounds(tau(t, i), 0.0, 1.0);
        }
        let mut fleet = vec![0.0; nv];
        for b in 0..nb {
            fleet[x(t, b)] = 1.0;
        }
        lp.add_constraint(fleet, RowKind::Le, m);
        for i in 0..n {
            let zeta = inst.demand[i] as f64;
            let mut row = vec![0.0; nv];
            for (b, &base) in inst.bases.iter().enumerate() {
                if inst.reach[i][base] == 1 {
                    row[x(t, b)] = 1.0;
                }
            }
            let mut upper = row.clone();
            upper[tau(t, i)] = -m;
            lp.add_constraint(upper, RowKind::Le, zeta - 1.0);
            let mut lower = row;
            lower[tau(t, i)] = -m;
            lp.add_constraint(lower, RowKind::Ge, zeta - m);
        }
        let mut floor = vec![0.0; nv];
        for i in 0..n {
            floor[tau(t, i)] = 1.0;
        }
        lp.add_constraint(floor, RowKind::Ge, inst.min_covered() as f64);
    }
    for i in 0..n {
        let mut top = vec![0.0; nv];
        let mut bottom = vec![0.0; nv];
        top[g] = 1.0;
        bottom[h] = -1.0;
        for t in 0..horizon {
            top[tau(t, i)] = -1.0;
            bottom[tau(t, i)] = 1.0;
        }
        lp.add_constraint(top, RowKind::Ge, 0.0);
        lp.add_constraint(bottom, RowKind::Ge, 0.0);
    }
    if let Some(r) = r {
        for t in 0..transitions {
            let mut budget = vec![0.0; nv];
            for b in 0..nb {
                let d = dist0 + t * nb + b;
                budget[d] = 1.0;
                let mut plus = vec![0.0; nv];
                plus[d] = 1.0;
                plus[x(t + 1, b)] = -1.0;
                plus[x(t, b)] = 1.0;
                lp.add_constraint(plus, RowKind::Ge, 0.0);
                let mut minus = vec![0.0; nv];
                minus[d] = 1.0;
                minus[x(t + 1, b)] = 1.0;
                minus[x(t, b)] = -1.0;
                lp.add_constraint(minus, RowKind::Ge, 0.0);
            }
            lp.add_constraint(budget, RowKind::Le, 2.0 * r as f64);
        }
    }
    let integers: Vec<usize> = (0..horizon * per).collect();
    let sol = mip_solve(&MipProblem::new(lp, integers))?;
    let xs = match (sol.status, sol.incumbent) {
        (MipStatus::Optimal, Some(v)) => v,
        _ => return Err(Error::Infeasible("the time-expanded model has no solution".into())),
    };
    let mut steps = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let per_base: Vec<u32> = (0..nb).map(|b| xs[x(t, b)].round() as u32).collect();
        steps.push(Configuration::new(inst, inst.placement_from_bases(&per_base))?);
    }
    let plan = Plan::from_steps(steps)?;
    let objective = plan.count_range();
    Ok((plan, objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracle::{enumerate_configurations, instance_oracle, DEFAULT_ORACLE_BUDGET};

    #[test]
    fn binary_knapsack() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![3.0, 2.0]);
        lp.add_constraint(vec![1.0, 1.0], RowKind::Le, 1.0);
        lp.set_bounds(0, 0.0, 1.0);
        lp.set_bounds(1, 0.0, 1.0);
        let sol = mip_solve(&MipProblem::new(lp, vec![0, 1])).unwrap();
        assert_eq!(sol.status, MipStatus::Optimal);
        assert_eq!(sol.objective, 3.0);
        assert_eq!(sol.incumbent.unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn fractional_relaxation_is_branched() {
        // max 5x + 4y, 6x + 4y <= 24, x + 2y <= 6, integer: optimum 20 at (4, 0).
        let mut lp = LinearProgram::new(Sense::Maximize, vec![5.0, 4.0]);
        lp.add_constraint(vec![6.0, 4.0], RowKind::Le, 24.0);
        lp.add_constraint(vec![1.0, 2.0], RowKind::Le, 6.0);
        let sol = mip_solve(&MipProblem::new(lp, vec![0, 1])).unwrap();
        assert_eq!(sol.status, MipStatus::Optimal);
        assert!((sol.objective - 20.0).abs() < 1e-9);
        assert!(sol.best_bound >= sol.objective - 1e-9);
    }

    #[test]
    fn node_budget_is_reported() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![5.0, 4.0]);
        lp.add_constraint(vec![6.0, 4.0], RowKind::Le, 24.0);
        lp.add_constraint(vec![1.0, 2.0], RowKind::Le, 6.0);
        let mut p = MipProblem::new(lp, vec![0, 1]);
        p.node_budget = Some(1);
        let sol = mip_solve(&p).unwrap();
        assert_eq!(sol.status, MipStatus::BudgetExceeded);
    }

    #[test]
    fn infeasible_integer_program() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0]);
        lp.add_constraint(vec![2.0], RowKind::Eq, 1.0);
        let sol = mip_solve(&MipProblem::new(lp, vec![0])).unwrap();
        assert_eq!(sol.status, MipStatus::Infeasible);
    }

    fn enumerated_min(inst: &Instance, lambda: &[f64]) -> f64 {
        enumerate_configurations(inst, true)
            .iter()
            .map(|c| c.coverage.iter().zip(lambda).map(|(&t, l)| t as f64 * l).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn pricing_prefers_negative_duals() {
        let inst = fixtures::three_zone(vec![0, 2], 2);
        let priced = price_configurations(&inst, &[-1.0, -1.0, 1.0]).unwrap();
        assert_eq!(priced.config.coverage, vec![1, 1, 0]);
        assert_eq!(priced.value, -2.0);
    }

    #[test]
    fn pricing_with_positive_duals_covers_nothing() {
        let inst = fixtures::three_zone(vec![0, 2], 2);
        let priced = price_configurations(&inst, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(priced.value, 0.0);
        assert_eq!(priced.config.covered(), 0);
    }

    #[test]
    fn pricing_maximizes_coverage_under_floor() {
        let inst = fixtures::three_zone(vec![0, 2], 3).with_coverage_floor(2.0 / 3.0);
        let lambda = [-1.0, -1.0, -1.0];
        let priced = price_configurations(&inst, &lambda).unwrap();
        assert_eq!(priced.value, enumerated_min(&inst, &lambda));
        assert_eq!(priced.config.coverage, vec![1, 1, 1]);
    }

    #[test]
    fn pricing_reports_infeasible_floor() {
        let inst = fixtures::three_zone(vec![0], 2).with_coverage_floor(1.0);
        assert_eq!(price_configurations(&inst, &[0.0; 3]), Err(Error::PricingInfeasible));
    }

    #[test]
    fn excluding_pricing_skips_pool() {
        let inst = fixtures::three_zone(vec![0, 2], 2);
        let lambda = [-1.0, -1.0, 0.5];
        let mut excluded = HashSet::new();
        let mut seen = Vec::new();
        while let Some(p) = price_configurations_excluding(&inst, &lambda, &excluded).unwrap() {
            assert!(seen.last().is_none_or(|&v| p.value >= v - 1e-12));
            seen.push(p.value);
            excluded.insert(p.config.placement);
        }
        assert_eq!(seen.len(), enumerate_configurations(&inst, true).len());
    }

    #[test]
    fn two_rates_need_three_periods() {
        let cols = fixtures::two_rates();
        for route in [HorizonRoute::Auto, HorizonRoute::IterateHorizon] {
            let res = two_phase_min_horizon(&cols, route, DEFAULT_PHASE_TWO_CAP).unwrap();
            assert_eq!(res.horizon, 3);
            assert_eq!(res.multiplicities, vec![1, 2]);
            assert!(res.range.is_zero());
        }
    }

    #[test]
    fn single_column_needs_one_period() {
        let cols = vec![Column::new(vec![1], vec![Q::from_integer(2), Q::from_integer(1)])];
        let res = two_phase_min_horizon(&cols, HorizonRoute::Auto, 10).unwrap();
        assert_eq!(res.horizon, 1);
        assert!((res.phi - 1.0).abs() < 1e-9);
        assert_eq!(res.range, Q::from_integer(1));
    }

    #[test]
    fn horizon_cap_is_reported() {
        let res = two_phase_min_horizon(&fixtures::delayed_fairness(), HorizonRoute::IterateHorizon, 20);
        assert_eq!(res, Err(Error::IterationCap { cap: 20 }));
    }

    #[test]
    fn model_on_two_rates_reaches_zero() {
        let (range, q) = min_total_range(&fixtures::two_rates(), 3).unwrap();
        assert!(range.is_zero());
        assert_eq!(q, vec![1, 2]);
    }

    #[test]
    fn direct_model_matches_oracle() {
        let inst = fixtures::three_zone(vec![0, 2], 2);
        for r in [None, Some(0), Some(1)] {
            let (plan, obj) = solve_awt_direct(&inst, 3, r).unwrap();
            crate::model::validate_plan(&inst, &plan, 3, r).unwrap();
            let (_, best) = instance_oracle(&inst, 3, r, DEFAULT_ORACLE_BUDGET).unwrap();
            assert_eq!(obj, best);
        }
    }
}
