//! Column generation for bounds, walk search for transition-feasible plans,
//! and support cuts tying the two together.

use std::time::{Duration, Instant};

use super::cp::{cp_walk_search, CpProblem, DEFAULT_CP_NODE_BUDGET};
use super::graph::{CompactConfigGraph, WalkAutomaton};
use crate::colgen::{generate_columns, ColumnPool};
use crate::error::{Error, Result};
use crate::model::{validate_plan, Configuration, Instance, Plan};

/// Slack when rounding a floating master bound up to whole coverage counts.
const BOUND_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct HybridOptions {
    pub time_limit: Option<Duration>,
    pub cp_node_budget: u64,
    pub max_iterations: Option<usize>,
}

impl Default for HybridOptions {
    fn default() -> Self {
        HybridOptions {
            time_limit: None,
            cp_node_budget: DEFAULT_CP_NODE_BUDGET,
            max_iterations: None,
        }
    }
}

/// Bounds are in coverage counts, `T` times the average-benefit range.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    pub lower: f64,
    pub upper: u64,
    pub incumbent: Plan,
    /// Support sets cut from the master; equal to the explored supports.
    pub cuts: Vec<Vec<usize>>,
    pub explored: Vec<Vec<usize>>,
    pub iteration: usize,
    /// Set once a walk search stops on its budget. Later master bounds no
    /// longer cover the cut-off supports, so the lower bound stays put.
    pub lower_frozen: bool,
}

impl HybridState {
    /// Lower bound rounded up to whole counts.
    pub fn integer_lower(&self) -> u64 {
        (self.lower - BOUND_TOL).ceil().max(0.0) as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridEvent {
    pub iteration: usize,
    pub lower: f64,
    pub upper: u64,
    pub support_size: usize,
    pub cp_nodes: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HybridStats {
    pub columns: usize,
    pub cp_calls: usize,
    pub iterations: usize,
    pub cg_time: Duration,
    pub cp_time: Duration,
    pub total_time: Duration,
    pub initial_lower: u64,
    pub initial_upper: u64,
    pub final_lower: u64,
    pub final_upper: u64,
    pub initial_gap: f64,
    pub final_gap: f64,
    pub solved: bool,
    pub events: Vec<HybridEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridResult {
    pub state: HybridState,
    pub stats: HybridStats,
    pub pool: ColumnPool,
}

impl HybridResult {
    pub fn plan(&self) -> &Plan {
        &self.state.incumbent
    }

    pub fn objective(&self) -> u64 {
        self.state.upper
    }
}

/// `|upper - lower| / upper`, with `0 / 0 = 0`.
pub fn relative_gap(upper: u64, lower: u64) -> f64 {
    if upper == 0 {
        return if lower == 0 { 0.0 } else { 1.0 };
    }
    (upper.abs_diff(lower) as f64 / upper as f64).min(1.0)
}

fn plan_from_word(pool: &ColumnPool, support: &[usize], word: &[usize]) -> Result<Plan> {
    let steps: Vec<Configuration> = word.iter().map(|&s| pool.columns[support[s]].clone()).collect();
    Plan::from_steps(steps)
}

/// Minimizes the coverage-count range over `horizon` periods with at most
/// `r` relocations between consecutive periods.
pub fn hybrid_solve(inst: &Instance, horizon: usize, r: u32, options: &HybridOptions) -> Result<HybridResult> {
    inst.validate()?;
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let started = Instant::now();
    let deadline = options.time_limit.map(|d| started + d);
    let expired = || deadline.is_some_and(|d| Instant::now() >= d);

    let mut pool = ColumnPool::seeded(inst)?;
    let incumbent = Plan::from_steps(vec![pool.columns[0].clone(); horizon])?;
    let mut state = HybridState {
        lower: 0.0,
        upper: incumbent.count_range(),
        incumbent,
        cuts: Vec::new(),
        explored: Vec::new(),
        iteration: 0,
        lower_frozen: false,
    };
    let mut stats = HybridStats {
        initial_upper: state.upper,
        ..HybridStats::default()
    };

    loop {
        if expired() || options.max_iterations.is_some_and(|cap| state.iteration >= cap) {
            break;
        }
        state.iteration += 1;

        let t0 = Instant::now();
        let cg = generate_columns(inst, horizon, &mut pool, &state.cuts, deadline)?;
        stats.cg_time += t0.elapsed();
        let Some(sol) = cg.solution else {
            // Every mix lies inside an explored support.
            stats.solved = !state.lower_frozen;
            if stats.solved {
                state.lower = state.upper as f64;
            }
            break;
        };
        if !cg.converged {
            break;
        }
        if !state.lower_frozen {
            state.lower = state.lower.max(sol.count_bound(horizon));
        }
        if state.iteration == 1 {
            stats.initial_lower = state.integer_lower();
        }
        let lower = state.integer_lower();
        if state.upper <= lower {
            stats.solved = true;
            break;
        }

        let support = sol.support.clone();
        // Parts of this support already searched inside earlier supports,
        // as positions within `support`.
        let omega: Vec<Vec<usize>> = state
            .explored
            .iter()
            .map(|prev| (0..support.len()).filter(|&s| prev.contains(&support[s])).collect::<Vec<_>>())
            .filter(|set: &Vec<usize>| !set.is_empty())
            .collect();
        state.cuts.push(support.clone());

        let placements: Vec<Vec<u32>> = pool.columns.iter().map(|c| c.placement.clone()).collect();
        let ccg = CompactConfigGraph::new(support.clone(), &placements, r)?;
        let automaton = WalkAutomaton::from_ccg(&ccg);
        let coverage: Vec<Vec<u8>> = support.iter().map(|&j| pool.columns[j].coverage.clone()).collect();
        let t1 = Instant::now();
        let cp = cp_walk_search(&CpProblem {
            automaton: &automaton,
            coverage: &coverage,
            horizon,
            lower,
            upper: Some(state.upper),
            excluded: &omega,
            node_budget: options.cp_node_budget,
            deadline,
        });
        stats.cp_time += t1.elapsed();
        stats.cp_calls += 1;
        if let Some((word, value)) = cp.best {
            if value < state.upper {
                let plan = plan_from_word(&pool, &support, &word)?;
                validate_plan(inst, &plan, horizon, Some(r))?;
                if plan.count_range() != value {
                    return Err(Error::SolverFailure {
                        iterations: state.iteration,
                        log: format!("walk search reported {value}, plan has {}", plan.count_range()),
                    });
                }
                state.upper = value;
                state.incumbent = plan;
            }
        }
        if !cp.complete {
            state.lower_frozen = true;
        }
        state.explored.push(support);
        stats.events.push(HybridEvent {
            iteration: state.iteration,
            lower: state.lower,
            upper: state.upper,
            support_size: ccg.len(),
            cp_nodes: cp.nodes,
            elapsed: started.elapsed(),
        });
        if state.upper <= lower {
            stats.solved = true;
            break;
        }
    }

    validate_plan(inst, &state.incumbent, horizon, Some(r))?;
    stats.columns = pool.len();
    stats.iterations = state.iteration;
    stats.total_time = started.elapsed();
    stats.final_upper = state.upper;
    stats.final_lower = if stats.solved {
        state.upper
    } else {
        state.integer_lower().min(state.upper)
    };
    stats.initial_gap = relative_gap(stats.initial_upper, stats.initial_lower);
    stats.final_gap = relative_gap(stats.final_upper, stats.final_lower);
    Ok(HybridResult { state, stats, pool })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{instance_oracle, DEFAULT_ORACLE_BUDGET};
    use crate::fixtures;

    #[test]
    fn gap_conventions() {
        assert_eq!(relative_gap(0, 0), 0.0);
        assert_eq!(relative_gap(4, 3), 0.25);
        assert_eq!(relative_gap(4, 4), 0.0);
    }

    #[test]
    fn matches_oracle_on_three_zone_fixture() {
        let inst = fixtures::three_zone(vec![0, 2], 2);
        for r in 0..=2 {
            for horizon in 1..=4 {
                let res = hybrid_solve(&inst, horizon, r, &HybridOptions::default()).unwrap();
                let (oracle, _) = instance_oracle(&inst, horizon, Some(r), DEFAULT_ORACLE_BUDGET).unwrap();
                assert!(res.stats.solved);
                assert_eq!(res.objective(), oracle.count_range(), "T={horizon} r={r}");
                assert_eq!(res.stats.final_gap, 0.0);
                validate_plan(&inst, res.plan(), horizon, Some(r)).unwrap();
            }
        }
    }

    #[test]
    fn bounds_are_monotone() {
        let inst = fixtures::three_zone(vec![0, 2], 2);
        let res = hybrid_solve(&inst, 4, 0, &HybridOptions::default()).unwrap();
        for w in res.stats.events.windows(2) {
            assert!(w[1].lower >= w[0].lower - 1e-9);
            assert!(w[1].upper <= w[0].upper);
        }
        assert_eq!(res.state.cuts.len(), res.stats.cp_calls);
    }

    #[test]
    fn single_period_is_best_configuration() {
        let inst = fixtures::three_zone(vec![0, 2], 2);
        let res = hybrid_solve(&inst, 1, 0, &HybridOptions::default()).unwrap();
        let (oracle, _) = instance_oracle(&inst, 1, None, DEFAULT_ORACLE_BUDGET).unwrap();
        assert_eq!(res.objective(), oracle.count_range());
    }
}
