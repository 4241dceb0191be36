mod common;

use std::collections::HashSet;

use fairhorizon::allocation::Column;
use fairhorizon::bnb::{mip_solve, price_configurations, price_configurations_excluding, solve_awt_direct, MipProblem, MipStatus};
use fairhorizon::colgen::{generate_columns, ColumnPool};
use fairhorizon::fixtures;
use fairhorizon::oracle::{brute_force_tpfa, enumerate_configurations, greedy_plan, instance_oracle, DEFAULT_ORACLE_BUDGET};
use fairhorizon::simplex::{lp_solve, LinearProgram, LpStatus, RowKind, Sense};
use fairhorizon::transition::{hybrid_solve, HybridOptions};
use fairhorizon::{transition_ok, unfairness_range, validate_plan, Configuration, Plan, Q};
use proptest::prelude::*;

use common::tiny_instance;

fn ints(v: &[i64]) -> Vec<Q> {
    v.iter().map(|&x| Q::from_integer(x as i128)).collect()
}

/// Minimum of `c'x` over the vertices of a bounded two-variable polygon.
fn vertex_minimum(lp: &LinearProgram) -> Option<f64> {
    let mut lines: Vec<([f64; 2], f64)> = lp.constraints.iter().map(|r| ([r.coeffs[0], r.coeffs[1]], r.rhs)).collect();
    for j in 0..2 {
        let mut unit = [0.0; 2];
        unit[j] = 1.0;
        lines.push((unit, lp.lower[j]));
        lines.push((unit, lp.upper[j]));
    }
    let mut best: Option<f64> = None;
    for a in 0..lines.len() {
        for b in a + 1..lines.len() {
            let ([p, q], e) = lines[a];
            let ([r, s], f) = lines[b];
            let det = p * s - q * r;
            if det.abs() < 1e-12 {
                continue;
            }
            let x = [(e * s - q * f) / det, (p * f - e * r) / det];
            if lp.max_violation(&x) <= 1e-9 {
                let v = lp.evaluate(&x);
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
    }
    best
}

proptest! {
    #[test]
    fn lp_matches_vertex_enumeration(
        cost in prop::collection::vec(-3i32..=3, 2),
        upper in prop::collection::vec(1i32..=5, 2),
        rows in prop::collection::vec((prop::collection::vec(-2i32..=2, 2), 0i32..=6), 1..=3),
    ) {
        let mut lp = LinearProgram::new(Sense::Minimize, cost.iter().map(|&c| c as f64).collect());
        for (j, &u) in upper.iter().enumerate() {
            lp.set_bounds(j, 0.0, u as f64);
        }
        for (coeffs, rhs) in &rows {
            lp.add_constraint(coeffs.iter().map(|&a| a as f64).collect(), RowKind::Le, *rhs as f64);
        }
        let sol = lp_solve(&lp).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        prop_assert!(lp.max_violation(&sol.primal) <= 1e-7);
        let expected = vertex_minimum(&lp).unwrap();
        prop_assert!((sol.objective - expected).abs() <= 1e-7, "{} vs {}", sol.objective, expected);
        prop_assert!((sol.objective - sol.dual_objective).abs() <= 1e-6);
    }

    #[test]
    fn mip_matches_enumeration(
        cost in prop::collection::vec(0i32..=5, 3),
        rows in prop::collection::vec((prop::collection::vec(0i32..=4, 3), 0i32..=10), 1..=3),
    ) {
        let mut lp = LinearProgram::new(Sense::Maximize, cost.iter().map(|&c| c as f64).collect());
        for j in 0..3 {
            lp.set_bounds(j, 0.0, 3.0);
        }
        for (coeffs, rhs) in &rows {
            lp.add_constraint(coeffs.iter().map(|&a| a as f64).collect(), RowKind::Le, *rhs as f64);
        }
        let mut best = f64::NEG_INFINITY;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let x = [a as f64, b as f64, c as f64];
                    if lp.max_violation(&x) <= 1e-9 {
                        best = best.max(lp.evaluate(&x));
                    }
                }
            }
        }
        let sol = mip_solve(&MipProblem::new(lp, vec![0, 1, 2])).unwrap();
        prop_assert_eq!(sol.status, MipStatus::Optimal);
        prop_assert!((sol.objective - best).abs() <= 1e-6);
    }

    #[test]
    fn pricing_matches_enumeration(seed in any::<u64>(), weights in prop::collection::vec(-1.0f64..1.0, 6)) {
        let inst = tiny_instance(seed);
        let lambda = &weights[..inst.n];
        let value = |c: &Configuration| -> f64 {
            c.coverage.iter().zip(lambda).map(|(&t, l)| t as f64 * l).sum()
        };
        let configs = enumerate_configurations(&inst, true);
        let best = configs.iter().map(value).fold(f64::INFINITY, f64::min);
        let priced = price_configurations(&inst, lambda).unwrap();
        prop_assert!((priced.value - best).abs() <= 1e-9);
        prop_assert!((value(&priced.config) - best).abs() <= 1e-9);

        let excluded: HashSet<Vec<u32>> = [priced.config.placement.clone()].into();
        let rest = configs
            .iter()
            .filter(|c| !excluded.contains(&c.placement))
            .map(value)
            .fold(f64::INFINITY, f64::min);
        match price_configurations_excluding(&inst, lambda, &excluded).unwrap() {
            Some(p) => {
                prop_assert!(!excluded.contains(&p.config.placement));
                prop_assert!((p.value - rest).abs() <= 1e-9);
            }
            None => prop_assert_eq!(configs.len(), 1),
        }
    }

    #[test]
    fn column_generation_bound_is_valid(seed in any::<u64>(), horizon in 1usize..=3) {
        let inst = tiny_instance(seed);
        let mut pool = ColumnPool::seeded(&inst).unwrap();
        let out = generate_columns(&inst, horizon, &mut pool, &[], None).unwrap();
        prop_assert!(out.converged);
        let (_, optimum) = instance_oracle(&inst, horizon, None, DEFAULT_ORACLE_BUDGET).unwrap();
        let bound = out.solution.unwrap().count_bound(horizon);
        prop_assert!(bound <= optimum as f64 + 1e-6);
    }

    #[test]
    fn direct_model_matches_oracle(seed in any::<u64>(), horizon in 1usize..=3, r in prop::option::of(0u32..=2)) {
        let inst = tiny_instance(seed);
        let (plan, count) = solve_awt_direct(&inst, horizon, r).unwrap();
        let (_, expected) = instance_oracle(&inst, horizon, r, DEFAULT_ORACLE_BUDGET).unwrap();
        prop_assert_eq!(count, expected);
        prop_assert!(validate_plan(&inst, &plan, horizon, r).is_ok());
    }

    #[test]
    fn hybrid_matches_oracle(seed in any::<u64>(), horizon in 1usize..=4, r in 0u32..=2) {
        let inst = tiny_instance(seed);
        let res = hybrid_solve(&inst, horizon, r, &HybridOptions::default()).unwrap();
        let (_, expected) = instance_oracle(&inst, horizon, Some(r), DEFAULT_ORACLE_BUDGET).unwrap();
        prop_assert!(res.stats.solved);
        prop_assert_eq!(res.objective(), expected);
        prop_assert!(validate_plan(&inst, res.plan(), horizon, Some(r)).is_ok());
        prop_assert!(res.stats.final_lower <= res.stats.final_upper);
    }

    #[test]
    fn greedy_never_beats_the_oracle(
        benefits in prop::collection::vec(prop::collection::vec(0i64..=3, 3), 1..=4),
        horizon in 1usize..=4,
    ) {
        let columns: Vec<Column> = benefits
            .iter()
            .enumerate()
            .map(|(j, b)| Column::new(vec![j as i64], ints(b)))
            .collect();
        let greedy = greedy_plan(&columns, horizon).unwrap();
        let exact = brute_force_tpfa(&columns, horizon, None, DEFAULT_ORACLE_BUDGET).unwrap();
        prop_assert!(greedy.objective >= exact.objective);
        prop_assert_eq!(greedy.sequence.len(), horizon);
    }

    #[test]
    fn range_is_permutation_invariant(mut y in prop::collection::vec(-50i64..50, 1..8), rot in 0usize..8) {
        let before = unfairness_range(&y).unwrap();
        prop_assert!(before >= 0);
        prop_assert_eq!(before == 0, y.iter().all(|&v| v == y[0]));
        let k = rot % y.len();
        y.rotate_left(k);
        y.reverse();
        prop_assert_eq!(unfairness_range(&y).unwrap(), before);
    }

    #[test]
    fn transitions_follow_l1_distance(
        x in prop::collection::vec(0u32..4, 4),
        y in prop::collection::vec(0u32..4, 4),
        r in 0u32..4,
    ) {
        let l1: u32 = x.iter().zip(&y).map(|(a, b)| a.abs_diff(*b)).sum();
        prop_assert_eq!(transition_ok(&x, &y, r).unwrap(), l1 <= 2 * r);
        prop_assert_eq!(transition_ok(&x, &y, r).unwrap(), transition_ok(&y, &x, r).unwrap());
        prop_assert!(transition_ok(&x, &x, 0).unwrap());
    }
}

#[test]
fn greedy_trap_is_strictly_worse() {
    let columns = fixtures::greedy_trap(Q::new(1, 10));
    let greedy = greedy_plan(&columns, 2).unwrap();
    let exact = brute_force_tpfa(&columns, 2, None, DEFAULT_ORACLE_BUDGET).unwrap();
    assert_eq!(exact.objective, Q::from_integer(0));
    assert!(greedy.objective > exact.objective);
}

#[test]
fn validator_rejects_long_moves() {
    let inst = fixtures::three_zone(vec![0, 2], 2);
    let a = Configuration::new(&inst, vec![2, 0, 0]).unwrap();
    let b = Configuration::new(&inst, vec![0, 0, 2]).unwrap();
    let plan = Plan::from_steps(vec![a, b]).unwrap();
    assert!(validate_plan(&inst, &plan, 2, Some(2)).is_ok());
    assert!(validate_plan(&inst, &plan, 2, Some(1)).is_err());
    assert!(validate_plan(&inst, &plan, 3, None).is_err());
}
