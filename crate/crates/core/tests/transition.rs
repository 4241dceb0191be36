use fairhorizon::fixtures;
use fairhorizon::transition::{
    build_cg, cp_walk_search, hamiltonian_path, CompactConfigGraph, ConfigGraph, CpProblem, WalkAutomaton,
    DEFAULT_STATE_BUDGET,
};
use fairhorizon::transition_ok;
use proptest::prelude::*;

fn star_placements() -> Vec<Vec<i64>> {
    fixtures::star_columns().into_iter().map(|c| c.allocation).collect()
}

/// Whether some ordering of all vertices is a path, by trying every ordering.
fn path_by_permutation(g: &ConfigGraph) -> bool {
    fn rec(g: &ConfigGraph, last: Option<usize>, used: &mut Vec<bool>, left: usize) -> bool {
        if left == 0 {
            return true;
        }
        for v in 0..used.len() {
            if used[v] || last.is_some_and(|u| !g.adjacent[u][v]) {
                continue;
            }
            used[v] = true;
            let found = rec(g, Some(v), used, left - 1);
            used[v] = false;
            if found {
                return true;
            }
        }
        false
    }
    let n = g.vertex_count();
    rec(g, None, &mut vec![false; n], n)
}

fn check_ordering(q: &[u64], placements: &[Vec<i64>], r: u32, seq: &[usize]) {
    let mut counts = vec![0u64; q.len()];
    for &j in seq {
        counts[j] += 1;
    }
    assert_eq!(counts, q);
    for w in seq.windows(2) {
        assert!(transition_ok(&placements[w[0]], &placements[w[1]], r).unwrap());
    }
}

/// Every multiplicity vector over `k` columns with total in 1..=max_total.
fn multiplicities(k: usize, max_total: u64) -> Vec<Vec<u64>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p: Vec<u64>| {
                let used: u64 = p.iter().sum();
                (0..=max_total - used).map(move |v| {
                    let mut next = p.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    out.retain(|q| q.iter().sum::<u64>() > 0);
    out
}

#[test]
fn star_example_has_no_path() {
    let placements = star_placements();
    let g = build_cg(&[1, 1, 1, 1], &placements, 1).unwrap();
    assert_eq!(g.star_center(), Some(0));
    assert_eq!(g.edge_count(), 3);
    assert_eq!(hamiltonian_path(&[1, 1, 1, 1], &placements, 1, DEFAULT_STATE_BUDGET).unwrap(), None);
}

#[test]
fn single_column_alternatives_are_complete() {
    let placements = star_placements();
    for j in 0..4 {
        let mut q = vec![0; 4];
        q[j] = 4;
        let g = build_cg(&q, &placements, 1).unwrap();
        assert!(g.is_complete());
        assert_eq!(g.vertex_count(), 4);
        let seq = hamiltonian_path(&q, &placements, 1, DEFAULT_STATE_BUDGET).unwrap().unwrap();
        check_ordering(&q, &placements, 1, &seq);
    }
}

#[test]
fn path_dp_matches_permutations_on_star() {
    let placements = star_placements();
    for q in multiplicities(4, 5) {
        let g = build_cg(&q, &placements, 1).unwrap();
        let dp = hamiltonian_path(&q, &placements, 1, DEFAULT_STATE_BUDGET).unwrap();
        assert_eq!(dp.is_some(), path_by_permutation(&g), "q = {q:?}");
        if let Some(seq) = dp {
            check_ordering(&q, &placements, 1, &seq);
        }
    }
}

fn placement_sets() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1usize..=4).prop_flat_map(|k| prop::collection::vec(prop::collection::vec(0i64..=2, 3), k))
}

proptest! {
    #[test]
    fn path_dp_matches_permutations(placements in placement_sets(), r in 0u32..=2) {
        for q in multiplicities(placements.len(), 5) {
            let g = build_cg(&q, &placements, r).unwrap();
            let dp = hamiltonian_path(&q, &placements, r, DEFAULT_STATE_BUDGET).unwrap();
            prop_assert_eq!(dp.is_some(), path_by_permutation(&g), "q = {:?}", q);
            if let Some(seq) = dp {
                check_ordering(&q, &placements, r, &seq);
            }
        }
    }

    /// Accepted words are exactly the transition-feasible sequences.
    #[test]
    fn automaton_accepts_feasible_walks(
        placements in placement_sets(),
        r in 0u32..=2,
        word in prop::collection::vec(0usize..4, 1..=6),
    ) {
        let k = placements.len();
        let ccg = CompactConfigGraph::new((0..k).collect(), &placements, r).unwrap();
        let automaton = WalkAutomaton::from_ccg(&ccg);
        let word: Vec<usize> = word.into_iter().map(|s| s % k).collect();
        let symbols: Vec<usize> = word.iter().map(|s| s + 1).collect();
        let feasible = word
            .windows(2)
            .all(|w| transition_ok(&placements[w[0]], &placements[w[1]], r).unwrap());
        prop_assert_eq!(automaton.accepts(&symbols), feasible);
    }

    /// The walk search finds the best accepted word and never returns a
    /// word that fills an excluded set.
    #[test]
    fn walk_search_matches_enumeration(
        placements in placement_sets(),
        coverage in prop::collection::vec(prop::collection::vec(0u8..=1, 4), 4),
        r in 0u32..=1,
        horizon in 1usize..=5,
        exclude_first in any::<bool>(),
    ) {
        let k = placements.len();
        let coverage = &coverage[..k];
        let ccg = CompactConfigGraph::new((0..k).collect(), &placements, r).unwrap();
        let automaton = WalkAutomaton::from_ccg(&ccg);
        let excluded: Vec<Vec<usize>> = if exclude_first { vec![vec![0]] } else { vec![] };
        let objective = |word: &[usize]| -> u64 {
            let counts: Vec<u64> = (0..4).map(|i| word.iter().map(|&s| coverage[s][i] as u64).sum()).collect();
            counts.iter().max().unwrap() - counts.iter().min().unwrap()
        };

        let mut best: Option<u64> = None;
        let total = k.pow(horizon as u32);
        for code in 0..total {
            let word: Vec<usize> = (0..horizon).map(|t| code / k.pow(t as u32) % k).collect();
            let symbols: Vec<usize> = word.iter().map(|s| s + 1).collect();
            if !automaton.accepts(&symbols) || excluded.iter().any(|set| word.iter().all(|s| set.contains(s))) {
                continue;
            }
            let v = objective(&word);
            best = Some(best.map_or(v, |b| b.min(v)));
        }

        let out = cp_walk_search(&CpProblem {
            automaton: &automaton,
            coverage,
            horizon,
            lower: 0,
            upper: None,
            excluded: &excluded,
            node_budget: 1_000_000,
            deadline: None,
        });
        prop_assert!(out.complete);
        prop_assert_eq!(out.best.as_ref().map(|(_, v)| *v), best);
        if let Some((word, v)) = &out.best {
            prop_assert_eq!(word.len(), horizon);
            let symbols: Vec<usize> = word.iter().map(|s| s + 1).collect();
            prop_assert!(automaton.accepts(&symbols));
            prop_assert_eq!(objective(word), *v);
            for set in &excluded {
                prop_assert!(!word.iter().all(|s| set.contains(s)));
            }
        }
    }
}
