//! Hamiltonian paths of configuration graphs via dynamic programming over
//! remaining copy counts, collapsing the copies of each configuration.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::model::transition_ok;

pub const DEFAULT_STATE_BUDGET: u64 = 10_000_000;

/// An ordering of all `sum q` copies whose consecutive placements are within
/// `2r` moves, as a sequence of column indices, or `None` if there is none.
/// Fails up front when `k' * prod (q_j + 1)` exceeds `budget`.
pub fn hamiltonian_path<T>(
    multiplicities: &[u64],
    placements: &[Vec<T>],
    r: u32,
    budget: u64,
) -> Result<Option<Vec<usize>>>
where
    T: Copy + Into<i64>,
{
    let used: Vec<usize> = (0..multiplicities.len()).filter(|&j| multiplicities[j] > 0).collect();
    if used.is_empty() {
        return Ok(Some(Vec::new()));
    }
    let mut states: u128 = used.len() as u128;
    for &j in &used {
        states = states.saturating_mul(multiplicities[j] as u128 + 1);
    }
    if states > budget as u128 {
        return Err(Error::StateBudget { states, budget });
    }
    let k = used.len();
    let mut adjacent = vec![vec![false; k]; k];
    for a in 0..k {
        for b in 0..k {
            adjacent[a][b] = transition_ok(&placements[used[a]], &placements[used[b]], r)?;
        }
    }

    struct Search<'a> {
        adjacent: &'a [Vec<bool>],
        remaining: Vec<u64>,
        dead: HashSet<(Vec<u64>, usize)>,
        path: Vec<usize>,
    }
    impl Search<'_> {
        fn extend(&mut self, last: usize, left: u64) -> bool {
            if left == 0 {
                return true;
            }
            let key = (self.remaining.clone(), last);
            if self.dead.contains(&key) {
                return false;
            }
            for next in 0..self.remaining.len() {
                if self.remaining[next] > 0 && self.adjacent[last][next] {
                    self.remaining[next] -= 1;
                    self.path.push(next);
                    if self.extend(next, left - 1) {
                        return true;
                    }
                    self.path.pop();
                    self.remaining[next] += 1;
                }
            }
            self.dead.insert(key);
            false
        }
    }

    let total: u64 = used.iter().map(|&j| multiplicities[j]).sum();
    let mut search = Search {
        adjacent: &adjacent,
        remaining: used.iter().map(|&j| multiplicities[j]).collect(),
        dead: HashSet::new(),
        path: Vec::with_capacity(total as usize),
    };
    for start in 0..k {
        search.remaining[start] -= 1;
        search.path.push(start);
        if search.extend(start, total - 1) {
            let sequence: Vec<usize> = search.path.iter().map(|&a| used[a]).collect();
            for pair in sequence.windows(2) {
                if !transition_ok(&placements[pair[0]], &placements[pair[1]], r)? {
                    return Err(Error::SolverFailure {
                        iterations: 0,
                        log: "Hamiltonian path search produced an invalid ordering".into(),
                    });
                }
            }
            return Ok(Some(sequence));
        }
        search.path.pop();
        search.remaining[start] += 1;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn star_placements() -> Vec<Vec<i64>> {
        fixtures::star_columns().into_iter().map(|c| c.allocation).collect()
    }

    #[test]
    fn star_has_no_path() {
        let res = hamiltonian_path(&[1, 1, 1, 1], &star_placements(), 1, DEFAULT_STATE_BUDGET).unwrap();
        assert_eq!(res, None);
    }

    #[test]
    fn single_column_repeats() {
        let res = hamiltonian_path(&[0, 4, 0, 0], &star_placements(), 1, DEFAULT_STATE_BUDGET).unwrap();
        assert_eq!(res, Some(vec![1; 4]));
        let one = hamiltonian_path(&[0, 0, 1, 0], &star_placements(), 1, DEFAULT_STATE_BUDGET).unwrap();
        assert_eq!(one, Some(vec![2]));
    }

    #[test]
    fn center_copies_unlock_a_path() {
        // leaf, center, leaf, center, leaf
        let res = hamiltonian_path(&[2, 1, 1, 1], &star_placements(), 1, DEFAULT_STATE_BUDGET).unwrap();
        let seq = res.unwrap();
        assert_eq!(seq.len(), 5);
        assert_eq!(seq.iter().filter(|&&j| j == 0).count(), 2);
    }

    #[test]
    fn budget_is_checked_first() {
        let res = hamiltonian_path(&[9, 9, 9, 9], &star_placements(), 1, 100);
        assert!(matches!(res, Err(Error::StateBudget { .. })));
    }
}
