//! Depth-first branch-and-bound over length-`T` words of a walk automaton,
//! minimizing the range of per-zone coverage counts.

use std::collections::HashSet;
use std::time::Instant;

use super::graph::WalkAutomaton;

pub const DEFAULT_CP_NODE_BUDGET: u64 = 20_000_000;

/// Search input. Symbols are local indices `0..k` into `coverage`; the
/// automaton numbers them from 1.
#[derive(Debug, Clone)]
pub struct CpProblem<'a> {
    pub automaton: &'a WalkAutomaton,
    /// Coverage vector of each symbol.
    pub coverage: &'a [Vec<u8>],
    pub horizon: usize,
    /// Known lower bound on the objective; reaching it stops the search.
    pub lower: u64,
    /// Only words with objective strictly below this are of interest.
    pub upper: Option<u64>,
    /// Symbol sets that may not fill all `T` positions.
    pub excluded: &'a [Vec<usize>],
    pub node_budget: u64,
    pub deadline: Option<Instant>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpOutcome {
    /// Best word found (local symbol indices) and its objective.
    pub best: Option<(Vec<usize>, u64)>,
    /// False when a budget stopped the search before it was exhausted.
    pub complete: bool,
    pub nodes: u64,
}

struct Search<'a> {
    automaton: &'a WalkAutomaton,
    /// Coverage by symbol, over distinct zone patterns.
    cover: Vec<Vec<i64>>,
    /// `spread[a][b]`: the least one step can add to `c_a - c_b`.
    spread: Vec<Vec<i64>>,
    horizon: usize,
    lower: u64,
    cutoff: u64,
    excluded: Vec<Vec<bool>>,
    node_budget: u64,
    deadline: Option<Instant>,
    nodes: u64,
    aborted: bool,
    counts: Vec<i64>,
    uses: Vec<u16>,
    word: Vec<usize>,
    best: Option<(Vec<usize>, u64)>,
    dead: HashSet<(Vec<u16>, usize)>,
}

impl Search<'_> {
    fn bound(&self, remaining: i64) -> i64 {
        let p = self.counts.len();
        let mut best = 0;
        for a in 0..p {
            for b in 0..p {
                let v = self.counts[a] - self.counts[b] + remaining * self.spread[a][b];
                best = best.max(v);
            }
        }
        best
    }

    fn range(&self) -> u64 {
        let max = self.counts.iter().max().copied().unwrap_or(0);
        let min = self.counts.iter().min().copied().unwrap_or(0);
        (max - min) as u64
    }

    fn done(&self) -> bool {
        self.aborted || self.best.as_ref().is_some_and(|(_, v)| *v <= self.lower)
    }

    fn apply(&mut self, symbol: usize, sign: i64) {
        for (c, &t) in self.counts.iter_mut().zip(&self.cover[symbol]) {
            *c += sign * t;
        }
    }

    fn go(&mut self, state: usize) {
        self.nodes += 1;
        if self.nodes > self.node_budget
            || (self.nodes % 4096 == 0 && self.deadline.is_some_and(|d| Instant::now() >= d))
        {
            self.aborted = true;
            return;
        }
        let depth = self.word.len();
        if depth == self.horizon {
            let value = self.range();
            let allowed = self.excluded.iter().all(|set| {
                let inside: usize = self.word.iter().filter(|&&s| set[s]).count();
                inside < self.horizon
            });
            if allowed && value < self.cutoff {
                self.cutoff = value;
                self.best = Some((self.word.clone(), value));
            }
            return;
        }
        let remaining = (self.horizon - depth) as i64;
        if self.bound(remaining) >= self.cutoff.min(i64::MAX as u64) as i64 {
            return;
        }
        let key = (self.uses.clone(), state);
        if self.dead.contains(&key) {
            return;
        }

        // Prefer symbols covering the zones that lag behind the most.
        let top = self.counts.iter().max().copied().unwrap_or(0);
        let mut choices: Vec<(i64, usize)> = (1..=self.automaton.symbols)
            .filter(|&s| self.automaton.step(state, s).is_some())
            .map(|s| {
                let deficit: i64 = self.cover[s - 1]
                    .iter()
                    .zip(&self.counts)
                    .map(|(&t, &c)| t * (top - c))
                    .sum();
                (-deficit, s - 1)
            })
            .collect();
        choices.sort_unstable();

        for (_, symbol) in choices {
            self.apply(symbol, 1);
            self.uses[symbol] += 1;
            self.word.push(symbol);
            self.go(symbol + 1);
            self.word.pop();
            self.uses[symbol] -= 1;
            self.apply(symbol, -1);
            if self.done() {
                return;
            }
        }
        // Fully explored under the current cutoff; cutoffs only decrease.
        self.dead.insert(key);
    }
}

/// Finds the word with the least coverage range below `upper`, stopping as
/// soon as the range equals `lower`.
pub fn cp_walk_search(p: &CpProblem) -> CpOutcome {
    let k = p.coverage.len();
    if k == 0 || p.horizon == 0 || p.upper.is_some_and(|u| u <= p.lower) {
        return CpOutcome {
            best: None,
            complete: true,
            nodes: 0,
        };
    }
    // Zones with identical coverage across all symbols always have equal
    // counts, so one representative per pattern suffices.
    let zones = p.coverage[0].len();
    let mut patterns: Vec<Vec<i64>> = (0..zones)
        .map(|i| p.coverage.iter().map(|c| c[i] as i64).collect())
        .collect();
    patterns.sort();
    patterns.dedup();
    let cover: Vec<Vec<i64>> = (0..k)
        .map(|s| patterns.iter().map(|row| row[s]).collect())
        .collect();
    let np = patterns.len();
    let spread: Vec<Vec<i64>> = (0..np)
        .map(|a| {
            (0..np)
                .map(|b| (0..k).map(|s| patterns[a][s] - patterns[b][s]).min().unwrap_or(0))
                .collect()
        })
        .collect();
    let excluded = p
        .excluded
        .iter()
        .map(|set| {
            let mut mask = vec![false; k];
            for &s in set {
                if s < k {
                    mask[s] = true;
                }
            }
            mask
        })
        .collect();
    let mut search = Search {
        automaton: p.automaton,
        cover,
        spread,
        horizon: p.horizon,
        lower: p.lower,
        cutoff: p.upper.unwrap_or(u64::MAX),
        excluded,
        node_budget: p.node_budget,
        deadline: p.deadline,
        nodes: 0,
        aborted: false,
        counts: vec![0; np],
        uses: vec![0; k],
        word: Vec::with_capacity(p.horizon),
        best: None,
        dead: HashSet::new(),
    };
    search.go(0);
    CpOutcome {
        complete: !search.aborted,
        best: search.best,
        nodes: search.nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::transition::graph::CompactConfigGraph;

    fn problem<'a>(
        automaton: &'a WalkAutomaton,
        coverage: &'a [Vec<u8>],
        horizon: usize,
        upper: Option<u64>,
        excluded: &'a [Vec<usize>],
    ) -> CpProblem<'a> {
        CpProblem {
            automaton,
            coverage,
            horizon,
            lower: 0,
            upper,
            excluded,
            node_budget: DEFAULT_CP_NODE_BUDGET,
            deadline: None,
        }
    }

    #[test]
    fn alternating_word_is_perfectly_fair() {
        let coverage = vec![vec![1, 1, 0], vec![0, 0, 1]];
        let ccg = CompactConfigGraph::new(vec![0, 1], &[vec![1i64, 0], vec![0, 1]], 5).unwrap();
        let a = WalkAutomaton::from_ccg(&ccg);
        let out = cp_walk_search(&problem(&a, &coverage, 4, None, &[]));
        assert!(out.complete);
        let (word, value) = out.best.unwrap();
        assert_eq!(value, 0);
        assert_eq!(word.iter().filter(|&&s| s == 0).count(), 2);
    }

    #[test]
    fn isolated_vertices_allow_constant_words_only() {
        let coverage = vec![vec![1, 0], vec![0, 1]];
        let ccg = CompactConfigGraph::new(vec![0, 1], &[vec![5i64, 0], vec![0, 5]], 1).unwrap();
        let a = WalkAutomaton::from_ccg(&ccg);
        let out = cp_walk_search(&problem(&a, &coverage, 4, None, &[]));
        let (word, value) = out.best.unwrap();
        assert_eq!(value, 4);
        assert!(word.iter().all(|&s| s == word[0]));
    }

    #[test]
    fn star_support_cannot_be_perfectly_fair() {
        let cols = fixtures::star_columns();
        let placements: Vec<Vec<i64>> = cols.iter().map(|c| c.allocation.clone()).collect();
        let coverage: Vec<Vec<u8>> = cols
            .iter()
            .map(|c| c.benefit.iter().map(|b| b.to_integer() as u8).collect())
            .collect();
        let ccg = CompactConfigGraph::new(vec![0, 1, 2, 3], &placements, 1).unwrap();
        let a = WalkAutomaton::from_ccg(&ccg);
        // Range 0 needs each column once, which no walk achieves.
        let out = cp_walk_search(&problem(&a, &coverage, 4, Some(1), &[]));
        assert!(out.complete);
        assert_eq!(out.best, None);
        let out = cp_walk_search(&problem(&a, &coverage, 4, None, &[]));
        assert_eq!(out.best.unwrap().1, 2);
    }

    #[test]
    fn excluded_sets_must_not_fill_the_word() {
        let coverage = vec![vec![1, 0], vec![0, 1]];
        let ccg = CompactConfigGraph::new(vec![0, 1], &[vec![1i64, 0], vec![0, 1]], 1).unwrap();
        let a = WalkAutomaton::from_ccg(&ccg);
        let out = cp_walk_search(&problem(&a, &coverage, 3, None, &[vec![0]]));
        let (word, _) = out.best.unwrap();
        assert!(word.contains(&1));
    }

    #[test]
    fn budget_marks_incomplete() {
        let coverage = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        let ccg = CompactConfigGraph::new(vec![0, 1, 2], &[vec![1i64], vec![1], vec![1]], 0).unwrap();
        let a = WalkAutomaton::from_ccg(&ccg);
        let mut p = problem(&a, &coverage, 10, None, &[]);
        p.node_budget = 3;
        let out = cp_walk_search(&p);
        assert!(!out.complete);
    }
}
