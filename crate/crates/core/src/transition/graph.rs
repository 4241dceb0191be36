//! Configuration graphs over placement multisets and their compact form.

use crate::error::Result;
use crate::model::transition_ok;

/// One vertex per copy of each used configuration; edges join copies whose
/// placements are within `2r` moves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigGraph {
    /// `(column, copy)` with copies numbered from 1.
    pub vertices: Vec<(usize, u64)>,
    pub adjacent: Vec<Vec<bool>>,
}

impl ConfigGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        let n = self.vertices.len();
        (0..n).map(|a| (a + 1..n).filter(|&b| self.adjacent[a][b]).count()).sum()
    }

    pub fn is_complete(&self) -> bool {
        let n = self.vertices.len();
        self.edge_count() == n * n.saturating_sub(1) / 2
    }

    /// The center of a star (one vertex joined to all others, no other
    /// edges), if the graph is one.
    pub fn star_center(&self) -> Option<usize> {
        let n = self.vertices.len();
        if n < 3 {
            return None;
        }
        let degree = |a: usize| (0..n).filter(|&b| self.adjacent[a][b]).count();
        let center = (0..n).find(|&a| degree(a) == n - 1)?;
        (0..n)
            .filter(|&a| a != center)
            .all(|a| degree(a) == 1)
            .then_some(center)
    }

    /// Vertex indices visited by a sequence of column indices, assigning
    /// copies in order of appearance.
    pub fn path_vertices(&self, sequence: &[usize]) -> Option<Vec<usize>> {
        let mut seen = std::collections::HashMap::<usize, u64>::new();
        sequence
            .iter()
            .map(|&j| {
                let copy = seen.entry(j).or_insert(0);
                *copy += 1;
                self.vertices.iter().position(|&v| v == (j, *copy))
            })
            .collect()
    }
}

pub fn build_cg<T>(multiplicities: &[u64], placements: &[Vec<T>], r: u32) -> Result<ConfigGraph>
where
    T: Copy + Into<i64>,
{
    let vertices: Vec<(usize, u64)> = multiplicities
        .iter()
        .enumerate()
        .flat_map(|(j, &q)| (1..=q).map(move |c| (j, c)))
        .collect();
    let n = vertices.len();
    let mut adjacent = vec![vec![false; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let ok = transition_ok(&placements[vertices[a].0], &placements[vertices[b].0], r)?;
            adjacent[a][b] = ok;
            adjacent[b][a] = ok;
        }
    }
    Ok(ConfigGraph { vertices, adjacent })
}

/// One vertex per distinct configuration of a support set; every vertex has
/// a self-loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompactConfigGraph {
    /// Column indices of the support, in order.
    pub columns: Vec<usize>,
    pub adjacent: Vec<Vec<bool>>,
}

impl CompactConfigGraph {
    pub fn new<T>(columns: Vec<usize>, placements: &[Vec<T>], r: u32) -> Result<Self>
    where
        T: Copy + Into<i64>,
    {
        let k = columns.len();
        let mut adjacent = vec![vec![true; k]; k];
        for a in 0..k {
            for b in a + 1..k {
                let ok = transition_ok(&placements[columns[a]], &placements[columns[b]], r)?;
                adjacent[a][b] = ok;
                adjacent[b][a] = ok;
            }
        }
        Ok(CompactConfigGraph { columns, adjacent })
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// Deterministic automaton over symbols `1..=k` whose words are exactly the
/// walks of a compact configuration graph. State 0 is the start state;
/// state `s > 0` means the last symbol read was `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkAutomaton {
    pub symbols: usize,
    /// `delta[state][symbol - 1]`.
    pub delta: Vec<Vec<Option<usize>>>,
}

impl WalkAutomaton {
    pub fn from_ccg(ccg: &CompactConfigGraph) -> Self {
        let k = ccg.len();
        let mut delta = vec![vec![None; k]; k + 1];
        for s in 1..=k {
            delta[0][s - 1] = Some(s);
        }
        for u in 1..=k {
            for v in 1..=k {
                if ccg.adjacent[u - 1][v - 1] {
                    delta[u][v - 1] = Some(v);
                }
            }
        }
        WalkAutomaton { symbols: k, delta }
    }

    pub fn step(&self, state: usize, symbol: usize) -> Option<usize> {
        if symbol == 0 || symbol > self.symbols {
            return None;
        }
        self.delta.get(state)?[symbol - 1]
    }

    /// Accepts nonempty words ending in a non-start state.
    pub fn accepts(&self, word: &[usize]) -> bool {
        let mut state = 0;
        for &s in word {
            match self.step(state, s) {
                Some(next) => state = next,
                None => return false,
            }
        }
        state != 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn star_placements() -> Vec<Vec<i64>> {
        fixtures::star_columns().into_iter().map(|c| c.allocation).collect()
    }

    #[test]
    fn distinct_copies_form_a_star() {
        let cg = build_cg(&[1, 1, 1, 1], &star_placements(), 1).unwrap();
        assert_eq!(cg.vertex_count(), 4);
        assert_eq!(cg.star_center(), Some(0));
        assert!(!cg.is_complete());
    }

    #[test]
    fn repeated_column_is_complete() {
        let placements = star_placements();
        for j in 0..4 {
            let mut q = vec![0; 4];
            q[j] = 4;
            let cg = build_cg(&q, &placements, 1).unwrap();
            assert!(cg.is_complete());
            assert_eq!(cg.vertex_count(), 4);
        }
    }

    #[test]
    fn automaton_accepts_walks_only() {
        let ccg = CompactConfigGraph::new(vec![0, 1, 2, 3], &star_placements(), 1).unwrap();
        let a = WalkAutomaton::from_ccg(&ccg);
        assert!(a.accepts(&[1, 2, 2, 1, 3]));
        assert!(!a.accepts(&[2, 3]));
        assert!(!a.accepts(&[]));
        for state in 0..=4 {
            assert_eq!(a.delta[state].len(), 4);
        }
    }
}
