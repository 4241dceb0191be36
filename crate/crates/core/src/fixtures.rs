//! Small reference problems shared by the test suites and the CLI.

use crate::allocation::Column;
use crate::model::Instance;
use crate::Q;

fn ints(v: &[i128]) -> Vec<Q> {
    v.iter().map(|&x| Q::from_integer(x)).collect()
}

/// Three zones; zones 0 and 1 are reached from zone 0, zone 2 only from
/// itself. Demands are `(1, 1, 2)`.
pub fn three_zone(bases: Vec<usize>, fleet: u32) -> Instance {
    Instance {
        n: 3,
        bases,
        reach: vec![vec![1, 0, 0], vec![1, 0, 0], vec![0, 0, 1]],
        demand: vec![1, 1, 2],
        fleet,
        coverage_floor: 0.0,
        transition_limit: 1,
        horizon: 1,
    }
}

/// One resource, two stakeholders, benefits `(2 x_1, x_2)`.
pub fn two_rates() -> Vec<Column> {
    vec![
        Column::new(vec![1, 0], ints(&[2, 0])),
        Column::new(vec![0, 1], ints(&[0, 1])),
    ]
}

/// One resource among three options: the first gives `eps` to stakeholder 0,
/// the others give a full unit to stakeholders 1 or 2 and half a unit to 0.
pub fn greedy_trap(eps: Q) -> Vec<Column> {
    let half = Q::new(1, 2);
    let zero = Q::from_integer(0);
    let one = Q::from_integer(1);
    vec![
        Column::new(vec![1, 0, 0], vec![eps, zero, zero]),
        Column::new(vec![0, 1, 0], vec![half, one, zero]),
        Column::new(vec![0, 0, 1], vec![half, zero, one]),
    ]
}

/// Placements whose pairwise transition graph at `r = 1` is a star centered
/// on the first one. Column `j` covers every zone but `j`, so the only
/// perfectly fair mix of four periods uses each column once.
pub fn star_columns() -> Vec<Column> {
    let placements = [[3, 3, 3, 3], [4, 2, 3, 3], [2, 4, 3, 3], [3, 3, 2, 4]];
    placements
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let benefit = (0..4).map(|i| Q::from_integer(i128::from(i != j))).collect();
            Column::new(p.to_vec(), benefit)
        })
        .collect()
}

/// Two options with cross-benefits 15/47 and 15/37.
pub fn delayed_fairness() -> Vec<Column> {
    vec![
        Column::new(vec![1, 0], vec![Q::from_integer(1), Q::new(15, 47)]),
        Column::new(vec![0, 1], vec![Q::new(15, 37), Q::from_integer(1)]),
    ]
}
