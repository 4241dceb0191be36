//! Abstract allocation problems: allocation sets, linear benefits and the
//! inefficiency normalization.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::Q;

/// A candidate allocation with its per-stakeholder benefit vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Column {
    pub allocation: Vec<i64>,
    pub benefit: Vec<Q>,
}

impl Column {
    pub fn new(allocation: Vec<i64>, benefit: Vec<Q>) -> Self {
        Column {
            allocation,
            benefit,
        }
    }

    pub fn total_benefit(&self) -> Q {
        self.benefit.iter().sum()
    }
}

/// Benefit `[tau(x)]_i = sum_j matrix[i][j] * x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBenefit {
    pub matrix: Vec<Vec<Q>>,
}

impl LinearBenefit {
    pub fn new(matrix: Vec<Vec<Q>>) -> Result<Self> {
        let dim = matrix.first().map_or(0, Vec::len);
        if matrix.is_empty() || dim == 0 || matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::Domain("benefit matrix must be rectangular and nonempty".into()));
        }
        Ok(LinearBenefit { matrix })
    }

    /// `tau_i x_i` with one rate per stakeholder.
    pub fn diagonal(rates: &[Q]) -> Self {
        let n = rates.len();
        let matrix = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { rates[i] } else { Q::zero() })
                    .collect()
            })
            .collect();
        LinearBenefit { matrix }
    }

    pub fn stakeholders(&self) -> usize {
        self.matrix.len()
    }

    pub fn dim(&self) -> usize {
        self.matrix[0].len()
    }

    pub fn apply(&self, x: &[Q]) -> Vec<Q> {
        self.matrix
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Contribution of one unit of `x_j` to the total benefit.
    fn column_sums(&self) -> Vec<Q> {
        (0..self.dim())
            .map(|j| self.matrix.iter().map(|row| row[j]).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AllocationSet {
    /// An explicit list of allocation vectors.
    Finite(Vec<Vec<Q>>),
    /// `{x in Z^d : x >= 0, min_total <= sum x <= cap}`.
    IntegerSimplex { min_total: u64, cap: u64 },
    /// `{x in R^d : x >= 0, sum x <= cap, ||x||_0 <= sparsity}`.
    SparseSimplex { cap: Q, sparsity: usize },
    /// `{x in R^d : x >= 0, sum x = 1}`.
    ContinuousSimplex,
}

/// Allocation set plus linear benefit and an inefficiency cap.
#[derive(Debug, Clone, PartialEq)]
pub struct GenericAllocationProblem {
    pub set: AllocationSet,
    pub benefit: LinearBenefit,
    pub eta_cap: Q,
}

impl GenericAllocationProblem {
    pub fn new(set: AllocationSet, benefit: LinearBenefit, eta_cap: Q) -> Result<Self> {
        if eta_cap.is_negative() || eta_cap > Q::from_integer(1) {
            return Err(Error::Domain("inefficiency cap must lie in [0, 1]".into()));
        }
        if let AllocationSet::Finite(points) = &set {
            if points.is_empty() {
                return Err(Error::Infeasible("empty allocation set".into()));
            }
            if points.iter().any(|p| p.len() != benefit.dim()) {
                return Err(Error::Domain("allocation and benefit dimensions differ".into()));
            }
        }
        if let AllocationSet::IntegerSimplex { min_total, cap } = set {
            if min_total > cap {
                return Err(Error::Infeasible("min_total exceeds cap".into()));
            }
        }
        Ok(GenericAllocationProblem {
            set,
            benefit,
            eta_cap,
        })
    }

    /// `(f_lower, f_upper)`: infimum and supremum of the total benefit over
    /// the allocation set.
    pub fn benefit_bounds(&self) -> (Q, Q) {
        let sums = self.benefit.column_sums();
        let best = sums.iter().copied().max().unwrap_or_else(Q::zero);
        let worst = sums.iter().copied().min().unwrap_or_else(Q::zero);
        match &self.set {
            AllocationSet::Finite(points) => {
                let totals: Vec<Q> = points
                    .iter()
                    .map(|p| self.benefit.apply(p).iter().sum())
                    .collect();
                let lo = totals.iter().copied().min().expect("nonempty");
                let hi = totals.iter().copied().max().expect("nonempty");
                (lo, hi)
            }
            AllocationSet::IntegerSimplex { min_total, cap } => {
                let (lo_t, hi_t) = (Q::from_integer(*min_total as i128), Q::from_integer(*cap as i128));
                let hi = if best.is_negative() { best * lo_t } else { best * hi_t };
                let lo = if worst.is_negative() { worst * hi_t } else { worst * lo_t };
                (lo, hi)
            }
            AllocationSet::SparseSimplex { cap, .. } => {
                let hi = if best.is_negative() { Q::zero() } else { best * cap };
                let lo = if worst.is_negative() { worst * cap } else { Q::zero() };
                (lo, hi)
            }
            AllocationSet::ContinuousSimplex => (worst, best),
        }
    }

    pub fn inefficiency(&self, x: &[Q]) -> Result<Q> {
        if x.len() != self.benefit.dim() {
            return Err(Error::Domain("allocation has the wrong dimension".into()));
        }
        let total: Q = self.benefit.apply(x).iter().sum();
        inefficiency_of_total(total, self.benefit_bounds())
    }

    /// Enumerates the admissible allocations (inefficiency within the cap) of
    /// a finite or integer allocation set as benefit columns.
    pub fn columns(&self) -> Result<Vec<Column>> {
        let points: Vec<Vec<Q>> = match &self.set {
            AllocationSet::Finite(points) => points.clone(),
            AllocationSet::IntegerSimplex { min_total, cap } => {
                let mut out = Vec::new();
                let mut cur = vec![0i64; self.benefit.dim()];
                integer_points(&mut cur, 0, 0, *min_total as i64, *cap as i64, &mut out);
                out.into_iter()
                    .map(|p| p.into_iter().map(|v| Q::from_integer(v as i128)).collect())
                    .collect()
            }
            _ => {
                return Err(Error::Domain(
                    "only finite and integer allocation sets can be enumerated".into(),
                ))
            }
        };
        let bounds = self.benefit_bounds();
        let mut out = Vec::new();
        for p in points {
            let benefit = self.benefit.apply(&p);
            let total: Q = benefit.iter().sum();
            if inefficiency_of_total(total, bounds)? <= self.eta_cap {
                let allocation = p
                    .iter()
                    .map(|v| {
                        if v.is_integer() {
                            Ok(v.to_integer() as i64)
                        } else {
                            Err(Error::Domain("finite allocations must be integral".into()))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                out.push(Column::new(allocation, benefit));
            }
        }
        if out.is_empty() {
            return Err(Error::Infeasible("no allocation meets the inefficiency cap".into()));
        }
        Ok(out)
    }
}

fn integer_points(cur: &mut Vec<i64>, idx: usize, sum: i64, lo: i64, hi: i64, out: &mut Vec<Vec<i64>>) {
    if idx == cur.len() {
        if sum >= lo {
            out.push(cur.clone());
        }
        return;
    }
    for v in 0..=(hi - sum) {
        cur[idx] = v;
        integer_points(cur, idx + 1, sum + v, lo, hi, out);
    }
    cur[idx] = 0;
}

/// `(f_upper - total) / (f_upper - f_lower)`, or 0 when the bounds coincide.
pub fn inefficiency_of_total(total: Q, (lower, upper): (Q, Q)) -> Result<Q> {
    if total < lower || total > upper {
        return Err(Error::InconsistentBounds {
            total: total.to_string(),
            lower: lower.to_string(),
            upper: upper.to_string(),
        });
    }
    if upper == lower {
        return Ok(Q::zero());
    }
    Ok((upper - total) / (upper - lower))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i128, d: i128) -> Q {
        Q::new(n, d)
    }

    fn ints(v: &[i128]) -> Vec<Q> {
        v.iter().map(|&x| Q::from_integer(x)).collect()
    }

    /// Three stakeholders where the first shares half of every other unit.
    fn fair_eff() -> GenericAllocationProblem {
        let half = q(1, 2);
        let one = q(1, 1);
        let zero = q(0, 1);
        let benefit = LinearBenefit::new(vec![
            vec![one, half, half],
            vec![half, one, zero],
            vec![half, zero, one],
        ])
        .unwrap();
        GenericAllocationProblem::new(
            AllocationSet::IntegerSimplex {
                min_total: 1,
                cap: 3,
            },
            benefit,
            q(1, 1),
        )
        .unwrap()
    }

    #[test]
    fn fair_eff_inefficiency() {
        let p = fair_eff();
        assert_eq!(p.benefit_bounds(), (q(3, 2), q(6, 1)));
        assert_eq!(p.inefficiency(&ints(&[0, 1, 1])).unwrap(), q(2, 3));
        assert_eq!(p.inefficiency(&ints(&[3, 0, 0])).unwrap(), q(0, 1));
        assert_eq!(p.benefit.apply(&ints(&[0, 1, 1])), ints(&[1, 1, 1]));
    }

    #[test]
    fn paired_stakeholders_inefficiency() {
        let one = q(1, 1);
        let zero = q(0, 1);
        let benefit = LinearBenefit::new(vec![
            vec![one, one, zero, zero],
            vec![one, one, zero, zero],
            vec![zero, zero, one, one],
            vec![zero, zero, one, one],
        ])
        .unwrap();
        let p = GenericAllocationProblem::new(
            AllocationSet::IntegerSimplex {
                min_total: 1,
                cap: 3,
            },
            benefit,
            one,
        )
        .unwrap();
        assert_eq!(p.inefficiency(&ints(&[1, 0, 1, 0])).unwrap(), q(1, 2));
        assert_eq!(p.inefficiency(&ints(&[3, 0, 0, 0])).unwrap(), q(0, 1));
        assert_eq!(p.inefficiency(&ints(&[0, 0, 0, 3])).unwrap(), q(0, 1));
    }

    #[test]
    fn totals_outside_bounds_are_rejected() {
        let p = fair_eff();
        // Six units exceed the cap, so the total benefit exceeds f_upper.
        assert!(matches!(
            p.inefficiency(&ints(&[6, 0, 0])),
            Err(Error::InconsistentBounds { .. })
        ));
    }

    #[test]
    fn degenerate_bounds_give_zero() {
        assert_eq!(
            inefficiency_of_total(q(2, 1), (q(2, 1), q(2, 1))).unwrap(),
            q(0, 1)
        );
    }

    #[test]
    fn eta_cap_filters_columns() {
        let mut p = fair_eff();
        p.eta_cap = q(0, 1);
        let cols = p.columns().unwrap();
        assert_eq!(cols.len(), 1);
        assert_eq!(cols[0].allocation, vec![3, 0, 0]);
        assert_eq!(cols[0].benefit, vec![q(3, 1), q(3, 2), q(3, 2)]);
    }

    #[test]
    fn continuous_simplex_bounds() {
        let p = GenericAllocationProblem::new(
            AllocationSet::ContinuousSimplex,
            LinearBenefit::diagonal(&ints(&[2, 1])),
            q(1, 1),
        )
        .unwrap();
        assert_eq!(p.benefit_bounds(), (q(1, 1), q(2, 1)));
    }
}
