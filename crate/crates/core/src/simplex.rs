//! Dense revised simplex with two-phase start and dual extraction.
//!
//! The program is brought to standard form `min c'x, Ax = b, x >= 0, b >= 0`
//! by shifting finite lower bounds, mirroring variables that only have an
//! upper bound, splitting free variables and turning finite upper bounds into
//! rows. Slack columns start basic on `<=` rows, artificial columns on the
//! others. The basis inverse is kept explicitly and refactorized periodically.
//!
//! Pricing is Dantzig's rule; after `2 * (rows + cols)` consecutive degenerate
//! pivots the solver switches to Bland's rule for the rest of the solve.

use crate::error::{Error, Result};

pub const FEASIBILITY_TOL: f64 = 1e-8;
pub const REDUCED_COST_TOL: f64 = 1e-9;
pub const DUALITY_GAP_TOL: f64 = 1e-6;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub kind: RowKind,
    pub rhs: f64,
}

/// `opt c'x` subject to rows and per-variable bounds (default `[0, inf)`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            constraints: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    /// Adds a row and returns its index.
    pub fn add_constraint(&mut self, coeffs: Vec<f64>, kind: RowKind, rhs: f64) -> usize {
        self.constraints.push(Constraint { coeffs, kind, rhs });
        self.constraints.len() - 1
    }

    /// Adds a variable with zero coefficients in all existing rows.
    pub fn add_variable(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        for row in &mut self.constraints {
            row.coeffs.push(0.0);
        }
        self.objective.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    fn check(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Domain("bound vectors do not match the variables".into()));
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(Error::Domain(format!("row {i} has {} coefficients, expected {n}", row.coeffs.len())));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(Error::Domain(format!("row {i} has non-finite data")));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("objective has non-finite coefficients".into()));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(Error::Domain(format!("variable {j} has invalid bounds")));
            }
        }
        Ok(())
    }

    /// Largest violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.constraints {
            let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match row.kind {
                RowKind::Le => lhs - row.rhs,
                RowKind::Ge => row.rhs - lhs,
                RowKind::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    /// Shadow price of each row: the rate of change of the optimal objective
    /// per unit increase of the right-hand side.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    fn without_solution(status: LpStatus, iterations: usize) -> Self {
        LpSolution {
            status,
            primal: Vec::new(),
            duals: Vec::new(),
            objective: f64::NAN,
            dual_objective: f64::NAN,
            iterations,
        }
    }
}

/// How an original variable is recovered from standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = offset + col`
    Shifted { col: usize, offset: f64 },
    /// `x = offset - col`
    Mirrored { col: usize, offset: f64 },
    /// `x = plus - minus`
    Split { plus: usize, minus: usize },
}

struct StandardForm {
    /// Column-major constraint matrix, `m` entries per column.
    cols: Vec<Vec<f64>>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    /// Row was negated to make the right-hand side nonnegative.
    flipped: Vec<bool>,
    artificial_from: usize,
    initial_basis: Vec<usize>,
    constant: f64,
    vars: Vec<VarMap>,
    user_rows: usize,
}

fn standardize(lp: &LinearProgram) -> StandardForm {
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let user_rows = lp.num_rows();
    let mut rows: Vec<(Vec<(usize, f64)>, RowKind, f64)> = lp
        .constraints
        .iter()
        .map(|r| (Vec::new(), r.kind, r.rhs))
        .collect();
    let mut cost = Vec::new();
    let mut constant = 0.0;
    let mut vars = Vec::with_capacity(lp.num_vars());
    let mut ncols = 0usize;

    for j in 0..lp.num_vars() {
        let c = sign * lp.objective[j];
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        if lo.is_finite() {
            let col = ncols;
            ncols += 1;
            cost.push(c);
            constant += c * lo;
            for (i, r) in lp.constraints.iter().enumerate() {
                let a = r.coeffs[j];
                if a != 0.0 {
                    rows[i].0.push((col, a));
                    rows[i].2 -= a * lo;
                }
            }
            if hi.is_finite() {
                rows.push((vec![(col, 1.0)], RowKind::Le, hi - lo));
            }
            vars.push(VarMap::Shifted { col, offset: lo });
        } else if hi.is_finite() {
            let col = ncols;
            ncols += 1;
            cost.push(-c);
            constant += c * hi;
            for (i, r) in lp.constraints.iter().enumerate() {
                let a = r.coeffs[j];
                if a != 0.0 {
                    rows[i].0.push((col, -a));
                    rows[i].2 -= a * hi;
                }
            }
            vars.push(VarMap::Mirrored { col, offset: hi });
        } else {
            let (plus, minus) = (ncols, ncols + 1);
            ncols += 2;
            cost.push(c);
            cost.push(-c);
            for (i, r) in lp.constraints.iter().enumerate() {
                let a = r.coeffs[j];
                if a != 0.0 {
                    rows[i].0.push((plus, a));
                    rows[i].0.push((minus, -a));
                }
            }
            vars.push(VarMap::Split { plus, minus });
        }
    }

    let m = rows.len();
    let mut flipped = vec![false; m];
    for (i, row) in rows.iter_mut().enumerate() {
        if row.2 < 0.0 {
            flipped[i] = true;
            row.2 = -row.2;
            for e in &mut row.0 {
                e.1 = -e.1;
            }
            row.1 = match row.1 {
                RowKind::Le => RowKind::Ge,
                RowKind::Ge => RowKind::Le,
                RowKind::Eq => RowKind::Eq,
            };
        }
    }

    let mut cols = vec![vec![0.0; m]; ncols];
    for (i, row) in rows.iter().enumerate() {
        for &(c, a) in &row.0 {
            cols[c][i] += a;
        }
    }
    let mut initial_basis = vec![usize::MAX; m];
    for (i, row) in rows.iter().enumerate() {
        match row.1 {
            RowKind::Le => {
                let mut col = vec![0.0; m];
                col[i] = 1.0;
                initial_basis[i] = cols.len();
                cols.push(col);
                cost.push(0.0);
            }
            RowKind::Ge => {
                let mut col = vec![0.0; m];
                col[i] = -1.0;
                cols.push(col);
                cost.push(0.0);
            }
            RowKind::Eq => {}
        }
    }
    let artificial_from = cols.len();
    for (i, row) in rows.iter().enumerate() {
        if row.1 != RowKind::Le {
            let mut col = vec![0.0; m];
            col[i] = 1.0;
            initial_basis[i] = cols.len();
            cols.push(col);
            cost.push(0.0);
        }
    }
    StandardForm {
        cols,
        cost,
        rhs: rows.iter().map(|r| r.2).collect(),
        flipped,
        artificial_from,
        initial_basis,
        constant,
        vars,
        user_rows,
    }
}

struct Tableau<'a> {
    sf: &'a StandardForm,
    m: usize,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<Vec<f64>>,
    xb: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
    log: Vec<String>,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl<'a> Tableau<'a> {
    fn new(sf: &'a StandardForm) -> Self {
        let m = sf.rhs.len();
        let mut binv = vec![vec![0.0; m]; m];
        for (i, row) in binv.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let mut in_basis = vec![false; sf.cols.len()];
        for &b in &sf.initial_basis {
            in_basis[b] = true;
        }
        Tableau {
            sf,
            m,
            basis: sf.initial_basis.clone(),
            in_basis,
            binv,
            xb: sf.rhs.clone(),
            iterations: 0,
            since_refactor: 0,
            log: Vec::new(),
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        // Gauss-Jordan on [B | I].
        let mut a: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut row = vec![0.0; 2 * m];
                for (k, &b) in self.basis.iter().enumerate() {
                    row[k] = self.sf.cols[b][i];
                }
                row[m + i] = 1.0;
                row
            })
            .collect();
        for c in 0..m {
            let p = (c..m)
                .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
                .expect("nonempty");
            if a[p][c].abs() < 1e-12 {
                return Err(self.failure("singular basis during refactorization"));
            }
            a.swap(p, c);
            let piv = a[c][c];
            for v in &mut a[c] {
                *v /= piv;
            }
            let pivot_row = a[c].clone();
            for (r, row) in a.iter_mut().enumerate() {
                if r != c {
                    let f = row[c];
                    if f != 0.0 {
                        for (v, pv) in row.iter_mut().zip(&pivot_row) {
                            *v -= f * pv;
                        }
                    }
                }
            }
        }
        self.binv = a.into_iter().map(|row| row[m..].to_vec()).collect();
        self.xb = (0..m)
            .map(|i| (0..m).map(|k| self.binv[i][k] * self.sf.rhs[k]).sum())
            .collect();
        for v in &mut self.xb {
            if *v < 0.0 && *v > -FEASIBILITY_TOL {
                *v = 0.0;
            }
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn failure(&self, what: &str) -> Error {
        let tail: Vec<&str> = self.log.iter().rev().take(8).map(String::as_str).collect();
        Error::SolverFailure {
            iterations: self.iterations,
            log: format!("{what}; last pivots (newest first): {}", tail.join(", ")),
        }
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (yk, bk) in y.iter_mut().zip(&self.binv[r]) {
                    *yk += cb * bk;
                }
            }
        }
        y
    }

    fn run(&mut self, cost: &[f64], phase_two: bool) -> Result<PhaseOutcome> {
        let m = self.m;
        let ncols = self.sf.cols.len();
        let degenerate_limit = 2 * (m + ncols);
        let max_iterations = 50_000 + 50 * (m + ncols);
        let mut degenerate_run = 0usize;
        let mut bland = false;
        // Artificial columns never enter once feasibility has been found.
        let enter_limit = if phase_two { self.sf.artificial_from } else { ncols };

        loop {
            if self.iterations >= max_iterations {
                return Err(self.failure("iteration limit reached"));
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let y = self.duals(cost);
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..enter_limit {
                if self.in_basis[j] {
                    continue;
                }
                let col = &self.sf.cols[j];
                let d = cost[j] - col.iter().zip(&y).map(|(a, yk)| a * yk).sum::<f64>();
                if d < -REDUCED_COST_TOL {
                    if bland {
                        entering = Some((j, d));
                        break;
                    }
                    if entering.is_none_or(|(_, best)| d < best) {
                        entering = Some((j, d));
                    }
                }
            }
            let Some((q, _)) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };

            let col = &self.sf.cols[q];
            let alpha: Vec<f64> = (0..m)
                .map(|i| self.binv[i].iter().zip(col).map(|(b, a)| b * a).sum())
                .collect();

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                let a = alpha[r];
                let basic = self.basis[r];
                let theta = if phase_two && basic >= self.sf.artificial_from && a.abs() > PIVOT_TOL {
                    0.0
                } else if a > PIVOT_TOL {
                    self.xb[r].max(0.0) / a
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some((best_r, best_theta)) => {
                        if theta < best_theta - 1e-12 {
                            true
                        } else if theta <= best_theta + 1e-12 {
                            if bland {
                                basic < self.basis[best_r]
                            } else {
                                a.abs() > alpha[best_r].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some((r, theta));
                }
            }
            let Some((r, theta)) = leave else {
                return Ok(PhaseOutcome::Unbounded);
            };

            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > degenerate_limit {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }

            let leaving = self.basis[r];
            for i in 0..m {
                if i != r {
                    self.xb[i] -= theta * alpha[i];
                }
            }
            self.xb[r] = theta;
            let piv = alpha[r];
            let pivot_row: Vec<f64> = self.binv[r].iter().map(|v| v / piv).collect();
            for (i, row) in self.binv.iter_mut().enumerate() {
                if i == r {
                    continue;
                }
                let f = alpha[i];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
            self.binv[r] = pivot_row;
            self.basis[r] = q;
            self.in_basis[leaving] = false;
            self.in_basis[q] = true;
            self.iterations += 1;
            self.since_refactor += 1;
            if self.log.len() >= 64 {
                self.log.remove(0);
            }
            self.log.push(format!("{q}->{leaving}@{theta:.3e}"));
        }
    }
}

/// Solves `lp`, returning its status and, when optimal, primal values and
/// row duals.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.check()?;
    for j in 0..lp.num_vars() {
        if lp.lower[j] > lp.upper[j] {
            return Ok(LpSolution::without_solution(LpStatus::Infeasible, 0));
        }
    }
    let sf = standardize(lp);
    let m = sf.rhs.len();
    let mut tab = Tableau::new(&sf);

    if sf.artificial_from < sf.cols.len() {
        let phase_one: Vec<f64> = (0..sf.cols.len())
            .map(|j| if j >= sf.artificial_from { 1.0 } else { 0.0 })
            .collect();
        tab.run(&phase_one, false)?;
        tab.refactor()?;
        let infeasibility: f64 = tab
            .basis
            .iter()
            .zip(&tab.xb)
            .filter(|(&b, _)| b >= sf.artificial_from)
            .map(|(_, &v)| v)
            .sum();
        let scale = 1.0 + sf.rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if infeasibility > FEASIBILITY_TOL * scale {
            return Ok(LpSolution::without_solution(LpStatus::Infeasible, tab.iterations));
        }
    }

    match tab.run(&sf.cost, true)? {
        PhaseOutcome::Unbounded => {
            return Ok(LpSolution::without_solution(LpStatus::Unbounded, tab.iterations));
        }
        PhaseOutcome::Optimal => {}
    }
    tab.refactor()?;

    let mut std_x = vec![0.0; sf.cols.len()];
    for (r, &b) in tab.basis.iter().enumerate() {
        std_x[b] = tab.xb[r].max(0.0);
    }
    let primal: Vec<f64> = sf
        .vars
        .iter()
        .map(|v| match *v {
            VarMap::Shifted { col, offset } => offset + std_x[col],
            VarMap::Mirrored { col, offset } => offset - std_x[col],
            VarMap::Split { plus, minus } => std_x[plus] - std_x[minus],
        })
        .collect();

    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let y = tab.duals(&sf.cost);
    let duals: Vec<f64> = (0..sf.user_rows)
        .map(|i| {
            let flip = if sf.flipped[i] { -1.0 } else { 1.0 };
            sign * flip * y[i]
        })
        .collect();
    let std_dual: f64 = (0..m).map(|i| y[i] * sf.rhs[i]).sum::<f64>() + sf.constant;

    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.evaluate(&primal),
        dual_objective: sign * std_dual,
        primal,
        duals,
        iterations: tab.iterations,
    })
}
