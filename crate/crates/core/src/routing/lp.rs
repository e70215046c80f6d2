//! Dense two-phase bounded-variable primal simplex.
//!
//! Problems are stated as `min c'x` subject to linear rows (`<=`, `=`, `>=`) and
//! per-variable bounds `lower <= x <= upper` with finite `lower`. Variables are
//! shifted to `x - lower >= 0`; finite upper bounds stay on the columns, so a
//! nonbasic variable sits at either of its bounds. A phase-one problem over
//! artificial variables finds an initial basis. Pricing takes the most negative
//! reduced cost and switches to Bland's rule while pivots stay degenerate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-10;
/// Smallest tableau entry accepted as a pivot.
const PIVOT_TOL: f64 = 1e-9;
/// Pivots between refactorizations of the tableau from the original rows.
const REFACTOR_EVERY: usize = 50;
const MAX_PIVOTS: usize = 200_000;
/// Consecutive degenerate pivots tolerated before Bland's rule takes over.
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with bounds `[lower, upper]` (upper may be infinite) and
    /// objective coefficient `cost`; returns its index.
    pub fn add_variable(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.push(cost);
        self.cost.len() - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn num_variables(&self) -> usize {
        self.cost.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.cost.iter().zip(values).map(|(c, x)| c * x).sum()
    }

    /// Largest violation of any row or bound at `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|&(j, a)| a * values[j]).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &x) in values.iter().enumerate() {
            worst = worst.max(self.lower[j] - x).max(x - self.upper[j]);
        }
        worst
    }

    fn validate(&self) -> Result<()> {
        for j in 0..self.num_variables() {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if !lo.is_finite() {
                return Err(Error::input(format!("variable {j} needs a finite lower bound")));
            }
            if hi.is_nan() || hi < lo {
                return Err(Error::input(format!("variable {j} has inconsistent bounds [{lo}, {hi}]")));
            }
            if !self.cost[j].is_finite() {
                return Err(Error::input(format!("variable {j} has a non-finite cost")));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(Error::input(format!("row {i} has a non-finite right-hand side")));
            }
            for &(j, a) in &c.coeffs {
                if j >= self.num_variables() || !a.is_finite() {
                    return Err(Error::input(format!("row {i} has an invalid coefficient on variable {j}")));
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution> {
        self.validate()?;
        let standard = StandardForm::build(self);
        let t = standard.solve()?;
        let shifted = standard.basic_solution(&t);
        let values: Vec<f64> = (0..self.num_variables()).map(|j| self.lower[j] + shifted[j]).collect();
        let objective = self.objective_value(&values);
        Ok(LpSolution { values, objective, pivots: t.pivots })
    }
}

/// `A x = b`, `0 <= x <= upper`, `b >= 0`, with the structural variables first,
/// then slack/surplus columns, then artificial columns.
struct StandardForm {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    cost: Vec<f64>,
    upper: Vec<f64>,
    /// First artificial column.
    first_artificial: usize,
    /// Initial basis (slack or artificial column per row).
    initial_basis: Vec<usize>,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_variables();
        let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
        for c in &lp.constraints {
            let mut dense = vec![0.0; n];
            let mut rhs = c.rhs;
            for &(j, a) in &c.coeffs {
                dense[j] += a;
                rhs -= a * lp.lower[j];
            }
            rows.push((dense, c.relation, rhs));
        }
        for row in rows.iter_mut() {
            if row.2 < 0.0 {
                row.0.iter_mut().for_each(|v| *v = -*v);
                row.2 = -row.2;
                row.1 = match row.1 {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }
        let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let artificial_count = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let first_artificial = n + slack_count;
        let width = first_artificial + artificial_count;

        let mut a = Vec::with_capacity(rows.len());
        let mut b = Vec::with_capacity(rows.len());
        let mut initial_basis = Vec::with_capacity(rows.len());
        let (mut next_slack, mut next_art) = (n, first_artificial);
        for (dense, rel, rhs) in rows {
            let mut full = dense;
            full.resize(width, 0.0);
            match rel {
                Relation::Le => {
                    full[next_slack] = 1.0;
                    initial_basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    full[next_slack] = -1.0;
                    next_slack += 1;
                    full[next_art] = 1.0;
                    initial_basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    full[next_art] = 1.0;
                    initial_basis.push(next_art);
                    next_art += 1;
                }
            }
            a.push(full);
            b.push(rhs);
        }
        let mut cost = lp.cost.clone();
        cost.resize(width, 0.0);
        let mut upper: Vec<f64> = (0..n).map(|j| lp.upper[j] - lp.lower[j]).collect();
        upper.resize(width, f64::INFINITY);
        StandardForm { a, b, cost, upper, first_artificial, initial_basis }
    }

    fn width(&self) -> usize {
        self.cost.len()
    }

    /// Runs both phases. Rows found redundant end with basis entry `usize::MAX`.
    fn solve(&self) -> Result<Tableau> {
        let mut t = Tableau::new(self);
        let width = self.width();
        let scale = 1.0 + self.b.iter().copied().fold(0.0, f64::max);

        let phase_one: Vec<f64> = (0..width).map(|j| if j >= self.first_artificial { 1.0 } else { 0.0 }).collect();
        t.set_objective(&phase_one);
        t.optimize(self, width)?;
        let residual: f64 = t.x[self.first_artificial..].iter().sum();
        if residual > 1e-8 * scale {
            return Err(Error::Infeasible);
        }

        // drive remaining artificials out of the basis
        for r in 0..t.rows.len() {
            let bv = t.basis[r];
            if bv < self.first_artificial || bv == usize::MAX {
                continue;
            }
            t.x[bv] = 0.0;
            let entering = (0..self.first_artificial).find(|&j| t.row_of[j] == usize::MAX && t.rows[r][j].abs() > 1e-7);
            match entering {
                Some(j) => t.pivot(r, j),
                None => {
                    t.basis[r] = usize::MAX;
                    t.row_of[bv] = usize::MAX;
                }
            }
        }

        t.set_objective(&self.cost);
        t.optimize(self, self.first_artificial)?;
        Ok(t)
    }

    /// Values of all columns at the final basis. Basic values are re-solved from
    /// the original rows to shed accumulated tableau error.
    fn basic_solution(&self, t: &Tableau) -> Vec<f64> {
        let kept: Vec<usize> = (0..t.basis.len()).filter(|&r| t.basis[r] != usize::MAX).collect();
        let mut x = t.x.clone();
        for (j, v) in x.iter_mut().enumerate() {
            if t.row_of[j] == usize::MAX {
                *v = if t.at_upper[j] { self.upper[j] } else { 0.0 };
            }
        }
        let k = kept.len();
        if k > 0 {
            let m = DMatrix::from_fn(k, k, |i, j| self.a[kept[i]][t.basis[kept[j]]]);
            let rhs = DVector::from_fn(k, |i, _| {
                let row = &self.a[kept[i]];
                self.b[kept[i]]
                    - (0..self.width())
                        .filter(|&j| t.row_of[j] == usize::MAX && x[j] != 0.0)
                        .map(|j| row[j] * x[j])
                        .sum::<f64>()
            });
            if let Some(sol) = m.lu().solve(&rhs) {
                for (j, &r) in kept.iter().enumerate() {
                    x[t.basis[r]] = sol[j];
                }
            }
        }
        // values a hair outside their bounds are rounding noise
        for (v, &u) in x.iter_mut().zip(&self.upper) {
            if *v < 0.0 && *v > -1e-12 {
                *v = 0.0;
            }
            if *v > u && *v < u + 1e-12 * (1.0 + u) {
                *v = u;
            }
        }
        x
    }
}

struct Tableau {
    /// `B^-1 A`, one row per constraint.
    rows: Vec<Vec<f64>>,
    /// Reduced costs of `cost`.
    obj: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    /// Row holding each basic column, `usize::MAX` for nonbasic ones.
    row_of: Vec<usize>,
    /// Current value of every column.
    x: Vec<f64>,
    upper: Vec<f64>,
    /// Nonbasic columns resting at their upper bound.
    at_upper: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn new(form: &StandardForm) -> Self {
        let width = form.width();
        let mut row_of = vec![usize::MAX; width];
        let mut x = vec![0.0; width];
        for (r, &bv) in form.initial_basis.iter().enumerate() {
            row_of[bv] = r;
            x[bv] = form.b[r];
        }
        Tableau {
            rows: form.a.clone(),
            obj: vec![0.0; width],
            cost: vec![0.0; width],
            basis: form.initial_basis.clone(),
            row_of,
            x,
            upper: form.upper.clone(),
            at_upper: vec![false; width],
            pivots: 0,
        }
    }

    fn set_objective(&mut self, cost: &[f64]) {
        let mut obj = cost.to_vec();
        for (row, &bv) in self.rows.iter().zip(&self.basis) {
            if bv == usize::MAX {
                continue;
            }
            let cb = cost[bv];
            if cb != 0.0 {
                obj.iter_mut().zip(row).for_each(|(o, v)| *o -= cb * v);
            }
        }
        self.obj = obj;
        self.cost = cost.to_vec();
    }

    /// Rebuilds `B^-1 A`, the basic values and the reduced costs from the
    /// original rows, discarding accumulated rounding error.
    fn refactor(&mut self, form: &StandardForm) {
        let kept: Vec<usize> = (0..self.basis.len()).filter(|&r| self.basis[r] != usize::MAX).collect();
        let k = kept.len();
        if k == 0 {
            return;
        }
        let width = form.width();
        let b_mat = DMatrix::from_fn(k, k, |i, j| form.a[kept[i]][self.basis[kept[j]]]);
        let Some(inverse) = b_mat.try_inverse() else {
            return;
        };
        for (j, v) in self.x.iter_mut().enumerate() {
            if self.row_of[j] == usize::MAX {
                *v = if self.at_upper[j] { self.upper[j] } else { 0.0 };
            }
        }
        let a_kept = DMatrix::from_fn(k, width, |i, j| form.a[kept[i]][j]);
        let residual = DVector::from_fn(k, |i, _| {
            let row = &form.a[kept[i]];
            form.b[kept[i]]
                - (0..width)
                    .filter(|&j| self.row_of[j] == usize::MAX && self.x[j] != 0.0)
                    .map(|j| row[j] * self.x[j])
                    .sum::<f64>()
        });
        let rows = &inverse * a_kept;
        let basic = &inverse * residual;
        for (i, &r) in kept.iter().enumerate() {
            self.rows[r] = rows.row(i).iter().copied().collect();
            self.x[self.basis[r]] = basic[i];
        }
        let cost = std::mem::take(&mut self.cost);
        self.set_objective(&cost);
    }

    /// Direction in which moving nonbasic column `j` lowers the objective, if any.
    fn improving(&self, j: usize) -> Option<f64> {
        if self.row_of[j] != usize::MAX || self.upper[j] <= 0.0 {
            return None;
        }
        let d = self.obj[j];
        if !self.at_upper[j] && d < -PIVOT_EPS {
            Some(1.0)
        } else if self.at_upper[j] && d > PIVOT_EPS {
            Some(-1.0)
        } else {
            None
        }
    }

    /// Primal simplex over columns `0..allowed`.
    fn optimize(&mut self, form: &StandardForm, allowed: usize) -> Result<()> {
        let mut degenerate = 0;
        let mut since_refactor = 0;
        let mut fresh = false;
        loop {
            if since_refactor >= REFACTOR_EVERY {
                self.refactor(form);
                since_refactor = 0;
            }
            let bland = degenerate >= DEGENERATE_RUN;
            let entering = if bland {
                (0..allowed).find_map(|j| self.improving(j).map(|dir| (j, dir)))
            } else {
                (0..allowed)
                    .filter_map(|j| self.improving(j).map(|dir| (j, dir)))
                    .max_by(|a, b| self.obj[a.0].abs().total_cmp(&self.obj[b.0].abs()).then(b.0.cmp(&a.0)))
            };
            let Some((col, dir)) = entering else {
                // confirm optimality on freshly computed values
                if fresh || since_refactor == 0 {
                    return Ok(());
                }
                self.refactor(form);
                since_refactor = 0;
                fresh = true;
                continue;
            };
            fresh = false;
            since_refactor += 1;

            // (step, row, leaves at upper, |pivot|) for every blocking row
            let mut blocking: Vec<(f64, usize, bool, f64)> = Vec::new();
            for (r, row) in self.rows.iter().enumerate() {
                let bv = self.basis[r];
                let a = dir * row[col];
                if bv == usize::MAX || a.abs() <= PIVOT_TOL {
                    continue;
                }
                if a > 0.0 {
                    blocking.push((self.x[bv].max(0.0) / a, r, false, a));
                } else if self.upper[bv].is_finite() {
                    blocking.push(((self.upper[bv] - self.x[bv]).max(0.0) / -a, r, true, -a));
                }
            }
            // among rows blocking within a hair of the minimum, pivot on a large entry
            let min_step = blocking.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
            let near: Vec<_> = blocking.iter().filter(|b| b.0 <= min_step + 1e-9 * (1.0 + min_step)).collect();
            let largest = near.iter().map(|b| b.3).fold(0.0, f64::max);
            let best = if bland {
                near.into_iter().filter(|b| b.3 >= 0.1 * largest).min_by_key(|b| self.basis[b.1])
            } else {
                near.into_iter().max_by(|x, y| x.3.total_cmp(&y.3).then(y.1.cmp(&x.1)))
            }
            .map(|&(_, r, to_upper, mag)| (min_step, r, to_upper, mag));

            let flip = self.upper[col];
            let pivot_row = best.filter(|b| b.0 < flip);
            let step = match (pivot_row, flip.is_finite()) {
                (Some((s, ..)), _) => s,
                (None, true) => flip,
                (None, false) => return Err(Error::Unbounded),
            };
            if step > 0.0 {
                for (row, &bv) in self.rows.iter().zip(&self.basis) {
                    if bv != usize::MAX && row[col] != 0.0 {
                        self.x[bv] -= dir * step * row[col];
                    }
                }
            }
            self.x[col] += dir * step;
            match pivot_row {
                Some((_, r, to_upper, _)) => {
                    let leaving = self.basis[r];
                    self.x[leaving] = if to_upper { self.upper[leaving] } else { 0.0 };
                    self.at_upper[leaving] = to_upper;
                    self.pivot(r, col);
                }
                None => {
                    self.at_upper[col] = !self.at_upper[col];
                    self.x[col] = if self.at_upper[col] { flip } else { 0.0 };
                    self.pivots += 1;
                }
            }
            degenerate = if step <= 1e-12 { degenerate + 1 } else { 0 };
            if self.pivots > MAX_PIVOTS {
                return Err(Error::Internal("simplex pivot limit exceeded".into()));
            }
        }
    }

    /// Makes column `c` basic in row `r`; the column keeps its current value.
    fn pivot(&mut self, r: usize, c: usize) {
        self.pivots += 1;
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let support: Vec<usize> = (0..pivot_row.len()).filter(|&k| pivot_row[k] != 0.0).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || self.basis[i] == usize::MAX {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for &k in &support {
                    row[k] -= f * pivot_row[k];
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for &k in &support {
                self.obj[k] -= f * pivot_row[k];
            }
            self.obj[c] = 0.0;
        }
        self.rows[r] = pivot_row;
        let leaving = self.basis[r];
        if leaving != usize::MAX {
            self.row_of[leaving] = usize::MAX;
        }
        self.basis[r] = c;
        self.row_of[c] = r;
        self.at_upper[c] = false;
    }
}
