//! Dense two-phase simplex for the small feasibility problems used as an
//! independent oracle.
//!
//! Problems have the form `min c^T x` subject to `x >= 0` and rows
//! `a_r^T x {<=, >=, =} b_r`. Rows are equilibrated (right-hand side scaled
//! to one where non-zero, then columns scaled to unit max-abs) before the
//! tableau is built, so the phase-one tolerance is relative to the data.
//! Pivoting follows Bland's rule, which cannot cycle.

use crate::error::{Error, Result};

/// Pivot magnitudes below this are treated as zero.
const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    /// `residual` is the phase-one optimum in equilibrated units.
    Infeasible { residual: f64 },
    Unbounded,
}

impl LinearProgram {
    /// Feasibility problem with a zero objective.
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn minimize(mut self, objective: Vec<f64>) -> Self {
        assert_eq!(objective.len(), self.num_vars);
        self.objective = objective;
        self
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars);
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Solves the program; `feas_tol` bounds the phase-one optimum accepted
    /// as feasible.
    pub fn solve(&self, feas_tol: f64) -> Result<LpOutcome> {
        if self
            .rows
            .iter()
            .flat_map(|r| r.coeffs.iter().chain(std::iter::once(&r.rhs)))
            .chain(self.objective.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Numerical("linear program has non-finite data".into()));
        }
        let scaled = Equilibrated::new(self);
        let mut tab = Tableau::build(&scaled);
        let residual = tab.phase_one()?;
        if residual > feas_tol {
            return Ok(LpOutcome::Infeasible { residual });
        }
        tab.drive_out_artificials();
        if !tab.phase_two(&scaled.objective)? {
            return Ok(LpOutcome::Unbounded);
        }
        let q = tab.primal(scaled.num_vars);
        let x: Vec<f64> = q
            .iter()
            .zip(&scaled.col_scale)
            .map(|(qi, s)| (qi * s).max(0.0))
            .collect();
        let objective = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        Ok(LpOutcome::Optimal { x, objective })
    }
}

struct Equilibrated {
    num_vars: usize,
    rows: Vec<Row>,
    objective: Vec<f64>,
    col_scale: Vec<f64>,
}

impl Equilibrated {
    fn new(lp: &LinearProgram) -> Self {
        let mut rows: Vec<Row> = lp
            .rows
            .iter()
            .map(|r| {
                let mut row = r.clone();
                if row.rhs < 0.0 {
                    row.rhs = -row.rhs;
                    row.coeffs.iter_mut().for_each(|c| *c = -*c);
                    row.relation = match row.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                }
                let scale = if row.rhs > 0.0 {
                    row.rhs
                } else {
                    row.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
                };
                if scale > 0.0 {
                    row.rhs /= scale;
                    row.coeffs.iter_mut().for_each(|c| *c /= scale);
                }
                row
            })
            .collect();

        let col_scale: Vec<f64> = (0..lp.num_vars)
            .map(|j| {
                let m = rows.iter().fold(0.0f64, |m, r| m.max(r.coeffs[j].abs()));
                if m > 0.0 {
                    1.0 / m
                } else {
                    1.0
                }
            })
            .collect();
        for row in &mut rows {
            for (c, s) in row.coeffs.iter_mut().zip(&col_scale) {
                *c *= s;
            }
        }
        let objective = lp
            .objective
            .iter()
            .zip(&col_scale)
            .map(|(c, s)| c * s)
            .collect();
        Self {
            num_vars: lp.num_vars,
            rows,
            objective,
            col_scale,
        }
    }
}

/// Column layout: structural variables, then one slack/surplus per
/// inequality row, then one artificial per `>=`/`=` row, then the
/// right-hand side.
struct Tableau {
    m: usize,
    cols: usize,
    first_artificial: usize,
    data: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    active: Vec<bool>,
}

impl Tableau {
    fn build(lp: &Equilibrated) -> Self {
        let m = lp.rows.len();
        let n = lp.num_vars;
        let n_slack = lp
            .rows
            .iter()
            .filter(|r| r.relation != Relation::Eq)
            .count();
        let n_art = lp
            .rows
            .iter()
            .filter(|r| r.relation != Relation::Le)
            .count();
        let first_artificial = n + n_slack;
        let cols = first_artificial + n_art;
        let mut data = vec![vec![0.0; cols + 1]; m];
        let mut basis = vec![0; m];
        let (mut s, mut a) = (n, first_artificial);
        for (r, row) in lp.rows.iter().enumerate() {
            data[r][..n].copy_from_slice(&row.coeffs);
            data[r][cols] = row.rhs;
            match row.relation {
                Relation::Le => {
                    data[r][s] = 1.0;
                    basis[r] = s;
                    s += 1;
                }
                Relation::Ge => {
                    data[r][s] = -1.0;
                    s += 1;
                    data[r][a] = 1.0;
                    basis[r] = a;
                    a += 1;
                }
                Relation::Eq => {
                    data[r][a] = 1.0;
                    basis[r] = a;
                    a += 1;
                }
            }
        }
        Self {
            m,
            cols,
            first_artificial,
            data,
            obj: vec![0.0; cols + 1],
            basis,
            active: vec![true; cols],
        }
    }

    /// Sets the reduced-cost row for `min cost^T x` given the current basis.
    fn price(&mut self, cost: &[f64]) {
        self.obj = vec![0.0; self.cols + 1];
        self.obj[..cost.len()].copy_from_slice(cost);
        for r in 0..self.m {
            let cb = self.obj[self.basis[r]];
            if cb != 0.0 {
                for c in 0..=self.cols {
                    self.obj[c] -= cb * self.data[r][c];
                }
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.data[row][col];
        for c in 0..=self.cols {
            self.data[row][c] /= p;
        }
        self.data[row][col] = 1.0;
        let pivot_row = self.data[row].clone();
        for r in 0..self.m {
            if r != row {
                let f = self.data[r][col];
                if f != 0.0 {
                    for (d, pv) in self.data[r].iter_mut().zip(&pivot_row) {
                        *d -= f * pv;
                    }
                    self.data[r][col] = 0.0;
                }
            }
        }
        let f = self.obj[col];
        if f != 0.0 {
            for (o, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *o -= f * pv;
            }
            self.obj[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Bland's rule: the lowest-index leaving row among minimum ratios.
    fn leaving_row(&self, col: usize) -> Option<usize> {
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..self.m {
            let a = self.data[r][col];
            if a > PIVOT_EPS {
                let ratio = self.data[r][self.cols].max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => {
                        let tie = (ratio - bratio).abs() <= 1e-14 * (1.0 + bratio.abs());
                        if ratio < bratio && !tie || tie && self.basis[r] < self.basis[br] {
                            Some((r, ratio))
                        } else {
                            Some((br, bratio))
                        }
                    }
                };
            }
        }
        leave.map(|(r, _)| r)
    }

    /// Runs Bland-rule simplex iterations. Returns `false` when unbounded.
    /// With `bounded` set the objective is known to be bounded below, so an
    /// improving column without a pivot row is roundoff and is passed over.
    fn iterate(&mut self, bounded: bool) -> Result<bool> {
        let limit = 50 * (self.m + self.cols + 1).pow(2);
        for _ in 0..limit {
            let mut step = None;
            for col in (0..self.cols).filter(|&c| self.active[c] && self.obj[c] < -1e-11) {
                match self.leaving_row(col) {
                    Some(row) => {
                        step = Some((row, col));
                        break;
                    }
                    None if bounded => continue,
                    None => return Ok(false),
                }
            }
            match step {
                Some((row, col)) => self.pivot(row, col),
                None => return Ok(true),
            }
        }
        Err(Error::Numerical("simplex iteration limit reached".into()))
    }

    fn phase_one(&mut self) -> Result<f64> {
        let mut cost = vec![0.0; self.cols];
        cost[self.first_artificial..].iter_mut().for_each(|c| *c = 1.0);
        self.price(&cost);
        self.iterate(true)?;
        Ok((-self.obj[self.cols]).max(0.0))
    }

    fn drive_out_artificials(&mut self) {
        for c in self.first_artificial..self.cols {
            self.active[c] = false;
        }
        let mut r = 0;
        while r < self.m {
            if self.basis[r] >= self.first_artificial {
                let col = (0..self.first_artificial)
                    .filter(|&c| self.data[r][c].abs() > 1e-9)
                    .max_by(|&a, &b| self.data[r][a].abs().total_cmp(&self.data[r][b].abs()));
                match col {
                    Some(c) => self.pivot(r, c),
                    None => {
                        // redundant row
                        self.data.remove(r);
                        self.basis.remove(r);
                        self.m -= 1;
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    fn phase_two(&mut self, objective: &[f64]) -> Result<bool> {
        self.price(objective);
        self.iterate(false)
    }

    fn primal(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.data[r][self.cols];
            }
        }
        x
    }
}
