//! Incrementally growable LP with bounded variables, solved by a revised
//! simplex method with warm starts.
//!
//! Every row `a . x  (<=|=|>=)  rhs` is stored as `a . x - r = 0` with a
//! logical variable `r` whose bounds carry the right-hand side. After rows are
//! added or bounds changed, the stored basis is reused and the dual simplex
//! method restores feasibility.

mod factor;
mod simplex;

use std::fmt::Write as _;
use std::time::Instant;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
    #[error("deadline reached")]
    Deadline,
    #[error("index {index} out of range ({what} count is {len})")]
    IndexError { what: &'static str, index: usize, len: usize },
    #[error("invalid bounds for column {0}: lb > ub")]
    InvalidBounds(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    PrimalInfeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Zero,
}

/// Warm-start descriptor: one status per column and one per row logical.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub cols: Vec<VarStatus>,
    pub rows: Vec<VarStatus>,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    /// Column values (meaningful for Optimal; last iterate otherwise).
    pub x: Vec<f64>,
    /// Objective value in the model's sense.
    pub obj: f64,
    /// Row duals in the model's sense (`obj` gradient w.r.t. row right-hand sides).
    pub duals: Vec<f64>,
    pub basis: Basis,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LpModel {
    sense: Sense,
    obj: Vec<f64>,
    col_lb: Vec<f64>,
    col_ub: Vec<f64>,
    /// Column-wise copy of the constraint matrix.
    cols: Vec<Vec<(usize, f64)>>,
    rows: Vec<Row>,
    basis: Option<Basis>,
    iteration_limit: Option<usize>,
    deadline: Option<Instant>,
}

impl LpModel {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            obj: Vec::new(),
            col_lb: Vec::new(),
            col_ub: Vec::new(),
            cols: Vec::new(),
            rows: Vec::new(),
            basis: None,
            iteration_limit: None,
            deadline: None,
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn num_vars(&self) -> usize {
        self.obj.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_col(&mut self, lb: f64, ub: f64, obj: f64) -> usize {
        self.obj.push(obj);
        self.col_lb.push(lb);
        self.col_ub.push(ub);
        self.cols.push(Vec::new());
        if let Some(b) = self.basis.as_mut() {
            b.cols.push(VarStatus::AtLower);
        }
        self.obj.len() - 1
    }

    pub fn add_cols(&mut self, count: usize, lb: f64, ub: f64) -> Vec<usize> {
        (0..count).map(|_| self.add_col(lb, ub, 0.0)).collect()
    }

    pub fn set_objective(&mut self, j: usize, value: f64) -> Result<(), LpError> {
        self.check_col(j)?;
        self.obj[j] = value;
        Ok(())
    }

    pub fn objective(&self) -> &[f64] {
        &self.obj
    }

    fn check_col(&self, j: usize) -> Result<(), LpError> {
        if j >= self.num_vars() {
            return Err(LpError::IndexError {
                what: "column",
                index: j,
                len: self.num_vars(),
            });
        }
        Ok(())
    }

    /// Adds one row; duplicate indices are summed and exact zeros dropped.
    pub fn add_row(&mut self, coeffs: &[(usize, f64)], relation: Relation, rhs: f64) -> Result<usize, LpError> {
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        let mut sorted = coeffs.to_vec();
        sorted.sort_by_key(|e| e.0);
        for (j, v) in sorted {
            self.check_col(j)?;
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => merged.push((j, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        let i = self.rows.len();
        for &(j, v) in &merged {
            self.cols[j].push((i, v));
        }
        self.rows.push(Row {
            coeffs: merged,
            relation,
            rhs,
        });
        if let Some(b) = self.basis.as_mut() {
            b.rows.push(VarStatus::Basic);
        }
        Ok(i)
    }

    pub fn add_rows(&mut self, rows: &[Row]) -> Result<std::ops::Range<usize>, LpError> {
        let start = self.rows.len();
        for r in rows {
            for &(j, _) in &r.coeffs {
                self.check_col(j)?;
            }
        }
        for r in rows {
            self.add_row(&r.coeffs, r.relation, r.rhs)?;
        }
        Ok(start..self.rows.len())
    }

    pub fn row(&self, i: usize) -> &Row {
        &self.rows[i]
    }

    pub fn set_var_bounds(&mut self, j: usize, lb: f64, ub: f64) -> Result<(), LpError> {
        self.check_col(j)?;
        if lb.is_nan() || ub.is_nan() {
            return Err(LpError::InvalidBounds(j));
        }
        self.col_lb[j] = lb;
        self.col_ub[j] = ub;
        Ok(())
    }

    pub fn var_bounds(&self, j: usize) -> (f64, f64) {
        (self.col_lb[j], self.col_ub[j])
    }

    pub fn set_row_rhs(&mut self, i: usize, rhs: f64) -> Result<(), LpError> {
        if i >= self.rows.len() {
            return Err(LpError::IndexError {
                what: "row",
                index: i,
                len: self.rows.len(),
            });
        }
        self.rows[i].rhs = rhs;
        Ok(())
    }

    pub fn basis(&self) -> Option<&Basis> {
        self.basis.as_ref()
    }

    /// Installs a warm-start basis. A basis recorded on a smaller model is
    /// extended with basic logicals for new rows and nonbasic new columns.
    pub fn set_basis(&mut self, basis: Option<Basis>) {
        self.basis = basis.map(|mut b| {
            b.cols.truncate(self.num_vars());
            b.cols.resize(self.num_vars(), VarStatus::AtLower);
            b.rows.truncate(self.num_rows());
            b.rows.resize(self.num_rows(), VarStatus::Basic);
            b
        });
    }

    pub fn set_iteration_limit(&mut self, limit: Option<usize>) {
        self.iteration_limit = limit;
    }

    /// Solves running past `deadline` stop with [`LpError::Deadline`].
    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    /// `a_i . x` for every row.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.num_vars() {
            worst = worst.max(self.col_lb[j] - x[j]).max(x[j] - self.col_ub[j]);
        }
        for (r, act) in self.rows.iter().zip(self.row_activity(x)) {
            let v = match r.relation {
                Relation::Le => act - r.rhs,
                Relation::Ge => r.rhs - act,
                Relation::Eq => (act - r.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn solve(&mut self) -> Result<LpResult, LpError> {
        for j in 0..self.num_vars() {
            if self.col_lb[j] > self.col_ub[j] {
                let result = self.infeasible_bounds_result();
                return Ok(result);
            }
        }
        let result = simplex::solve(self)?;
        self.basis = Some(result.basis.clone());
        Ok(result)
    }

    fn infeasible_bounds_result(&self) -> LpResult {
        LpResult {
            status: LpStatus::PrimalInfeasible,
            x: vec![0.0; self.num_vars()],
            obj: f64::NAN,
            duals: vec![0.0; self.num_rows()],
            basis: self.basis.clone().unwrap_or_else(|| Basis {
                cols: vec![VarStatus::AtLower; self.num_vars()],
                rows: vec![VarStatus::Basic; self.num_rows()],
            }),
            iterations: 0,
        }
    }

    /// Plain-text listing of the model for inspection.
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Maximize => "maximize",
            Sense::Minimize => "minimize",
        };
        let _ = writeln!(out, "{sense}");
        let _ = writeln!(out, "  obj: {}", format_terms(self.obj.iter().copied().enumerate()));
        let _ = writeln!(out, "subject to");
        for (i, r) in self.rows.iter().enumerate() {
            let rel = match r.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(out, "  r{i}: {} {rel} {}", format_terms(r.coeffs.iter().copied()), r.rhs);
        }
        let _ = writeln!(out, "bounds");
        for j in 0..self.num_vars() {
            let _ = writeln!(out, "  {} <= x{j} <= {}", self.col_lb[j], self.col_ub[j]);
        }
        let _ = writeln!(out, "end");
        out
    }
}

fn format_terms(terms: impl Iterator<Item = (usize, f64)>) -> String {
    let mut s = String::new();
    for (j, v) in terms {
        if v == 0.0 {
            continue;
        }
        if s.is_empty() {
            let _ = write!(s, "{v} x{j}");
        } else if v < 0.0 {
            let _ = write!(s, " - {} x{j}", -v);
        } else {
            let _ = write!(s, " + {v} x{j}");
        }
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}
