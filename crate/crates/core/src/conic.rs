//! Continuous conic-quadratic relaxation `NLP(l, u)` solved by a cutting-plane
//! loop on the separable lifted relaxation of every cone.

use thiserror::Error;

use crate::lp::{LpError, LpModel, LpStatus, Relation, Sense};
use crate::model::{max_cone_violation, MicqpInstance};
use crate::relax::{attach_sep, ConeVarMap, GammaPool, RelaxError, SepBlock, SEP_TOL};

/// Target for the squared-form cone violation `||Ax+b||^2 - (a.x+b0)^2`.
pub const CONIC_TOL: f64 = 1e-8;
pub const MAX_ROUNDS: usize = 500;
/// Half-width of the box imposed on free variables after an unbounded LP.
pub const SAFETY_BOX: f64 = 1e6;
/// Violation accepted when separation stalls at LP precision.
pub const STALL_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ConicError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Relax(#[from] RelaxError),
    #[error("bound vectors of length {got} for {n} variables")]
    Bounds { got: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConicStatus {
    Optimal,
    Infeasible,
    IterLimit,
}

#[derive(Debug, Clone)]
pub struct ConicResult {
    pub status: ConicStatus,
    /// Values of the instance variables at the last relaxation solution.
    pub x: Vec<f64>,
    /// Last relaxation objective in maximize form; an upper bound whenever
    /// the loop ran to completion without the safety box being active.
    pub obj: f64,
    pub max_violation: f64,
    pub rounds: usize,
    pub lp_solves: usize,
    pub cuts: usize,
    /// Relaxation objective after every round.
    pub trace: Vec<f64>,
}

/// Columns `0..n` of `lp` are the instance variables, followed by the rows `Ex <= h`.
pub fn base_lp(inst: &MicqpInstance) -> Result<LpModel, LpError> {
    let mut lp = LpModel::new(Sense::Maximize);
    for j in 0..inst.num_vars {
        lp.add_col(inst.lb[j], inst.ub[j], inst.objective[j]);
    }
    for (row, &h) in inst.rows.iter().zip(&inst.rhs) {
        let coeffs: Vec<(usize, f64)> = row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect();
        if coeffs.is_empty() {
            continue;
        }
        lp.add_row(&coeffs, Relation::Le, h)?;
    }
    Ok(lp)
}

/// Cutting-plane solver for `NLP(l, u)` that keeps its relaxation and
/// breakpoint pools between calls with different bounds.
#[derive(Debug, Clone)]
pub struct ConicSolver<'a> {
    inst: &'a MicqpInstance,
    lp: LpModel,
    blocks: Vec<SepBlock>,
}

impl<'a> ConicSolver<'a> {
    pub fn new(inst: &'a MicqpInstance) -> Result<Self, ConicError> {
        let mut lp = base_lp(inst)?;
        let x_cols: Vec<usize> = (0..inst.num_vars).collect();
        let mut blocks = Vec::with_capacity(inst.cones.len());
        for cone in &inst.cones {
            let map = ConeVarMap::from_cone(&mut lp, cone, &x_cols)?;
            let pool = GammaPool::uniform(cone.dim(), &[-1.0, 1.0]);
            blocks.push(attach_sep(&mut lp, &map, pool)?);
        }
        Ok(Self { inst, lp, blocks })
    }

    pub fn set_deadline(&mut self, deadline: Option<std::time::Instant>) {
        self.lp.set_deadline(deadline);
    }

    pub fn num_cuts(&self) -> usize {
        self.blocks.iter().map(|b| b.cut_rows.len()).sum()
    }

    /// Solves `NLP(l, u)`: maximize `c.x` over the cones and rows with `l <= x <= u`.
    pub fn solve(&mut self, l: &[f64], u: &[f64]) -> Result<ConicResult, ConicError> {
        let n = self.inst.num_vars;
        if l.len() != n || u.len() != n {
            return Err(ConicError::Bounds { got: l.len().min(u.len()), n });
        }
        for j in 0..n {
            self.lp.set_var_bounds(j, l[j], u[j])?;
        }
        let mut out = ConicResult {
            status: ConicStatus::IterLimit,
            x: vec![0.0; n],
            obj: f64::INFINITY,
            max_violation: f64::INFINITY,
            rounds: 0,
            lp_solves: 0,
            cuts: 0,
            trace: Vec::new(),
        };
        let mut boxed = false;
        loop {
            let r = self.lp.solve()?;
            out.lp_solves += 1;
            match r.status {
                LpStatus::PrimalInfeasible => {
                    out.status = ConicStatus::Infeasible;
                    out.obj = f64::NEG_INFINITY;
                    return Ok(out);
                }
                LpStatus::Unbounded => {
                    if boxed {
                        return Ok(out);
                    }
                    boxed = true;
                    for j in 0..n {
                        self.lp.set_var_bounds(j, l[j].max(-SAFETY_BOX), u[j].min(SAFETY_BOX))?;
                    }
                    continue;
                }
                LpStatus::Optimal => {}
            }
            out.rounds += 1;
            out.x.copy_from_slice(&r.x[..n]);
            out.obj = r.obj;
            out.trace.push(r.obj);
            out.max_violation = max_cone_violation(self.inst, &out.x).max(0.0);
            if out.max_violation <= CONIC_TOL {
                out.status = settled(boxed, l, u, &out.x);
                break;
            }
            if out.rounds >= MAX_ROUNDS {
                break;
            }
            let mut added = 0;
            for (block, cone) in self.blocks.iter_mut().zip(&self.inst.cones) {
                let viol = cone.violation(&out.x);
                if viol <= CONIC_TOL {
                    continue;
                }
                let tol = adaptive_tol(viol, cone.dim(), r.x[block.map.y0_col]);
                added += block.refine(&mut self.lp, &r.x, tol)?;
            }
            out.cuts += added;
            if added == 0 {
                // the LP columns already satisfy the relaxation; the residual comes from the rows y = Ax + b
                if out.max_violation <= STALL_TOL {
                    out.status = settled(boxed, l, u, &out.x);
                }
                break;
            }
        }
        if boxed {
            for j in 0..n {
                self.lp.set_var_bounds(j, l[j], u[j])?;
            }
        }
        Ok(out)
    }
}

/// `Optimal` unless the safety box is what holds the point in place.
fn settled(boxed: bool, l: &[f64], u: &[f64], x: &[f64]) -> ConicStatus {
    let box_active = boxed
        && (0..x.len()).any(|j| {
            (l[j] < -SAFETY_BOX && x[j] <= -SAFETY_BOX * (1.0 - 1e-9))
                || (u[j] > SAFETY_BOX && x[j] >= SAFETY_BOX * (1.0 - 1e-9))
        });
    if box_active {
        ConicStatus::IterLimit
    } else {
        ConicStatus::Optimal
    }
}

/// Per-coordinate tolerance small enough that a cone with squared violation
/// `viol` always yields at least one cut: if every term satisfies
/// `y_j^2 / y0 - w_j <= tol`, then `||y||^2 - y0^2 <= d * tol * y0`.
pub fn adaptive_tol(viol: f64, d: usize, y0: f64) -> f64 {
    let scale = d as f64 * y0.abs().max(1e-12);
    SEP_TOL.min(0.5 * viol / scale)
}

/// One-shot `NLP(l, u)`.
pub fn solve_conic(inst: &MicqpInstance, l: &[f64], u: &[f64]) -> Result<ConicResult, ConicError> {
    ConicSolver::new(inst)?.solve(l, u)
}
